"""Configuration families, angle sweeps and dominance reporting.

A scenario couples one link geometry with a set of surface configurations
and a list of observation angles; sweeping it produces one record per
(configuration, angle) with the optimal efficiency, the equivalent bistatic
radar cross section and solver diagnostics.  Everything is deterministic
given the scenario (including its seed), so repeated sweeps emit identical
tables.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .emmodel import LinkGeometry, build_impedance_matrix
from .errors import RisoptError
from .metrics import LinkBudget, brcs_from_pte
from .network import (
    STATE_OPEN,
    STATE_SHORT,
    STATE_TUNABLE,
    SurfaceConfig,
    cluster_state,
)
from .sdp import SolverOptions
from .sdr import solve_config
from .touchstone import touchstone_import
from .zcache import cached_build, load_zmatrix

#: Sweep-order configuration kinds of the default scenario.
DEFAULT_CONFIG_KINDS = (
    "full",
    "clusters-2x2",
    "center-removed-2x2",
    "center-removed-4x4",
    "random-75",
    "random-50",
    "subarrays-2x2x9",
    "reference-open",
)

#: Kinds whose non-tunable elements are open or shorted; their optimum is a
#: feasible point of the full problem, so the full curve must dominate.
DOMINATED_KINDS = frozenset(
    ["center-removed-2x2", "center-removed-4x4", "random-75", "random-50", "subarrays-2x2x9"]
)

DEFAULT_ALPHAS = tuple(float(a) for a in range(0, 81, 10))


def _center_band(n, width):
    if n < width:
        raise RisoptError(f"grid dimension {n} too small for a {width}-wide removed center")
    lo = (n - width) // 2
    return range(lo, lo + width)


def _subarray_starts(n):
    """Start indices of three 2-wide blocks spread uniformly along one axis."""
    if n < 6:
        raise RisoptError(f"grid dimension {n} too small for three 2-wide subarrays")
    return [round((k + 1) * (n - 6) / 4) + 2 * k for k in range(3)]


def make_config(kind, grid_nx=10, grid_ny=10, seed=0) -> SurfaceConfig:
    """Element-state map of one named configuration kind.

    Indexing follows the element grid: element ``iz * grid_nx + iy`` sits in
    row ``iz`` (vertical) and column ``iy``.
    """
    n = grid_nx * grid_ny
    states = [STATE_TUNABLE] * n

    def at(iy, iz):
        return iz * grid_nx + iy

    if kind == "full":
        pass
    elif kind == "clusters-2x2":
        if grid_nx % 2 or grid_ny % 2:
            raise RisoptError("clusters-2x2 needs even grid dimensions")
        for iz in range(grid_ny):
            for iy in range(grid_nx):
                states[at(iy, iz)] = cluster_state((iz // 2) * (grid_nx // 2) + iy // 2)
    elif kind in ("center-removed-2x2", "center-removed-4x4"):
        width = 2 if kind.endswith("2x2") else 4
        for iz in _center_band(grid_ny, width):
            for iy in _center_band(grid_nx, width):
                states[at(iy, iz)] = STATE_OPEN
    elif kind in ("random-75", "random-50"):
        fraction = 0.75 if kind.endswith("75") else 0.50
        keep = round(fraction * n)
        rng = np.random.default_rng(seed)
        chosen = set(rng.choice(n, size=keep, replace=False).tolist())
        states = [STATE_TUNABLE if i in chosen else STATE_OPEN for i in range(n)]
    elif kind == "subarrays-2x2x9":
        states = [STATE_SHORT] * n
        for z0 in _subarray_starts(grid_ny):
            for y0 in _subarray_starts(grid_nx):
                for dz in range(2):
                    for dy in range(2):
                        states[at(y0 + dy, z0 + dz)] = STATE_TUNABLE
    elif kind == "reference-open":
        states = [STATE_OPEN] * n
    else:
        raise RisoptError(f"unknown configuration kind {kind!r}")
    return SurfaceConfig(states=tuple(states), seed=seed, label=kind)


@dataclass(frozen=True)
class ScenarioSpec:
    """One sweep: geometry template, configuration kinds, angles, solver knobs."""

    geometry: LinkGeometry = field(default_factory=LinkGeometry)
    config_kinds: tuple = DEFAULT_CONFIG_KINDS
    alphas: tuple = DEFAULT_ALPHAS
    beta: float = -10.0
    seed: int = 0
    tol_gap: float = 1e-9
    tol_feas: float = 1e-9
    max_iter: int = 200
    z_source: str = "synthetic"  # or a path to a cached matrix / Touchstone file
    cache_dir: str = None

    def __post_init__(self):
        if not self.alphas:
            raise RisoptError("scenario needs at least one observation angle")
        if not self.config_kinds:
            raise RisoptError("scenario needs at least one configuration kind")
        object.__setattr__(self, "config_kinds", tuple(self.config_kinds))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    def solver_options(self, verbose=False, log=None) -> SolverOptions:
        return SolverOptions(
            tol_gap=self.tol_gap,
            tol_feas=self.tol_feas,
            max_iter=self.max_iter,
            verbose=verbose,
            log=log,
        )

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, doc) -> "ScenarioSpec":
        doc = dict(doc)
        geo = doc.pop("geometry", {})
        unknown = set(doc) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise RisoptError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            geometry = LinkGeometry(**geo)
        except TypeError as exc:
            raise RisoptError(f"bad geometry section: {exc}") from exc
        try:
            return cls(geometry=geometry, **doc)
        except TypeError as exc:
            raise RisoptError(f"bad scenario section: {exc}") from exc

    @classmethod
    def from_json(cls, text) -> "ScenarioSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RisoptError(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise RisoptError("scenario JSON must be an object")
        return cls.from_dict(doc)


@dataclass(frozen=True)
class SweepRecord:
    """One (configuration, angle) result row."""

    config_label: str
    alpha: float
    eta: float
    brcs_dbsm: float
    tightness: float
    p_t_min: float
    iterations: int
    status: str
    seed: int
    reactances: tuple = ()


def scenario_z(spec: ScenarioSpec, alpha):
    """Impedance matrix for one observation angle, honoring the Z source."""
    if spec.z_source == "synthetic":
        geometry = replace(spec.geometry, alpha=float(alpha), beta=spec.beta)
        return cached_build(
            asdict(geometry), lambda: build_impedance_matrix(geometry), cache_dir=spec.cache_dir
        )
    if spec.z_source.lower().endswith(".json"):
        return load_zmatrix(spec.z_source)
    return touchstone_import(spec.z_source)


def _solve_record(z, config, alpha, budget, options, seed) -> SweepRecord:
    try:
        out = solve_config(z, config, solver_options=options)
    except RisoptError as exc:
        return SweepRecord(
            config_label=config.label,
            alpha=float(alpha),
            eta=float("nan"),
            brcs_dbsm=float("nan"),
            tightness=float("nan"),
            p_t_min=float("nan"),
            iterations=0,
            status=f"Error({type(exc).__name__})",
            seed=seed,
        )
    eta = min(max(out.eta, 0.0), 1.0)
    _, dbsm = brcs_from_pte(eta, budget)
    return SweepRecord(
        config_label=config.label,
        alpha=float(alpha),
        eta=out.eta,
        brcs_dbsm=dbsm,
        tightness=out.tightness,
        p_t_min=out.p_t_min,
        iterations=out.iterations,
        status=out.status if out.tight else f"{out.status}(nontight)",
        seed=seed,
        reactances=tuple(out.reactances),
    )


def sweep(spec: ScenarioSpec, threads=1, progress=None):
    """All records of a scenario, ordered by (configuration, angle).

    Per-record solver failures land in the record's status; the sweep keeps
    going.  ``progress`` receives one text line per finished record.
    """
    geo = spec.geometry
    configs = [
        make_config(kind, geo.grid_nx, geo.grid_ny, spec.seed) for kind in spec.config_kinds
    ]
    budget = LinkBudget.from_geometry(geo)
    options = spec.solver_options()
    zs = {alpha: scenario_z(spec, alpha) for alpha in spec.alphas}

    jobs = [(config, alpha) for config in configs for alpha in spec.alphas]

    def run(job):
        config, alpha = job
        return _solve_record(zs[alpha], config, alpha, budget, options, spec.seed)

    def collect(iterable):
        records = []
        for rec in iterable:
            records.append(rec)
            if progress is not None:
                progress(
                    f"{rec.config_label:>18s} alpha {rec.alpha:5.1f}  "
                    f"brcs {rec.brcs_dbsm:8.2f} dBsm  {rec.status}"
                )
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return collect(pool.map(run, jobs))
    return collect(run(job) for job in jobs)


def dominance_check(records, margin=1e-6):
    """Full-surface dominance report over open/short-based configurations.

    The optimum of a configuration whose fixed elements are open or shorted
    is feasible for the fully tunable problem, so the full curve can be at
    most ``margin`` below it.  Cluster configurations are exempt: their
    equal-voltage rows are not a constraint subset.
    """
    full = {r.alpha: r.eta for r in records if r.config_label == "full"}
    if not full:
        raise RisoptError("dominance check needs records of the 'full' configuration")
    checked = 0
    violations = []
    for rec in records:
        if rec.config_label not in DOMINATED_KINDS or rec.alpha not in full:
            continue
        if not np.isfinite(rec.eta):
            continue
        checked += 1
        gap = full[rec.alpha] - rec.eta
        if gap < -margin:
            violations.append({"config": rec.config_label, "alpha": rec.alpha, "gap": gap})
    return {"ok": not violations, "checked": checked, "violations": violations}
