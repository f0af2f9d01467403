"""Command-line front end: matrix synthesis, sweeps and verification.

Exit codes are a stable contract: 0 success, 1 usage error, 2 input parse
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .emmodel import LinkGeometry, build_impedance_matrix
from .errors import RisoptError, TouchstoneError
from .network import SurfaceConfig, random_passive_network
from .report import write_csv, write_manifest, write_sweep_charts
from .scenarios import (
    ScenarioSpec,
    SweepRecord,
    dominance_check,
    make_config,
    scenario_z,
    sweep,
)
from .sdr import TIGHTNESS_THRESHOLD, oracle_search, solve_config
from .touchstone import touchstone_import
from .zcache import content_hash, save_zmatrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_NUMERICAL = 3


class InputError(RisoptError):
    """Unreadable or invalid input file; maps to the parse-error exit code."""


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with code 1."""

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        raise SystemExit(EXIT_USAGE if status else EXIT_OK)


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path} must contain a JSON object")
    return doc


def _load_geometry(path) -> LinkGeometry:
    if path is None:
        return LinkGeometry()
    doc = _load_json(path)
    try:
        return LinkGeometry(**doc)
    except (TypeError, RisoptError) as exc:
        raise InputError(f"bad geometry config: {exc}") from exc


def _load_scenario(args) -> ScenarioSpec:
    if args.config is None:
        spec = ScenarioSpec()
    else:
        try:
            spec = ScenarioSpec.from_dict(_load_json(args.config))
        except RisoptError as exc:
            raise InputError(str(exc)) from exc
    if getattr(args, "seed", None) is not None:
        spec = replace(spec, seed=args.seed)
    if getattr(args, "tol_gap", None) is not None:
        spec = replace(spec, tol_gap=args.tol_gap)
    return spec


def cmd_zmat(args) -> int:
    out = Path(args.out)
    if args.import_touchstone:
        z = touchstone_import(args.import_touchstone, role_map=args.roles)
        provenance = {"source": str(args.import_touchstone), "roles": args.roles}
    else:
        geometry = _load_geometry(args.config)
        z = build_impedance_matrix(geometry)
        provenance = {"source": "synthetic", "geometry": content_hash(asdict(geometry))}
    save_zmatrix(z, out, provenance=provenance)
    shift = z.diagnostics.get("passivity_shift_ohm", 0.0)
    print(f"wrote {z.n_ports}-port matrix to {out}")
    print(f"passivity regularization shift: {shift:.3e} ohm")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _load_scenario(args)
    progress = print if args.verbose else None
    records = sweep(spec, threads=args.threads, progress=progress)
    out = Path(args.out)
    write_csv(records, out)
    outputs = [out]
    if args.svg:
        outputs += list(write_sweep_charts(records, args.svg))
    manifest = out.with_suffix(".manifest.json")
    write_manifest(manifest, content_hash(asdict(spec)), __version__, outputs, records)
    outputs.append(manifest)
    print(f"wrote {len(records)} records to {out}")
    failed = [r for r in records if r.status.startswith("Error")]
    if failed and len(failed) == len(records):
        print("all records failed", file=sys.stderr)
        return EXIT_NUMERICAL
    if failed:
        print(f"warning: {len(failed)} records failed; see the status column", file=sys.stderr)
    return EXIT_OK


def _verify_checks(spec: ScenarioSpec, verbose):
    """Yield (name, ok, detail) tuples for the verification suite."""
    zs = {}
    for alpha in spec.alphas:
        zs[alpha] = scenario_z(spec, alpha)
    margins = [zs[a].passivity_margin() for a in spec.alphas]
    yield "passivity", min(margins) > 0.0, f"min Re-eigenvalue {min(margins):.3e} ohm"

    geo = spec.geometry
    options = spec.solver_options()
    records = []
    tight_ok, round_ok, band_ok = True, True, True
    worst_eps, worst_round = 0.0, 0.0
    for kind in spec.config_kinds:
        config = make_config(kind, geo.grid_nx, geo.grid_ny, spec.seed)
        for alpha in spec.alphas:
            out = solve_config(zs[alpha], config, solver_options=options)
            records.append(
                SweepRecord(
                    config_label=kind,
                    alpha=alpha,
                    eta=out.eta,
                    brcs_dbsm=float("nan"),
                    tightness=out.tightness,
                    p_t_min=out.p_t_min,
                    iterations=out.iterations,
                    status=out.status,
                    seed=spec.seed,
                )
            )
            if verbose:
                print(
                    f"  {kind:>18s} alpha {alpha:5.1f}  eta {out.eta:.3e}  "
                    f"eps {out.tightness:.2e}  {out.status}"
                )
            if out.status == "Optimal":
                worst_eps = max(worst_eps, out.tightness)
                if out.tightness > TIGHTNESS_THRESHOLD:
                    tight_ok = False
            if out.tight and out.eta > 0:
                rel = abs(out.eta - out.verify_eta) / out.eta
                worst_round = max(worst_round, rel)
                if rel > 1e-6:
                    round_ok = False
            if not 0.0 <= out.eta <= 1.0 + 1e-9:
                band_ok = False
    yield "tightness", tight_ok, f"worst epsilon {worst_eps:.3e} (threshold {TIGHTNESS_THRESHOLD:g})"
    yield "round-trip", round_ok, f"worst relative mismatch {worst_round:.3e} (threshold 1e-06)"
    yield "efficiency-range", band_ok, "all efficiencies inside [0, 1]"

    if "full" in spec.config_kinds:
        dom = dominance_check(records)
        yield (
            "dominance",
            dom["ok"],
            f"{dom['checked']} comparisons, {len(dom['violations'])} violations",
        )

    toy_z = random_passive_network(3, seed=spec.seed)
    toy_cfg = SurfaceConfig(states=("tunable",) * 3, label="toy")
    toy = solve_config(toy_z, toy_cfg, solver_options=options)
    eta_oracle = oracle_search(toy_z, toy_cfg)
    rel = abs(toy.eta - eta_oracle) / eta_oracle
    yield "oracle", rel <= 1e-3, f"reduced-N relative margin {rel:.3e} (threshold 1e-03)"


def cmd_verify(args) -> int:
    spec = _load_scenario(args)
    failures = 0
    for name, ok, detail in _verify_checks(spec, args.verbose):
        print(f"{'PASS' if ok else 'FAIL'}  {name:<18s} {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} checks failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(
        prog="risopt",
        description="Optimal reactive loading of sparse reconfigurable surfaces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zmat", help="synthesize or import an impedance matrix")
    p.add_argument("--config", help="geometry JSON (defaults to the reference setup)")
    p.add_argument("--out", required=True, help="output cache path (.json)")
    p.add_argument("--import-touchstone", metavar="PATH", help="import an .sNp file instead")
    p.add_argument(
        "--roles", default="tx=1,rx=-1", help="port role map for imports, e.g. tx=1,rx=102"
    )
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_zmat)

    p = sub.add_parser("sweep", help="run a configuration/angle sweep")
    p.add_argument("--config", help="scenario JSON (defaults to the reference sweep)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--svg", help="basename for the BRCS and tightness charts")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--tol-gap", type=float, help="override the solver gap tolerance")
    p.add_argument("--threads", type=int, default=1, help="parallel solve workers")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the self-check suite on a scenario")
    p.add_argument("--config", help="scenario JSON (defaults to the reference sweep)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--tol-gap", type=float, help="override the solver gap tolerance")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, TouchstoneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RisoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
