"""Partitioned multiport impedance model and network reductions.

The wireless link is held as one symmetric complex impedance matrix whose
ports are ordered [tx, surface elements, rx].  Sparse-surface variants are
expressed either as port reductions (open removal, Schur elimination of
shorts, parallel merging of clusters) or, equivalently, as terminations in
:func:`loaded_solve`, which is the independent verification path for the
optimizer output.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NetworkError

ROLE_TX = "tx"
ROLE_RX = "rx"

STATE_TUNABLE = "tunable"
STATE_OPEN = "open"
STATE_SHORT = "short"

#: Sentinel reactance for an element whose optimal current is zero.
OPEN_REACTANCE = np.inf


def surface_role(index):
    """Role label of the surface element with the given zero-based index."""
    return f"s{index}"


def cluster_state(cluster_id):
    """Element state marking membership in a parallel-connected cluster."""
    return f"cluster:{cluster_id}"


def _is_cluster(state):
    return state.startswith("cluster:")


def _cluster_id(state):
    return int(state.split(":", 1)[1])


@dataclass(frozen=True)
class ImpedanceMatrix:
    """Symmetric complex port impedance matrix with per-port role labels.

    ``roles`` contains exactly one ``"tx"`` and one ``"rx"``; every other
    entry labels a surface element port.
    """

    entries: np.ndarray
    roles: tuple
    frequency: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        z = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", z)
        object.__setattr__(self, "roles", tuple(self.roles))
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise NetworkError(f"impedance matrix must be square, got {z.shape}")
        if len(self.roles) != z.shape[0]:
            raise NetworkError("one role label required per port")
        if self.roles.count(ROLE_TX) != 1 or self.roles.count(ROLE_RX) != 1:
            raise NetworkError("exactly one tx and one rx role required")
        asym = np.max(np.abs(z - z.T)) if z.size else 0.0
        scale = max(np.max(np.abs(z)), 1.0)
        if asym > 1e-10 * scale:
            raise NetworkError(f"impedance matrix not symmetric (max asymmetry {asym:.3e})")

    @property
    def n_ports(self):
        return self.entries.shape[0]

    @property
    def tx_index(self):
        return self.roles.index(ROLE_TX)

    @property
    def rx_index(self):
        return self.roles.index(ROLE_RX)

    @property
    def surface_indices(self):
        return tuple(i for i, r in enumerate(self.roles) if r not in (ROLE_TX, ROLE_RX))

    @property
    def n_surface(self):
        return self.n_ports - 2

    def passivity_margin(self):
        """Smallest eigenvalue of the symmetrized real part, in ohms."""
        re = (self.entries.real + self.entries.real.T) / 2.0
        return float(np.linalg.eigvalsh(re)[0])

    def check_passivity(self, rel_tol=1e-8):
        """Raise unless Re(Z) is PSD within ``rel_tol * ||Re Z||``."""
        re = (self.entries.real + self.entries.real.T) / 2.0
        lo = np.linalg.eigvalsh(re)[0]
        if lo < -rel_tol * np.linalg.norm(re, 2):
            raise NetworkError(f"Re(Z) not positive semidefinite (min eigenvalue {lo:.3e})")


@dataclass(frozen=True)
class SurfaceConfig:
    """Per-element state map of a (sparse) surface configuration.

    States are ``"tunable"``, ``"open"``, ``"short"`` or ``"cluster:<id>"``.
    """

    states: tuple
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        valid = {STATE_TUNABLE, STATE_OPEN, STATE_SHORT}
        for s in self.states:
            if s not in valid and not _is_cluster(s):
                raise NetworkError(f"unknown element state {s!r}")

    @property
    def n_elements(self):
        return len(self.states)

    @property
    def tunable_indices(self):
        return tuple(i for i, s in enumerate(self.states) if s == STATE_TUNABLE)

    @property
    def open_indices(self):
        return tuple(i for i, s in enumerate(self.states) if s == STATE_OPEN)

    @property
    def short_indices(self):
        return tuple(i for i, s in enumerate(self.states) if s == STATE_SHORT)

    def clusters(self):
        """Cluster members keyed by cluster id, ids in sorted order."""
        groups = {}
        for i, s in enumerate(self.states):
            if _is_cluster(s):
                groups.setdefault(_cluster_id(s), []).append(i)
        return {cid: tuple(groups[cid]) for cid in sorted(groups)}

    def controls(self):
        """Ordered list of reactance degrees of freedom.

        Tunable elements first (port order), then clusters by id.  Each entry
        is ``("element", index)`` or ``("cluster", id, members)``.
        """
        out = [("element", i) for i in self.tunable_indices]
        out.extend(("cluster", cid, members) for cid, members in self.clusters().items())
        return out


@dataclass(frozen=True)
class PartitionedZ:
    """Blocks of the link impedance matrix in [tx, surface, rx] order."""

    z_t: complex
    z_ts: np.ndarray
    z_tr: complex
    z_s: np.ndarray
    z_sr: np.ndarray
    z_r: complex


@dataclass(frozen=True)
class LoadedSolveResult:
    """Currents and voltages of the terminated network, plus the PTE."""

    currents: np.ndarray
    port_voltages: np.ndarray
    eta: float


def partition(z: ImpedanceMatrix) -> PartitionedZ:
    """Split the matrix into transmitter/surface/receiver blocks."""
    t, r = z.tx_index, z.rx_index
    s = list(z.surface_indices)
    m = z.entries
    return PartitionedZ(
        z_t=complex(m[t, t]),
        z_ts=m[t, s].copy(),
        z_tr=complex(m[t, r]),
        z_s=m[np.ix_(s, s)].copy(),
        z_sr=m[s, r].copy(),
        z_r=complex(m[r, r]),
    )


def assemble(p: PartitionedZ, frequency=0.0) -> ImpedanceMatrix:
    """Inverse of :func:`partition`; ports ordered [tx, surface, rx]."""
    n = len(p.z_ts)
    m = np.zeros((n + 2, n + 2), dtype=complex)
    m[0, 0] = p.z_t
    m[0, 1 : n + 1] = p.z_ts
    m[1 : n + 1, 0] = p.z_ts
    m[0, n + 1] = p.z_tr
    m[n + 1, 0] = p.z_tr
    m[1 : n + 1, 1 : n + 1] = p.z_s
    m[1 : n + 1, n + 1] = p.z_sr
    m[n + 1, 1 : n + 1] = p.z_sr
    m[n + 1, n + 1] = p.z_r
    roles = (ROLE_TX,) + tuple(surface_role(i) for i in range(n)) + (ROLE_RX,)
    return ImpedanceMatrix(m, roles, frequency)


def _check_surface_ports(z, ports):
    ports = list(ports)
    for p in ports:
        if p < 0 or p >= z.n_ports:
            raise NetworkError(f"port index {p} out of range")
        if z.roles[p] in (ROLE_TX, ROLE_RX):
            raise NetworkError(f"port {p} is {z.roles[p]}; only surface ports allowed")
    return ports


def reduce_open(z: ImpedanceMatrix, ports) -> ImpedanceMatrix:
    """Remove open-circuited surface ports (zero current, row/column delete)."""
    ports = _check_surface_ports(z, ports)
    keep = [i for i in range(z.n_ports) if i not in set(ports)]
    return ImpedanceMatrix(
        z.entries[np.ix_(keep, keep)],
        tuple(z.roles[i] for i in keep),
        z.frequency,
    )


def reduce_short(z: ImpedanceMatrix, ports) -> ImpedanceMatrix:
    """Eliminate short-circuited surface ports by Schur complement."""
    ports = _check_surface_ports(z, ports)
    if not ports:
        return z
    shorted = sorted(set(ports))
    keep = [i for i in range(z.n_ports) if i not in set(shorted)]
    zkk = z.entries[np.ix_(keep, keep)]
    zks = z.entries[np.ix_(keep, shorted)]
    zss = z.entries[np.ix_(shorted, shorted)]
    cond = np.linalg.cond(zss)
    if not np.isfinite(cond) or cond > 1e14:
        raise NetworkError(f"shorted block is numerically singular (cond {cond:.3e})")
    reduced = zkk - zks @ np.linalg.solve(zss, zks.T)
    reduced = (reduced + reduced.T) / 2.0
    return ImpedanceMatrix(reduced, tuple(z.roles[i] for i in keep), z.frequency)


def merge_parallel(z: ImpedanceMatrix, clusters) -> ImpedanceMatrix:
    """Merge groups of surface ports into single parallel-connected ports.

    ``clusters`` maps cluster ids to member port indices.  The merged port
    takes the position of the first member; all members share its voltage and
    their currents add.
    """
    members_all = [p for ms in clusters.values() for p in ms]
    if len(set(members_all)) != len(members_all):
        raise NetworkError("cluster memberships overlap")
    _check_surface_ports(z, members_all)
    n = z.n_ports
    merged = set(members_all)
    solo = [i for i in range(n) if i not in merged]
    # Incidence matrix: one column per resulting port.
    cols = []
    labels = []
    order = []
    for i in range(n):
        if i in merged:
            continue
        e = np.zeros(n)
        e[i] = 1.0
        cols.append(e)
        labels.append(z.roles[i])
        order.append(i)
    for cid in sorted(clusters):
        e = np.zeros(n)
        e[list(clusters[cid])] = 1.0
        cols.append(e)
        labels.append(f"c{cid}")
        order.append(min(clusters[cid]))
    # Keep the physical port ordering: sort columns by representative index.
    perm = np.argsort(order, kind="stable")
    b = np.stack(cols, axis=1)[:, perm]
    labels = [labels[i] for i in perm]
    cond = np.linalg.cond(z.entries)
    if not np.isfinite(cond) or cond > 1e14:
        raise NetworkError(f"impedance matrix numerically singular (cond {cond:.3e})")
    y = np.linalg.inv(z.entries)
    y_merged = b.T @ y @ b
    z_merged = np.linalg.inv(y_merged)
    z_merged = (z_merged + z_merged.T) / 2.0
    return ImpedanceMatrix(z_merged, tuple(labels), z.frequency)


def loaded_solve(z: ImpedanceMatrix, config: SurfaceConfig, reactances) -> LoadedSolveResult:
    """Solve the terminated network and evaluate the power transfer efficiency.

    The transmitter port is driven with a unit current, the receiver is
    terminated in its conjugate match, and each control (tunable element or
    cluster) is loaded with the corresponding entry of ``reactances`` in ohms.
    ``inf`` reactances are treated as open circuits.
    """
    if config.n_elements != z.n_surface:
        raise NetworkError(
            f"config has {config.n_elements} elements, matrix has {z.n_surface} surface ports"
        )
    controls = config.controls()
    reactances = np.asarray(reactances, dtype=float)
    if reactances.shape != (len(controls),):
        raise NetworkError(f"expected {len(controls)} reactances, got {reactances.shape}")

    t, r = z.tx_index, z.rx_index
    surf = list(z.surface_indices)
    n = z.n_ports
    zm = z.entries

    # Unknowns: all currents except the unit-driven transmitter.
    unknown = [i for i in range(n) if i != t]
    col = {p: j for j, p in enumerate(unknown)}
    rows = []
    rhs = []

    def add_row(coeffs, b):
        row = np.zeros(len(unknown), dtype=complex)
        acc = complex(b)
        for p, cval in coeffs:
            if p == t:
                acc -= cval  # i_t = 1
            else:
                row[col[p]] += cval
        rows.append(row)
        rhs.append(acc)

    def kvl_coeffs(port):
        return [(q, zm[port, q]) for q in range(n)]

    x_of = {}
    for ctrl, x in zip(controls, reactances):
        x_of[ctrl] = x

    for ctrl in controls:
        x = x_of[ctrl]
        if ctrl[0] == "element":
            p = surf[ctrl[1]]
            if np.isinf(x):
                add_row([(p, 1.0)], 0.0)
            else:
                add_row(kvl_coeffs(p) + [(p, 1j * x)], 0.0)
        else:
            members = [surf[i] for i in ctrl[2]]
            first = members[0]
            for other in members[1:]:
                coeffs = kvl_coeffs(first) + [(q, -c) for q, c in kvl_coeffs(other)]
                add_row(coeffs, 0.0)
            if np.isinf(x):
                add_row([(m, 1.0) for m in members], 0.0)
            else:
                add_row(kvl_coeffs(first) + [(m, 1j * x) for m in members], 0.0)

    for i in config.open_indices:
        add_row([(surf[i], 1.0)], 0.0)
    for i in config.short_indices:
        add_row(kvl_coeffs(surf[i]), 0.0)

    # Conjugate-matched receiver: v_r + conj(z_r) i_r = 0.
    add_row(kvl_coeffs(r) + [(r, np.conj(zm[r, r]))], 0.0)

    a = np.stack(rows)
    b = np.asarray(rhs)
    if a.shape[0] != a.shape[1]:
        raise NetworkError(f"termination system is not square: {a.shape}")
    try:
        sol = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise NetworkError(f"terminated network is singular: {exc}") from exc

    currents = np.zeros(n, dtype=complex)
    currents[t] = 1.0
    currents[unknown] = sol
    voltages = zm @ currents
    eta = pte(currents, z)
    return LoadedSolveResult(currents=currents, port_voltages=voltages, eta=eta)


def pte(currents, z: ImpedanceMatrix) -> float:
    """Power transfer efficiency of a current state on the link network."""
    i = np.asarray(currents, dtype=complex)
    re = (z.entries.real + z.entries.real.T) / 2.0
    denom = float(np.real(i.conj() @ re @ i))
    if denom <= 0.0:
        raise NetworkError(f"non-positive transmit power {denom:.3e}; passivity violated")
    r = z.rx_index
    num = abs(i[r]) ** 2 * float(z.entries[r, r].real)
    return num / denom


def random_passive_network(n_surface, seed=0, coupling=1.0, frequency=1e9) -> ImpedanceMatrix:
    """Random reciprocal passive link matrix for validation exercises.

    Per-port resistances of 30-70 ohm with off-diagonal coupling bounded by
    ``coupling`` ohm; at the default weak coupling the relaxation of such
    networks is reliably rank-1, which makes them suitable for oracle
    cross-checks.  Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    n = n_surface + 2
    diag = 30.0 + 70.0 * rng.random(n)
    a = rng.normal(size=(n, n + 2))
    re = a @ a.T
    re = coupling * re / np.abs(re).max()
    re += np.diag(diag)
    im = rng.normal(scale=coupling, size=(n, n))
    im = (im + im.T) / 2.0
    im += np.diag(rng.normal(scale=20.0, size=n))
    roles = (ROLE_TX,) + tuple(surface_role(i) for i in range(n_surface)) + (ROLE_RX,)
    return ImpedanceMatrix(entries=re + 1j * im, roles=roles, frequency=frequency)


def s_to_z(s, z_ref=50.0):
    """Convert scattering to impedance parameters for one real reference."""
    s = np.asarray(s, dtype=complex)
    n = s.shape[0]
    eye = np.eye(n)
    norm = np.linalg.norm(s, 2)
    if norm > 1.0 + 1e-6:
        raise NetworkError(f"scattering matrix is active (spectral norm {norm:.6f})")
    m = eye - s
    if np.linalg.cond(m) > 1e14:
        raise NetworkError("port reflects perfectly: I - S singular")
    return z_ref * (eye + s) @ np.linalg.inv(m)


def z_to_s(z, z_ref=50.0):
    """Convert impedance to scattering parameters for one real reference."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[0]
    eye = np.eye(n)
    return (z - z_ref * eye) @ np.linalg.inv(z + z_ref * eye)
