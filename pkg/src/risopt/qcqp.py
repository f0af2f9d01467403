"""Real-lifted nonconvex QCQP for maximum power transfer through the surface.

Complex port currents are stacked as c = [Re i; Im i].  Each port carries a
symmetric indefinite form whose value is the real power entering that port;
zero-power constraints on the surface ports, the matched-receiver KVL, the
phase reference and the unit-received-power normalization together form the
program whose minimum total input power gives the maximum efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import QcqpError
from .network import (
    ROLE_RX,
    ROLE_TX,
    ImpedanceMatrix,
    PartitionedZ,
    SurfaceConfig,
    surface_role,
)

#: Impedance base used to condition the lifted problem.
DEFAULT_BASE_IMPEDANCE = 50.0


@dataclass(frozen=True)
class RealQuadraticForm:
    """Symmetric real form whose value is the real power entering one port."""

    matrix: np.ndarray
    port: int


@dataclass(frozen=True)
class AffineConstraints:
    """Stacked affine equality rows A c = b with linearly independent rows."""

    a: np.ndarray
    b: np.ndarray

    def check_rank(self):
        """Raise listing dependent rows unless the rows are independent."""
        if self.a.shape[0] == 0:
            return
        _, rdiag, piv = scipy.linalg.qr(self.a.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(rdiag))
        tol = max(self.a.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        rank = int(np.sum(diag > tol))
        if rank < self.a.shape[0]:
            dependent = sorted(int(i) for i in piv[rank:])
            raise QcqpError(f"affine rows are linearly dependent; dependent rows: {dependent}")


@dataclass(frozen=True)
class QcqpProblem:
    """Objective, zero-power forms and affine rows of the lifted program.

    All quantities are expressed on the impedance base ``scale``; currents of
    the scaled problem relate to physical amperes by sqrt(scale) and
    recovered reactances by a factor of ``scale``.
    """

    objective: np.ndarray
    power_constraints: list
    affine: AffineConstraints
    dimension: int
    scale: float
    labels: list
    controls: list
    norm_index: int
    norm_value: float


def real_lift(i):
    """Stack a complex vector as [Re i; Im i]."""
    i = np.asarray(i, dtype=complex)
    return np.concatenate([i.real, i.imag])


def real_unlift(c):
    """Inverse of :func:`real_lift`."""
    c = np.asarray(c, dtype=float)
    if c.size % 2:
        raise QcqpError(f"lifted vector must have even length, got {c.size}")
    half = c.size // 2
    return c[:half] + 1j * c[half:]


def lift_hermitian(m):
    """Real symmetric form of a Hermitian matrix: c^T Q c = i^H M i."""
    mr = np.real(m)
    mi = np.imag(m)
    return np.block([[mr, -mi], [mi, mr]])


def build_port_power_form(z, n) -> RealQuadraticForm:
    """Form Q_n with c^T Q_n c = Re(v_n conj(i_n)) / 2, v = Z i."""
    z = z.entries if isinstance(z, ImpedanceMatrix) else np.asarray(z, dtype=complex)
    nn = z.shape[0]
    if not 0 <= n < nn:
        raise QcqpError(f"port index {n} out of range for {nn} ports")
    # Hermitian M with i^H M i = 2 Re(v_n conj(i_n)).
    enz = np.zeros_like(z)
    enz[n, :] = z[n, :]
    m = enz + enz.conj().T
    q = lift_hermitian(m) / 4.0
    return RealQuadraticForm(matrix=(q + q.T) / 2.0, port=n)


def _complex_row(coeffs, n_ports):
    """Real/imag affine rows of one complex linear equation sum(a_p i_p) = 0."""
    a = np.zeros(n_ports, dtype=complex)
    for p, val in coeffs:
        a[p] += val
    row_re = np.concatenate([a.real, -a.imag])
    row_im = np.concatenate([a.imag, a.real])
    return row_re, row_im


def build_receiver_constraints(part: PartitionedZ) -> AffineConstraints:
    """Matched-receiver KVL, phase reference and P_r = 1 W normalization."""
    r_rx = part.z_r.real
    if r_rx <= 0.0:
        raise QcqpError(f"receiver resistance must be positive, got {r_rx}")
    n = len(part.z_ts)
    n_ports = n + 2
    rx = n_ports - 1
    coeffs = [(0, part.z_tr)]
    coeffs += [(1 + k, part.z_sr[k]) for k in range(n)]
    coeffs.append((rx, 2.0 * r_rx))
    kvl_re, kvl_im = _complex_row(coeffs, n_ports)
    phase = np.zeros(2 * n_ports)
    phase[n_ports + rx] = 1.0  # Im i_r = 0
    norm = np.zeros(2 * n_ports)
    norm[rx] = 1.0  # Re i_r pinned below
    a = np.stack([kvl_re, kvl_im, phase, norm])
    b = np.array([0.0, 0.0, 0.0, math.sqrt(2.0 / r_rx)])
    return AffineConstraints(a=a, b=b)


def build_config_constraints(z, config: SurfaceConfig):
    """Zero-power forms and affine rows realizing one surface configuration.

    Returns ``(forms, labels, a_rows, b_rows)``.  Forms follow the control
    order of :meth:`SurfaceConfig.controls`.
    """
    z = z.entries if isinstance(z, ImpedanceMatrix) else np.asarray(z, dtype=complex)
    n_ports = z.shape[0]
    n = n_ports - 2
    if config.n_elements != n:
        raise QcqpError(f"config has {config.n_elements} elements, matrix expects {n}")

    forms = []
    labels = []
    a_rows = []
    b_rows = []

    for ctrl in config.controls():
        if ctrl[0] == "element":
            port = 1 + ctrl[1]
            forms.append(build_port_power_form(z, port))
            labels.append(f"P[{surface_role(ctrl[1])}] = 0")
        else:
            cid, members = ctrl[1], ctrl[2]
            ports = [1 + i for i in members]
            first = ports[0]
            for other in ports[1:]:
                coeffs = [(q, z[first, q]) for q in range(n_ports)]
                coeffs += [(q, -z[other, q]) for q in range(n_ports)]
                row_re, row_im = _complex_row(coeffs, n_ports)
                a_rows += [row_re, row_im]
                b_rows += [0.0, 0.0]
            total = np.zeros((2 * n_ports, 2 * n_ports))
            for p in ports:
                total += build_port_power_form(z, p).matrix
            forms.append(RealQuadraticForm(matrix=total, port=first))
            labels.append(f"P[cluster {cid}] = 0")

    for i in config.open_indices:
        port = 1 + i
        for half in (0, 1):
            row = np.zeros(2 * n_ports)
            row[half * n_ports + port] = 1.0
            a_rows.append(row)
            b_rows.append(0.0)

    for i in config.short_indices:
        port = 1 + i
        row_re, row_im = _complex_row([(q, z[port, q]) for q in range(n_ports)], n_ports)
        a_rows += [row_re, row_im]
        b_rows += [0.0, 0.0]

    a = np.stack(a_rows) if a_rows else np.zeros((0, 2 * n_ports))
    return forms, labels, a, np.asarray(b_rows)


def _require_canonical(z: ImpedanceMatrix):
    n = z.n_ports - 2
    expected = (ROLE_TX,) + tuple(surface_role(i) for i in range(n)) + (ROLE_RX,)
    if z.roles != expected:
        raise QcqpError("impedance matrix ports must be ordered [tx, surface..., rx]")


def assemble_qcqp(
    z: ImpedanceMatrix, config: SurfaceConfig, base_impedance=DEFAULT_BASE_IMPEDANCE
) -> QcqpProblem:
    """Build the full program on the given impedance base.

    The objective sums the port power forms over all ports; with received
    power pinned to one watt its value is the transmit power, so the optimal
    efficiency is its reciprocal.
    """
    _require_canonical(z)
    zs = z.entries / base_impedance
    n_ports = z.n_ports
    dim = 2 * n_ports

    objective = np.zeros((dim, dim))
    for p in range(n_ports):
        objective += build_port_power_form(zs, p).matrix
    objective = (objective + objective.T) / 2.0

    part_scaled = PartitionedZ(
        z_t=complex(zs[0, 0]),
        z_ts=zs[0, 1:-1].copy(),
        z_tr=complex(zs[0, -1]),
        z_s=zs[1:-1, 1:-1].copy(),
        z_sr=zs[1:-1, -1].copy(),
        z_r=complex(zs[-1, -1]),
    )
    rx_rows = build_receiver_constraints(part_scaled)
    forms, labels, cfg_a, cfg_b = build_config_constraints(zs, config)

    a = np.vstack([rx_rows.a, cfg_a])
    b = np.concatenate([rx_rows.b, cfg_b])
    affine = AffineConstraints(a=a, b=b)
    affine.check_rank()

    return QcqpProblem(
        objective=objective,
        power_constraints=forms,
        affine=affine,
        dimension=dim,
        scale=base_impedance,
        labels=labels,
        controls=config.controls(),
        norm_index=n_ports - 1,
        norm_value=float(rx_rows.b[3]),
    )
