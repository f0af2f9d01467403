"""Touchstone 1.x S-parameter import/export.

Supports ``.sNp`` files in RI/MA/DB formats with any option-line ordering,
the classic 2-port column quirk (S11 S21 S12 S22), wrapped data lines, and
2-port noise-parameter sections (detected by the frequency running backwards
and skipped).  Only S-type files are accepted; conversion to impedance uses
the shared reference-impedance transform.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

from .errors import TouchstoneError
from .network import ROLE_RX, ROLE_TX, ImpedanceMatrix, s_to_z, surface_role, z_to_s

_UNIT_SCALE = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def _port_count(path) -> int:
    m = re.fullmatch(r"\.s(\d+)p", Path(path).suffix, flags=re.IGNORECASE)
    if not m:
        raise TouchstoneError(f"cannot infer port count from suffix {Path(path).suffix!r}")
    n = int(m.group(1))
    if not 1 <= n <= 1024:
        raise TouchstoneError(f"port count {n} outside the supported range 1..1024")
    return n


def _parse_options(tokens, line_no):
    unit, kind, fmt, z_ref = "GHZ", "S", "MA", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in _UNIT_SCALE:
            unit = tok
        elif tok in ("S", "Y", "Z", "G", "H"):
            kind = tok
        elif tok in ("RI", "MA", "DB"):
            fmt = tok
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneError("option line ends after R", line=line_no)
            try:
                z_ref = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(
                    f"bad reference impedance {tokens[i + 1]!r}", line=line_no
                ) from None
            i += 1
        else:
            raise TouchstoneError(f"unknown option token {tok!r}", line=line_no)
        i += 1
    if kind != "S":
        raise TouchstoneError(f"only S-parameter files are supported, got {kind}", line=line_no)
    if z_ref <= 0:
        raise TouchstoneError(f"reference impedance must be positive, got {z_ref}", line=line_no)
    return unit, fmt, z_ref


def _pair_to_complex(a, b, fmt):
    if fmt == "RI":
        return complex(a, b)
    if fmt == "DB":
        a = 10.0 ** (a / 20.0)
    return a * complex(math.cos(math.radians(b)), math.sin(math.radians(b)))


def read_touchstone(path):
    """Parse a Touchstone file into ``(frequencies_hz, s_matrices, z_ref)``."""
    n = _port_count(path)
    values_per_point = 1 + 2 * n * n
    tokens = []  # (value, line_no)
    options = None
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise TouchstoneError(f"cannot read {path}: {exc}") from exc
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if options is None:
                options = _parse_options(line[1:].split(), line_no)
            continue
        if line.startswith("["):
            raise TouchstoneError(
                "keyword sections belong to Touchstone 2.x; only 1.x is supported",
                line=line_no,
            )
        for tok in line.split():
            try:
                tokens.append((float(tok), line_no))
            except ValueError:
                raise TouchstoneError(f"non-numeric data token {tok!r}", line=line_no) from None
    if options is None:
        options = ("GHZ", "MA", 50.0)
    unit, fmt, z_ref = options
    scale = _UNIT_SCALE[unit]

    freqs = []
    mats = []
    pos = 0
    noise_section = False
    while pos + values_per_point <= len(tokens):
        freq = tokens[pos][0] * scale
        if n == 2 and freqs and freq <= freqs[-1]:
            noise_section = True
            break  # noise-parameter section: frequency restarts downward
        block = [tokens[pos + 1 + k][0] for k in range(2 * n * n)]
        s = np.empty((n, n), dtype=complex)
        for idx in range(n * n):
            val = _pair_to_complex(block[2 * idx], block[2 * idx + 1], fmt)
            if n == 2:
                # 1.x two-port files are column-major: S11 S21 S12 S22.
                s[idx % 2, idx // 2] = val
            else:
                s[idx // n, idx % n] = val
        freqs.append(freq)
        mats.append(s)
        pos += values_per_point
    if not freqs:
        raise TouchstoneError(f"no complete data point in {path} (expected {values_per_point} values)")
    if pos < len(tokens) and not noise_section:
        raise TouchstoneError(
            f"trailing data: {len(tokens) - pos} values do not form a point",
            line=tokens[pos][1],
        )
    return np.asarray(freqs), mats, z_ref


def parse_role_map(text, n_ports):
    """Role mapping like ``"tx=1,rx=102"`` (1-based ports) to a role tuple."""
    assigned = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            role, port = item.split("=")
            port = int(port)
        except ValueError:
            raise TouchstoneError(f"bad role assignment {item!r}") from None
        role = role.strip().lower()
        if role not in (ROLE_TX, ROLE_RX):
            raise TouchstoneError(f"role must be tx or rx, got {role!r}")
        if not 1 <= port <= n_ports:
            raise TouchstoneError(f"port {port} outside 1..{n_ports}")
        if role in assigned.values() or port in assigned:
            raise TouchstoneError(f"duplicate assignment {item!r}")
        assigned[port] = role
    if len(assigned) != 2:
        raise TouchstoneError(f"role map must assign both tx and rx, got {text!r}")
    roles = []
    surface = 0
    for port in range(1, n_ports + 1):
        if port in assigned:
            roles.append(assigned[port])
        else:
            roles.append(surface_role(surface))
            surface += 1
    return tuple(roles)


def touchstone_import(path, role_map="tx=1,rx=-1", frequency_index=0) -> ImpedanceMatrix:
    """Impedance matrix from a Touchstone file with a tx/rx port mapping.

    ``-1`` in the role map means the last port.  Multi-frequency files are
    indexed by ``frequency_index``.
    """
    freqs, mats, z_ref = read_touchstone(path)
    n = mats[0].shape[0]
    role_map = role_map.replace("=-1", f"={n}")
    roles = parse_role_map(role_map, n)
    if not -len(freqs) <= frequency_index < len(freqs):
        raise TouchstoneError(
            f"frequency index {frequency_index} outside the {len(freqs)} stored points"
        )
    s = mats[frequency_index]
    z = s_to_z(s, z_ref)
    z = (z + z.T) / 2.0  # reciprocal network; symmetrize away format rounding
    return ImpedanceMatrix(entries=z, roles=roles, frequency=float(freqs[frequency_index]))


def touchstone_export(z: ImpedanceMatrix, path, z_ref=50.0) -> None:
    """Write a 1.x RI file for the matrix (single frequency point)."""
    s = z_to_s(z.entries, z_ref)
    n = s.shape[0]
    path = Path(path)
    expected = f".s{n}p"
    if path.suffix.lower() != expected:
        raise TouchstoneError(f"export path must end in {expected}, got {path.suffix!r}")
    lines = ["! single-point S-parameter export", f"# HZ S RI R {z_ref:g}"]
    # repr(float(...)) keeps full precision and round-trips exactly.
    num = lambda x: repr(float(x))
    if n == 2:
        order = [s[0, 0], s[1, 0], s[0, 1], s[1, 1]]
        row = [num(z.frequency)]
        for val in order:
            row.append(f"{num(val.real)} {num(val.imag)}")
        lines.append(" ".join(row))
    else:
        lines.append(num(z.frequency))
        for i in range(n):
            lines.append(" ".join(f"{num(s[i, j].real)} {num(s[i, j].imag)}" for j in range(n)))
    path.write_text("\n".join(lines) + "\n")
