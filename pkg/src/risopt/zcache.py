"""Deterministic on-disk cache of impedance matrices.

Matrices are stored as JSON with real/imaginary parts spelled out via
``repr``-exact floats, so a save/load cycle is bit-identical and a re-run
writes byte-identical files.  Cache keys are content hashes of the geometry
that produced the matrix.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np

from .errors import RisoptError
from .network import ImpedanceMatrix

FORMAT_NAME = "risopt-zcache"
FORMAT_VERSION = 1

#: Environment variable overriding the cache directory.
CACHE_DIR_ENV = "RISOPT_CACHE_DIR"


def default_cache_dir() -> Path:
    override = os.environ.get(CACHE_DIR_ENV)
    if override:
        return Path(override)
    return Path.home() / ".cache" / "risopt"


def content_hash(payload) -> str:
    """Stable hash of a JSON-serializable payload (dataclasses accepted)."""
    if is_dataclass(payload) and not isinstance(payload, type):
        payload = asdict(payload)
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:24]


def save_zmatrix(z: ImpedanceMatrix, path, provenance=None) -> None:
    """Write the matrix as canonical JSON; floats round-trip exactly."""
    entries = np.asarray(z.entries)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "frequency_hz": float(z.frequency),
        "roles": list(z.roles),
        "re": [[float(v) for v in row] for row in entries.real],
        "im": [[float(v) for v in row] for row in entries.imag],
        "diagnostics": {k: float(v) for k, v in sorted(z.diagnostics.items())},
        "provenance": provenance or {},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_zmatrix(path) -> ImpedanceMatrix:
    """Read a matrix written by :func:`save_zmatrix`."""
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RisoptError(f"cannot read impedance cache {path}: {exc}") from exc
    if doc.get("format") != FORMAT_NAME:
        raise RisoptError(f"{path} is not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise RisoptError(f"unsupported cache version {doc.get('version')!r} in {path}")
    entries = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    return ImpedanceMatrix(
        entries=entries,
        roles=tuple(doc["roles"]),
        frequency=float(doc["frequency_hz"]),
        diagnostics=dict(doc.get("diagnostics", {})),
    )


def cached_build(key_payload, builder, cache_dir=None) -> ImpedanceMatrix:
    """Return the matrix for ``key_payload``, building and caching on miss."""
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = cache_dir / f"z-{content_hash(key_payload)}.json"
    if path.exists():
        return load_zmatrix(path)
    z = builder()
    save_zmatrix(z, path, provenance={"key": content_hash(key_payload)})
    return z
