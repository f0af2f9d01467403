"""Result emission: CSV tables, native SVG charts and the run manifest.

The CSV is the primary artifact and must be byte-reproducible, so all
floats are written with ``repr`` (shortest exact round-trip) and infinities
as ``-inf``/``inf``.  Charts are plain hand-assembled SVG to keep the
dependency footprint at zero.
"""

from __future__ import annotations

import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path

CSV_COLUMNS = (
    "config",
    "alpha_deg",
    "eta",
    "brcs_dbsm",
    "tightness",
    "p_t_min_w",
    "iterations",
    "status",
    "seed",
)

#: Qualitative palette, one entry per configuration polyline.
PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)


def _fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(x)


def render_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.config_label,
                    _fmt(r.alpha),
                    _fmt(r.eta),
                    _fmt(r.brcs_dbsm),
                    _fmt(r.tightness),
                    _fmt(r.p_t_min),
                    str(int(r.iterations)),
                    r.status,
                    str(int(r.seed)),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(records, path) -> None:
    Path(path).write_text(render_csv(records))


def _axis_ticks(lo, hi, count=6):
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo == hi:
        lo, hi = lo - 1.0, lo + 1.0
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _line_chart(series, x_label, y_label, title, width=720, height=480):
    """Generic multi-series SVG line chart; series is {label: [(x, y), ...]}."""
    ml, mr, mt, mb = 60, 170, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    points = [p for pts in series.values() for p in pts if math.isfinite(p[1])]
    if not points:
        points = [(0.0, 0.0)]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return mt + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2:.1f}" y="20" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for yt in _axis_ticks(y_lo, y_hi):
        y = py(yt)
        out.append(
            f'<line x1="{ml}" y1="{y:.1f}" x2="{ml + pw}" y2="{y:.1f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(f'<text x="{ml - 8}" y="{y + 4:.1f}" text-anchor="end">{yt:.4g}</text>')
    for xt in _axis_ticks(x_lo, x_hi):
        x = px(xt)
        out.append(
            f'<line x1="{x:.1f}" y1="{mt + ph}" x2="{x:.1f}" y2="{mt + ph + 5}" '
            'stroke="black" stroke-width="1"/>'
        )
        out.append(f'<text x="{x:.1f}" y="{mt + ph + 20}" text-anchor="middle">{xt:.4g}</text>')
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    out.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{x_label}</text>'
    )
    out.append(
        f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{y_label}</text>'
    )
    for idx, (label, pts) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        finite = [(x, y) for x, y in pts if math.isfinite(y)]
        if finite:
            path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in finite)
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}">'
                f"<title>{label}</title></polyline>"
            )
            for x, y in finite:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = mt + 16 * idx
        out.append(
            f'<line x1="{ml + pw + 12}" y1="{ly + 5}" x2="{ml + pw + 34}" y2="{ly + 5}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(f'<text x="{ml + pw + 40}" y="{ly + 9}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _series_by_config(records, value):
    series = {}
    for r in records:
        series.setdefault(r.config_label, []).append((r.alpha, value(r)))
    for pts in series.values():
        pts.sort()
    return series


def render_brcs_svg(records) -> str:
    return _line_chart(
        _series_by_config(records, lambda r: r.brcs_dbsm),
        x_label="observation angle (deg)",
        y_label="BRCS (dBsm)",
        title="Bistatic RCS of the optimally loaded surface",
    )


def render_tightness_svg(records) -> str:
    def log_eps(r):
        if math.isfinite(r.tightness) and r.tightness > 0.0:
            return math.log10(r.tightness)
        return float("nan")

    return _line_chart(
        _series_by_config(records, log_eps),
        x_label="observation angle (deg)",
        y_label="log10 tightness error",
        title="Relaxation tightness across the sweep",
    )


def write_sweep_charts(records, base_path):
    """BRCS and tightness charts next to each other; returns the two paths."""
    base = Path(base_path)
    if base.suffix == ".svg":
        base = base.with_suffix("")
    brcs_path = base.with_name(base.name + "-brcs.svg")
    tight_path = base.with_name(base.name + "-tightness.svg")
    brcs_path.write_text(render_brcs_svg(records))
    tight_path.write_text(render_tightness_svg(records))
    return brcs_path, tight_path


def write_manifest(path, spec_hash, version, outputs, records) -> None:
    """Atomic JSON manifest; timestamps are the only non-reproducible field."""
    statuses = {}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    doc = {
        "spec_hash": spec_hash,
        "tool_version": version,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
        "record_count": len(records),
        "status_summary": dict(sorted(statuses.items())),
    }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    os.replace(tmp, path)
