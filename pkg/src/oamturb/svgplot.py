"""Tiny static SVG line plots (log-x capacity curves with error bars).

CSV files are the canonical outputs; plots are regenerated purely from them.
"""

from __future__ import annotations

import math
from pathlib import Path

from .io import load_curve_csv

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 24, 36, 52


def _nice_ticks(lo: float, hi: float, target: int = 6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def line_plot_svg(
    series,
    xlabel: str,
    ylabel: str,
    title: str = "",
    logx: bool = True,
    width: int = 760,
    height: int = 500,
) -> str:
    """Render line series to an SVG string.

    Each series is a dict with keys x, y, label and optionally err_lo, err_hi
    (absolute half-intervals), color, dashed.
    """
    xs = [v for s in series for v in s["x"]]
    ys = [v for s in series for v in s["y"]]
    if not xs:
        raise ValueError("nothing to plot")
    if logx and min(xs) <= 0:
        raise ValueError("log-x plot requires positive x values")
    x_lo, x_hi = min(xs), max(xs)
    y_lo = min(0.0, min(ys))
    y_hi = max(ys) * 1.05 + 1e-12
    plot_w = width - _MARGIN_L - _MARGIN_R
    plot_h = height - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        if logx:
            fx = (math.log10(x) - math.log10(x_lo)) / (
                math.log10(x_hi) - math.log10(x_lo)
            )
        else:
            fx = (x - x_lo) / (x_hi - x_lo)
        return _MARGIN_L + fx * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>'
        )

    # x ticks: decades (and 2x, 5x subticks) on log axis, nice steps otherwise
    if logx:
        d_lo = math.floor(math.log10(x_lo))
        d_hi = math.ceil(math.log10(x_hi))
        xticks = []
        for d in range(d_lo, d_hi + 1):
            for m in (1.0, 2.0, 5.0):
                v = m * 10.0 ** d
                if x_lo * 0.999 <= v <= x_hi * 1.001:
                    xticks.append(v)
    else:
        xticks = _nice_ticks(x_lo, x_hi)
    for v in xticks:
        x = px(v)
        out.append(
            f'<line x1="{x:.1f}" y1="{_MARGIN_T + plot_h}" x2="{x:.1f}" '
            f'y2="{_MARGIN_T + plot_h + 5}" stroke="#333"/>'
        )
        label = f"{v:g}"
        out.append(
            f'<text x="{x:.1f}" y="{_MARGIN_T + plot_h + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
    for v in _nice_ticks(y_lo, y_hi):
        y = py(v)
        out.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y:.1f}" x2="{_MARGIN_L}" y2="{y:.1f}" '
            'stroke="#333"/>'
        )
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.1f}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{y:.1f}" stroke="#ddd" stroke-width="0.5"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 9}" y="{y + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{height - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>'
    )

    for k, s in enumerate(series):
        color = s.get("color", PALETTE[k % len(PALETTE)])
        dash = ' stroke-dasharray="6 4"' if s.get("dashed") else ""
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s["x"], s["y"]))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.6"{dash}/>'
        )
        err_lo = s.get("err_lo")
        err_hi = s.get("err_hi")
        if err_lo is not None and err_hi is not None:
            for x, y, lo, hi in zip(s["x"], s["y"], err_lo, err_hi):
                if lo == 0.0 and hi == 0.0:
                    continue
                out.append(
                    f'<line x1="{px(x):.2f}" y1="{py(y - lo):.2f}" '
                    f'x2="{px(x):.2f}" y2="{py(y + hi):.2f}" stroke="{color}" '
                    'stroke-width="1"/>'
                )
        ly = _MARGIN_T + 16 + 16 * k
        lx = _MARGIN_L + plot_w - 150
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 26}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.6"{dash}/>'
        )
        out.append(
            f'<text x="{lx + 32}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{s["label"]}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_curve_csvs(csv_paths, labels, out_path, title="", dashed_labels=()) -> None:
    """Re-plot capacity curves straight from their CSV files."""
    series = []
    for path, label in zip(csv_paths, labels):
        x, y, lo, hi = load_curve_csv(path)
        series.append(
            {
                "x": list(x),
                "y": list(y),
                "err_lo": list(lo),
                "err_hi": list(hi),
                "label": label,
                "dashed": label in dashed_labels,
            }
        )
    Path(out_path).write_text(
        line_plot_svg(series, "D/r0", "capacity (bits/photon)", title=title),
        encoding="utf-8",
    )
