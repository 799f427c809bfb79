"""Minimal static SVG plots: ECDF step curves and integer histograms.

No plotting dependency and no timestamps, so outputs are byte-stable and
diffable; the plotted numbers are embedded as a comment table.
"""

from __future__ import annotations

from typing import Mapping, Sequence

WIDTH = 640
HEIGHT = 400
MARGIN = 56

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"]


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _axes(title: str, x_label: str, y_label: str) -> list[str]:
    x0, y0 = MARGIN, HEIGHT - MARGIN
    x1, y1 = WIDTH - MARGIN, MARGIN
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>',
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT // 2})">{y_label}</text>',
    ]


def _scale(lo: float, hi: float, pixel_lo: int, pixel_hi: int):
    span = hi - lo if hi > lo else 1.0

    def to_pixel(v: float) -> float:
        return pixel_lo + (v - lo) / span * (pixel_hi - pixel_lo)

    return to_pixel


def ecdf_plot(
    curves: Mapping[str, Sequence[tuple[float, float]]],
    title: str,
    x_label: str = "x",
) -> str:
    """Step plot of one or more ECDFs, with a legend and a data comment."""
    parts = _axes(title, x_label, "cumulative fraction")
    xs = [x for curve in curves.values() for x, _ in curve]
    if not xs:
        xs = [0.0, 1.0]
    x_of = _scale(min(xs), max(xs), MARGIN, WIDTH - MARGIN)
    y_of = _scale(0.0, 1.0, HEIGHT - MARGIN, MARGIN)
    parts.append("<!-- data")
    for name in sorted(curves):
        for x, f in curves[name]:
            parts.append(f"{name},{_fmt(x)},{_fmt(f)}")
    parts.append("-->")
    for i, name in enumerate(sorted(curves)):
        curve = curves[name]
        if not curve:
            continue
        color = _COLORS[i % len(_COLORS)]
        points = [f"{x_of(curve[0][0]):.1f},{y_of(0.0):.1f}"]
        prev_f = 0.0
        for x, f in curve:
            points.append(f"{x_of(x):.1f},{y_of(prev_f):.1f}")
            points.append(f"{x_of(x):.1f},{y_of(f):.1f}")
            prev_f = f
        points.append(f"{x_of(max(xs)):.1f},{y_of(prev_f):.1f}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{" ".join(points)}"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 16 + 16 * i}" '
            f'text-anchor="end" font-family="sans-serif" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram_plot(
    series: Mapping[str, Sequence[tuple[int, int]]],
    title: str,
    x_label: str = "size",
) -> str:
    """Side-by-side bars of integer-valued histograms."""
    parts = _axes(title, x_label, "frequency")
    xs = [x for bars in series.values() for x, _ in bars]
    ys = [y for bars in series.values() for _, y in bars]
    if not xs:
        xs, ys = [0], [1]
    x_of = _scale(min(xs) - 0.5, max(xs) + 0.5, MARGIN, WIDTH - MARGIN)
    y_of = _scale(0, max(ys), HEIGHT - MARGIN, MARGIN)
    names = sorted(series)
    slot = (x_of(1) - x_of(0)) if max(xs) > min(xs) else (WIDTH - 2 * MARGIN)
    bar_w = max(1.0, min(12.0, slot / (len(names) + 1)))
    parts.append("<!-- data")
    for name in names:
        for x, y in series[name]:
            parts.append(f"{name},{x},{y}")
    parts.append("-->")
    for i, name in enumerate(names):
        color = _COLORS[i % len(_COLORS)]
        for x, y in series[name]:
            px = x_of(x) + (i - (len(names) - 1) / 2) * bar_w
            py = y_of(y)
            parts.append(
                f'<rect x="{px - bar_w / 2:.1f}" y="{py:.1f}" '
                f'width="{bar_w:.1f}" height="{HEIGHT - MARGIN - py:.1f}" '
                f'fill="{color}" fill-opacity="0.8"/>'
            )
        parts.append(
            f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 16 + 16 * i}" '
            f'text-anchor="end" font-family="sans-serif" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
