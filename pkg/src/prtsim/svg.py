"""Minimal static SVG charts: a line chart and grouped bars."""

from __future__ import annotations

from html import escape
from typing import Mapping, Sequence

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60
COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    step = 10 ** len(str(int(v))) / 10
    top = step
    while top < v * 1.05:
        top += step / 2
    return top


def _frame(title: str, x_label: str, y_label: str, y_max: float) -> list[str]:
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
        f'<text x="{LEFT + pw / 2}" y="{H - 15}" text-anchor="middle">{escape(x_label)}</text>',
        f'<text x="18" y="{TOP + ph / 2}" text-anchor="middle" transform="rotate(-90 18 {TOP + ph / 2})">'
        f"{escape(y_label)}</text>",
    ]
    for i in range(6):
        val = y_max * i / 5
        y = TOP + ph - ph * i / 5
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.1f}" x2="{LEFT}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.1f}" text-anchor="end">{val:g}</text>')
    return out


def line_chart(
    points: Sequence[tuple[float, float]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    hline: float | None = None,
) -> str:
    """Polyline through ``points`` with an optional dashed horizontal reference line."""
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    pts = sorted(points)
    y_max = _nice_max(max([y for _, y in pts] + [hline or 0.0]))
    if pts:
        x0, x1 = pts[0][0], pts[-1][0]
    else:
        x0, x1 = 0.0, 1.0
    span = (x1 - x0) or 1.0

    def sx(x):
        return LEFT + pw * (x - x0) / span

    def sy(y):
        return TOP + ph - ph * y / y_max

    out = _frame(title, x_label, y_label, y_max)
    for x, _ in pts:
        out.append(f'<text x="{sx(x):.1f}" y="{TOP + ph + 18}" text-anchor="middle">{x:g}</text>')
    if hline is not None:
        out.append(
            f'<line x1="{LEFT}" y1="{sy(hline):.1f}" x2="{LEFT + pw}" y2="{sy(hline):.1f}" '
            'stroke="red" stroke-dasharray="6,4"/>'
        )
    if pts:
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        out.append(f'<polyline points="{path}" fill="none" stroke="{COLORS[0]}" stroke-width="2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{COLORS[0]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def grouped_bars(
    groups: Sequence[str],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    y_label: str = "",
) -> str:
    """One cluster per group, one bar per series inside each cluster, with a legend."""
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    names = list(series)
    y_max = _nice_max(max((v for vals in series.values() for v in vals), default=0.0))
    out = _frame(title, "", y_label, y_max)
    slot = pw / max(1, len(groups))
    bar = slot * 0.8 / max(1, len(names))
    for gi, g in enumerate(groups):
        gx = LEFT + slot * gi + slot * 0.1
        out.append(f'<text x="{LEFT + slot * (gi + 0.5):.1f}" y="{TOP + ph + 18}" text-anchor="middle">{escape(g)}</text>')
        for si, name in enumerate(names):
            v = series[name][gi]
            h = ph * v / y_max
            out.append(
                f'<rect x="{gx + si * bar:.1f}" y="{TOP + ph - h:.1f}" width="{bar * 0.9:.1f}" height="{h:.1f}" '
                f'fill="{COLORS[si % len(COLORS)]}"/>'
            )
    for si, name in enumerate(names):
        y = TOP + 14 * si
        out.append(f'<rect x="{W - RIGHT - 110}" y="{y}" width="10" height="10" fill="{COLORS[si % len(COLORS)]}"/>')
        out.append(f'<text x="{W - RIGHT - 95}" y="{y + 9}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
