"""Minimal deterministic SVG charts: line plots and horizontal bar charts."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 400
MARGIN = 56
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def line_chart(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str,
    x_label: str,
    y_label: str,
    diagonal: bool = False,
) -> str:
    """Polylines on the unit square, one per named series."""
    plot_w = WIDTH - 2 * MARGIN
    plot_h = HEIGHT - 2 * MARGIN

    def px(x: float) -> float:
        return MARGIN + x * plot_w

    def py(y: float) -> float:
        return HEIGHT - MARGIN - y * plot_h

    out = _header(WIDTH, HEIGHT, title)
    out.append(f'<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        out.append(f'<text x="{_f(px(t))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{t:.2f}</text>')
        out.append(f'<text x="{MARGIN - 6}" y="{_f(py(t) + 4)}" text-anchor="end">{t:.2f}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="16" y="{HEIGHT / 2:.0f}" text-anchor="middle" transform="rotate(-90 16 {HEIGHT / 2:.0f})">{escape(y_label)}</text>')
    if diagonal:
        out.append(f'<line x1="{_f(px(0))}" y1="{_f(py(0))}" x2="{_f(px(1))}" y2="{_f(py(1))}" stroke="#aaa" stroke-dasharray="4 4"/>')
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{_f(px(x))},{_f(py(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN + 16 + 16 * i
        out.append(f'<line x1="{WIDTH - MARGIN - 110}" y1="{ly - 4}" x2="{WIDTH - MARGIN - 90}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 84}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(bars: Sequence[tuple[str, float, int]], title: str) -> str:
    """Horizontal bars; each entry is (label, value, palette index)."""
    row_h = 22
    label_w = 190
    height = 50 + row_h * len(bars) + 20
    plot_w = WIDTH - label_w - 60
    vmax = max((v for _, v, _ in bars), default=0.0) or 1.0
    out = _header(WIDTH, height, title)
    for i, (label, value, color) in enumerate(bars):
        y = 40 + i * row_h
        w = value / vmax * plot_w
        out.append(f'<text x="{label_w - 6}" y="{y + 14}" text-anchor="end">{escape(label)}</text>')
        out.append(f'<rect x="{label_w}" y="{y + 3}" width="{_f(w)}" height="{row_h - 6}" fill="{PALETTE[color % len(PALETTE)]}"/>')
        out.append(f'<text x="{_f(label_w + w + 4)}" y="{y + 14}">{value:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
