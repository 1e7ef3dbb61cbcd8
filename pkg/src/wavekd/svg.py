"""Bar chart emitted as plain SVG text (fixed 800x400 viewBox)."""

from __future__ import annotations

import math
from typing import Sequence

WIDTH = 800
HEIGHT = 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 20, 40, 60
_COLORS = {"LL": "#4c72b0", "LH": "#dd8452", "HL": "#55a868", "HH": "#c44e52"}


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= v:
            return m * mag
    return 10 * mag


def band_bar_chart(names: Sequence[str], values: Sequence[float], title: str = "") -> str:
    """One bar per band, in the order given, with a gap wherever the level changes."""
    if len(names) != len(values) or not names:
        raise ValueError("names and values must be non-empty and of equal length")
    plot_w = WIDTH - _LEFT - _RIGHT
    plot_h = HEIGHT - _TOP - _BOTTOM
    levels = [n[2:] for n in names]
    gaps = sum(1 for a, b in zip(levels, levels[1:]) if a != b)
    slot = plot_w / (len(names) + 0.5 * gaps)
    top = _nice_max(max(values))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{_esc(title)}</text>',
    ]
    for i in range(5):
        frac = i / 4
        y = _TOP + plot_h * (1 - frac)
        out.append(f'<line x1="{_LEFT}" y1="{y:.2f}" x2="{WIDTH - _RIGHT}" y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{_LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{top * frac:.4g}</text>')
    x = float(_LEFT)
    for i, (name, v) in enumerate(zip(names, values)):
        if i and levels[i] != levels[i - 1]:
            x += 0.5 * slot
        h = plot_h * (v / top) if top else 0.0
        color = _COLORS.get(name[:2], "#888888")
        out.append(
            f'<rect x="{x + 0.1 * slot:.2f}" y="{_TOP + plot_h - h:.2f}" width="{0.8 * slot:.2f}" '
            f'height="{h:.2f}" fill="{color}"><title>{_esc(name)}: {v:.6g}</title></rect>'
        )
        out.append(
            f'<text x="{x + slot / 2:.2f}" y="{_TOP + plot_h + 16:.2f}" text-anchor="middle">{_esc(name)}</text>'
        )
        x += slot
    out.append(f'<line x1="{_LEFT}" y1="{_TOP + plot_h}" x2="{WIDTH - _RIGHT}" y2="{_TOP + plot_h}" stroke="black"/>')
    out.append(f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + plot_h}" stroke="black"/>')
    out.append(
        f'<text x="18" y="{_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_TOP + plot_h / 2:.1f})">normalized L1</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
