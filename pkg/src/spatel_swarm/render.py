"""Deterministic SVG snapshots of the workspace."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

from .grid import GridConfig, OccupancyMatrix, cell_bounds

PALETTE = ("#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00", "#a65628", "#f781bf")


@dataclass(frozen=True)
class Region:
    name: str
    cells: tuple  # ((i, j), ...)
    color: str = ""


def _f(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_svg(cfg: GridConfig, positions=None, counts: OccupancyMatrix | None = None,
               regions=(), title: str = "", px: int = 400) -> str:
    """One frame: grid, shaded regions, then robot dots and/or per-cell counts."""
    a = cfg.side_length
    scale = px / a
    margin = 20

    def sx(x):
        return margin + (x + a / 2) * scale

    def sy(y):
        return margin + (a / 2 - y) * scale

    w = h = px + 2 * margin
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h + 20}" '
        f'viewBox="0 0 {w} {h + 20}">',
        f'<rect x="0" y="0" width="{w}" height="{h + 20}" fill="white"/>',
    ]
    for t, reg in enumerate(regions):
        color = reg.color or PALETTE[t % len(PALETTE)]
        out.append(f'<g class="region" id="{escape(reg.name)}" fill="{color}" fill-opacity="0.25">')
        for i, j in reg.cells:
            (x0, x1), (y0, y1) = cell_bounds(cfg, i, j)
            out.append(f'<rect x="{_f(sx(x0))}" y="{_f(sy(y1))}" '
                       f'width="{_f((x1 - x0) * scale)}" height="{_f((y1 - y0) * scale)}"/>')
        out.append("</g>")
    out.append('<g class="grid" stroke="#888" stroke-width="1">')
    for t in range(cfg.size + 1):
        c = -a / 2 + t * cfg.cell_width
        out.append(f'<line x1="{_f(sx(c))}" y1="{_f(sy(a / 2))}" x2="{_f(sx(c))}" y2="{_f(sy(-a / 2))}"/>')
        out.append(f'<line x1="{_f(sx(-a / 2))}" y1="{_f(sy(c))}" x2="{_f(sx(a / 2))}" y2="{_f(sy(c))}"/>')
    out.append("</g>")
    if counts is not None:
        out.append('<g class="counts" font-family="monospace" font-size="12" fill="#333" text-anchor="middle">')
        for i in range(cfg.size):
            for j in range(cfg.size):
                if counts[i, j]:
                    (x0, x1), (y0, y1) = cell_bounds(cfg, i, j)
                    out.append(f'<text x="{_f(sx((x0 + x1) / 2))}" y="{_f(sy(y1) + 14)}">{counts[i, j]}</text>')
        out.append("</g>")
    if positions is not None:
        out.append('<g class="robots" fill="black">')
        for x, y in positions:
            out.append(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2.5"/>')
        out.append("</g>")
    if title:
        out.append(f'<text x="{margin}" y="{h + 12}" font-family="monospace" font-size="13">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
