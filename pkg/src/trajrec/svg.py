"""Plain SVG output: trajectory overlays with direction arrows, line plots and box plots."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

from .skeleton import Pixel, SkeletonImage

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _header(width: float, height: float) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" viewBox="0 0 {width:g} {height:g}">',
        '<defs><marker id="arrow" viewBox="0 0 10 10" refX="5" refY="5" markerWidth="4" markerHeight="4" orient="auto">'
        '<path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>',
    ]


def overlay(image: SkeletonImage, components: Sequence[Sequence[Pixel]], cell: int = 6, arrow_every: int = 8) -> str:
    """Skeleton pixels in grey, each component as a coloured polyline with arrowheads."""
    h, w = image.pixels.shape
    out = _header(w * cell, h * cell)
    out.append(f'<rect width="{w * cell}" height="{h * cell}" fill="white"/>')
    for r, c in image.ink():
        out.append(f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" height="{cell}" fill="#cccccc"/>')
    half = cell / 2
    for k, comp in enumerate(components):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{c * cell + half:g},{r * cell + half:g}" for r, c in comp)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{cell / 3:g}" marker-end="url(#arrow)"/>')
        for i in range(arrow_every, len(comp) - 1, arrow_every):
            (r0, c0), (r1, c1) = comp[i - 1], comp[i]
            out.append(
                f'<line x1="{c0 * cell + half:g}" y1="{r0 * cell + half:g}" x2="{c1 * cell + half:g}" y2="{r1 * cell + half:g}" '
                f'stroke="{color}" stroke-width="{cell / 3:g}" marker-end="url(#arrow)"/>'
            )
        r, c = comp[0]
        out.append(f'<circle cx="{c * cell + half:g}" cy="{r * cell + half:g}" r="{cell * 0.6:g}" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _axes(xs: Sequence[float], ys: Sequence[float], width: float, height: float, pad: float):
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)  # noqa: E731
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)  # noqa: E731
    frame = [
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad}" y="{height - pad / 4}" font-size="10">{x0:g}</text>',
        f'<text x="{width - pad}" y="{height - pad / 4}" font-size="10" text-anchor="end">{x1:g}</text>',
        f'<text x="2" y="{height - pad}" font-size="10">{y0:.3g}</text>',
        f'<text x="2" y="{pad}" font-size="10">{y1:.3g}</text>',
    ]
    return sx, sy, frame


def line_plot(xs: Sequence[float], ys: Sequence[float], title: str, width: int = 360, height: int = 240) -> str:
    pad = 36
    sx, sy, frame = _axes(xs, ys, width, height, pad)
    out = _header(width, height) + [f'<rect width="{width}" height="{height}" fill="white"/>'] + frame
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[1]}" stroke-width="2"/>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2.5" fill="{PALETTE[1]}"/>')
    out.append(f'<text x="{width / 2}" y="14" font-size="12" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def box_plot(labels: Sequence[float], rows: Sequence[tuple[float, float, float, float, float, Sequence[float]]], title: str, width: int = 480, height: int = 260) -> str:
    """``rows`` hold (low whisker, q1, median, q3, high whisker, outliers) per label."""
    pad = 36
    ys = [v for r in rows for v in (r[0], r[4], *r[5])]
    sx, sy, frame = _axes(list(range(len(labels))), ys, width, height, pad)
    out = _header(width, height) + [f'<rect width="{width}" height="{height}" fill="white"/>'] + frame
    half = (width - 2 * pad) / max(1, len(labels)) / 4
    for k, (label, (lo, q1, med, q3, hi, outliers)) in enumerate(zip(labels, rows)):
        x = sx(k)
        out.append(f'<line x1="{x:.2f}" y1="{sy(lo):.2f}" x2="{x:.2f}" y2="{sy(hi):.2f}" stroke="black"/>')
        out.append(
            f'<rect x="{x - half:.2f}" y="{sy(q3):.2f}" width="{2 * half:.2f}" height="{max(0.5, sy(q1) - sy(q3)):.2f}" '
            f'fill="#ddeeff" stroke="{PALETTE[1]}"/>'
        )
        out.append(f'<line x1="{x - half:.2f}" y1="{sy(med):.2f}" x2="{x + half:.2f}" y2="{sy(med):.2f}" stroke="{PALETTE[0]}" stroke-width="2"/>')
        for v in outliers:
            out.append(f'<text x="{x:.2f}" y="{sy(v):.2f}" font-size="10" text-anchor="middle" fill="{PALETTE[0]}">+</text>')
        out.append(f'<text x="{x:.2f}" y="{height - pad / 2}" font-size="9" text-anchor="middle">{label:g}</text>')
    out.append(f'<text x="{width / 2}" y="14" font-size="12" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
