"""Minimal deterministic SVG emission for trajectory and event figures.

Hand-rolled on purpose: byte-stable output for fixed input is part of the
artifact contract, which rules out plotting libraries that embed ids or
timestamps.  Line style for state profiles, stem style for event intervals.
"""

from __future__ import annotations

from typing import Sequence

WIDTH = 800
HEIGHT = 500
MARGIN = 60

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")

MAX_POINTS = 2000  # per-series cap; plots are summaries, CSVs are exact


class PlotError(ValueError):
    """Raised for unplottable input (e.g. empty series)."""


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _scale(vals: Sequence[float]) -> tuple[float, float]:
    lo = min(vals)
    hi = max(vals)
    if hi == lo:
        lo -= 0.5
        hi += 0.5
    return lo, hi


def _thin(xs: Sequence[float], ys: Sequence[float]) -> tuple[list, list]:
    n = len(xs)
    if n <= MAX_POINTS:
        return list(xs), list(ys)
    stride = -(-n // MAX_POINTS)
    keep = list(range(0, n, stride))
    if keep[-1] != n - 1:
        keep.append(n - 1)
    return [xs[i] for i in keep], [ys[i] for i in keep]


def emit_plot(series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
              style: str, path, title: str = "",
              xlabel: str = "", ylabel: str = "") -> None:
    """Write a standalone SVG for the named (xs, ys) series.

    style is 'line' (polyline per series) or 'stem' (vertical bar per point).
    Raises PlotError on empty input; no file is written in that case.
    """
    if style not in ("line", "stem"):
        raise PlotError(f"unknown style {style!r}")
    if not series or any(len(xs) == 0 or len(ys) == 0 for _, xs, ys in series):
        raise PlotError("cannot plot empty series")
    for name, xs, ys in series:
        if len(xs) != len(ys):
            raise PlotError(f"series {name!r}: mismatched lengths")

    thinned = [(name, *_thin(xs, ys)) for name, xs, ys in series]
    all_x = [v for _, xs, _ in thinned for v in xs]
    all_y = [v for _, _, ys in thinned for v in ys]
    if style == "stem":
        all_y = all_y + [0.0]
    xlo, xhi = _scale(all_x)
    ylo, yhi = _scale(all_y)

    def px(v: float) -> float:
        return MARGIN + (v - xlo) / (xhi - xlo) * (WIDTH - 2 * MARGIN)

    def py(v: float) -> float:
        return HEIGHT - MARGIN - (v - ylo) / (yhi - ylo) * (HEIGHT - 2 * MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        # axes
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black" stroke-width="1"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="{MARGIN // 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{title}</text>')
    if xlabel:
        parts.append(
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 15}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    if ylabel:
        parts.append(
            f'<text x="18" y="{HEIGHT // 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {HEIGHT // 2})">{ylabel}</text>')
    # axis extremes
    parts.append(
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">{_fmt(xlo)}</text>')
    parts.append(
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 18}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="11">'
        f'{_fmt(xhi)}</text>')
    parts.append(
        f'<text x="{MARGIN - 8}" y="{HEIGHT - MARGIN + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{_fmt(ylo)}</text>')
    parts.append(
        f'<text x="{MARGIN - 8}" y="{MARGIN + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{_fmt(yhi)}</text>')

    for idx, (name, xs, ys) in enumerate(thinned):
        color = PALETTE[idx % len(PALETTE)]
        if style == "line":
            pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}"
                           for x, y in zip(xs, ys))
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        else:
            base = py(0.0)
            for x, y in zip(xs, ys):
                parts.append(
                    f'<line x1="{_fmt(px(x))}" y1="{_fmt(base)}" '
                    f'x2="{_fmt(px(x))}" y2="{_fmt(py(y))}" '
                    f'stroke="{color}" stroke-width="1"/>')
        if name:
            parts.append(
                f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 16 * (idx + 1)}" '
                f'text-anchor="end" font-family="sans-serif" font-size="12" '
                f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
