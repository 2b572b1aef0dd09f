"""Minimal deterministic SVG rendering for training curves and summary bars.

The plot area carries its axis ranges as ``data-*`` attributes so tests and
scripts can read them back without parsing geometry.
"""
from __future__ import annotations

import re
from xml.sax.saxutils import escape

from .evalbench import TrainingCurvePoint, smooth_curve

W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 50
PALETTE = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")


def _num(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5):
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _frame(title, xlabel, ylabel, xmin, xmax, ymin, ymax):
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<g id="plot-area" data-xmin="{float(xmin)!r}" data-xmax="{float(xmax)!r}" '
        f'data-ymin="{float(ymin)!r}" data-ymax="{float(ymax)!r}">',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for xv in _ticks(xmin, xmax):
        px = LEFT + (xv - xmin) / (xmax - xmin) * pw
        out.append(f'<text x="{px:.2f}" y="{TOP + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{_num(xv)}</text>')
    for yv in _ticks(ymin, ymax):
        py = TOP + ph - (yv - ymin) / (ymax - ymin) * ph
        out.append(f'<text x="{LEFT - 6}" y="{py + 3:.2f}" text-anchor="end" '
                   f'font-size="10">{_num(yv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 12}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>')
    return out, pw, ph


def _padded(lo: float, hi: float):
    if hi == lo:
        return lo - 0.5, hi + 0.5
    return lo, hi


def curve_svg(series: dict[str, list[TrainingCurvePoint]], window: int = 1) -> str:
    xs = [p.env_steps for pts in series.values() for p in pts]
    ys = [p.eval_success_rate for pts in series.values() for p in pts]
    xmin, xmax = _padded(min(xs), max(xs))
    ymin, ymax = _padded(min(0.0, min(ys)), max(1.0, max(ys)))
    out, pw, ph = _frame("Test-terrain evaluation (smoothed)", "environment steps",
                         "success rate", xmin, xmax, ymin, ymax)
    for k, (name, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        sm = smooth_curve([p.eval_success_rate for p in pts], window)
        coords = " ".join(
            f"{LEFT + (p.env_steps - xmin) / (xmax - xmin) * pw:.2f},"
            f"{TOP + ph - (y - ymin) / (ymax - ymin) * ph:.2f}"
            for p, y in zip(pts, sm))
        out.append(f'<polyline data-series="{escape(name)}" points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + 8}" y="{TOP + 16 + 14 * k}" font-size="11" '
                   f'fill="{color}">{escape(name)}</text>')
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def summary_svg(rows: list[list[str]]) -> str:
    rates = [int(r[1]) / int(r[2]) for r in rows]
    out, pw, ph = _frame("Test-terrain success", "method", "success rate", 0, len(rows), 0.0, 1.0)
    slot = pw / max(1, len(rows))
    for k, (row, rate) in enumerate(zip(rows, rates)):
        h = rate * ph
        x = LEFT + k * slot + slot * 0.2
        out.append(f'<rect data-method="{escape(row[0])}" x="{x:.2f}" y="{TOP + ph - h:.2f}" '
                   f'width="{slot * 0.6:.2f}" height="{h:.2f}" fill="{PALETTE[k % len(PALETTE)]}"/>')
        out.append(f'<text x="{x + slot * 0.3:.2f}" y="{TOP + ph - h - 4:.2f}" text-anchor="middle" '
                   f'font-size="11">{escape(row[0])} {row[1]}/{row[2]}</text>')
    out += ["</g>", "</svg>"]
    return "\n".join(out) + "\n"


def read_plot_range(svg: str) -> dict[str, float]:
    m = re.search(r'<g id="plot-area" data-xmin="([^"]+)" data-xmax="([^"]+)" '
                  r'data-ymin="([^"]+)" data-ymax="([^"]+)"', svg)
    if not m:
        raise ValueError("no plot-area element")
    return dict(zip(("xmin", "xmax", "ymin", "ymax"), map(float, m.groups())))

