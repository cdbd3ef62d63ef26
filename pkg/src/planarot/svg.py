"""Minimal SVG drawings of plans: atoms, displacement arrows, face cones."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .geometry import Disk, NormSpec

PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"]
RIGID = "#7f7f7f"
AMBIGUOUS = "#000000"


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, points, size=600, margin=30):
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        self.lo, self.span, self.size, self.margin = lo, span, size, margin
        self.items = []

    def xy(self, p):
        s = (self.size - 2 * self.margin) / self.span
        x = self.margin + (p[0] - self.lo[0]) * s
        y = self.size - self.margin - (p[1] - self.lo[1]) * s
        return _fmt(x), _fmt(y)

    def add(self, item: str):
        self.items.append(item)

    def render(self, title="") -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
            f'viewBox="0 0 {self.size} {self.size}">\n'
            '<defs><marker id="tip" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" '
            'orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>\n'
            f'<rect width="{self.size}" height="{self.size}" fill="white"/>\n'
        )
        if title:
            head += f'<text x="8" y="16" font-family="sans-serif" font-size="12">{escape(title)}</text>\n'
        return head + "\n".join(self.items) + "\n</svg>\n"


def _face_labels(plan, decomp):
    """Colour key per plan entry: face id, -1 ambiguous, -2 rigid."""
    if decomp is None:
        return {}
    keys = {}
    for i, j, _ in decomp.rigid.entries():
        keys[(i, j)] = -2
    for i, j, _ in decomp.ambiguous.entries():
        keys[(i, j)] = -1
    for fid, sub in decomp.per_face.items():
        for i, j, _ in sub.entries():
            keys[(i, j)] = fid
    return keys


def _colour(key):
    if key == -2:
        return RIGID
    if key == -1:
        return AMBIGUOUS
    return PALETTE[key % len(PALETTE)]


def _cone_inset(norm, size, box=110, pad=10):
    """Small drawing of the unit ball with each face cone tinted."""
    ox, oy, r = size - box - pad + box / 2, pad + box / 2, box / 2 - 6
    out = [f'<rect x="{size - box - pad}" y="{pad}" width="{box}" height="{box}" fill="white" stroke="#ccc"/>']
    if norm is None or isinstance(norm, Disk) or (isinstance(norm, NormSpec) and norm.is_euclidean):
        out.append(f'<circle cx="{_fmt(ox)}" cy="{_fmt(oy)}" r="{_fmt(r)}" fill="#eee" stroke="#333"/>')
        return out
    V = norm.ball.vertices
    scale = r / float(np.abs(V).max())
    for face in norm.faces:
        pts = [(0.0, 0.0), face.a, face.b]
        path = " ".join(f"{_fmt(ox + p[0] * scale)},{_fmt(oy - p[1] * scale)}" for p in pts)
        out.append(f'<polygon points="{path}" fill="{_colour(face.id)}" fill-opacity="0.35" stroke="#333" stroke-width="0.5"/>')
    return out


def plan_svg(plan, mu, nu, decomp=None, norm=None, title: str = "") -> str:
    """SVG text for ``plan`` with arrows coloured by the face each entry uses."""
    canvas = _Canvas(np.vstack([mu.points, nu.points]))
    keys = _face_labels(plan, decomp)
    wmax = float(plan.mass.max()) if len(plan) else 1.0
    for i, j, w in plan.entries():
        (x0, y0), (x1, y1) = canvas.xy(mu.points[i]), canvas.xy(nu.points[j])
        colour = _colour(keys.get((i, j), -2))
        width = _fmt(0.6 + 1.8 * w / wmax)
        canvas.add(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="{colour}" stroke-width="{width}" marker-end="url(#tip)"/>'
        )
    for p in mu.points:
        x, y = canvas.xy(p)
        canvas.add(f'<circle cx="{x}" cy="{y}" r="3" fill="#1f4e79"/>')
    for p in nu.points:
        x, y = canvas.xy(p)
        canvas.add(f'<rect x="{_fmt(float(x) - 3)}" y="{_fmt(float(y) - 3)}" width="6" height="6" fill="#b22222"/>')
    for item in _cone_inset(norm, canvas.size):
        canvas.add(item)
    return canvas.render(title)


def write_plan_svg(path, plan, mu, nu, decomp=None, norm=None, title: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(plan_svg(plan, mu, nu, decomp, norm, title))
