"""Planar convex geometry: polygons, disks, norm balls and their faces.

Vectors are plain ``numpy`` arrays of shape ``(2,)``.  Polygons are stored
counter-clockwise in strictly convex position; every routine here is a pure
function of immutable inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import PointNotInK, ZeroDisplacement

DEFAULT_TOL = 1e-9


def as_vec2(z) -> np.ndarray:
    v = np.asarray(z, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector {v}")
    return v


def _cross(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon with CCW vertices, no repeated or collinear vertices.

    Clockwise input is reversed and collinear vertices are dropped; input
    that is not convex raises ``ValueError``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("vertices must have shape (k, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite polygon vertex")
        scale = max(1.0, float(np.abs(pts).max(initial=0.0)))
        # drop consecutive duplicates (cyclically)
        keep = [p for k, p in enumerate(pts) if np.linalg.norm(p - pts[k - 1]) > 1e-12 * scale]
        pts = np.array(keep) if keep else pts[:1]
        if len(pts) >= 3 and _signed_area(pts) < 0:
            pts = pts[::-1].copy()
        changed = True
        while changed and len(pts) >= 3:
            changed = False
            k = len(pts)
            for i in range(k):
                prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % k]
                cr = _cross(cur - prev, nxt - cur)
                if abs(cr) <= 1e-12 * scale * scale:
                    pts = np.delete(pts, i, axis=0)
                    changed = True
                    break
                if cr < 0:
                    raise ValueError("polygon vertices are not in convex position")
        if len(pts) < 3:
            raise ValueError("a polygon needs at least 3 non-collinear vertices")
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def halfplanes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals and offsets: the polygon is ``{p : N p <= off}``."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.column_stack([e[:, 1], -e[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        normals.setflags(write=False)
        offsets.setflags(write=False)
        return normals, offsets

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))

    def residual(self, p) -> float:
        """Largest halfplane violation of ``p`` (<= 0 inside)."""
        normals, offsets = self.halfplanes
        return float(np.max(normals @ np.asarray(p, dtype=float) - offsets))

    def contains(self, p, tol: float = DEFAULT_TOL) -> bool:
        return self.residual(p) <= tol * max(1.0, self.diameter)

    def support(self, l) -> float:
        return float(np.max(self.vertices @ np.asarray(l, dtype=float)))


def _signed_area(pts) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class Disk:
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec2(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError("disk radius must be positive and finite")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def residual(self, p) -> float:
        return float(np.linalg.norm(np.asarray(p, dtype=float) - self.center) - self.radius)

    def contains(self, p, tol: float = DEFAULT_TOL) -> bool:
        return self.residual(p) <= tol * max(1.0, self.diameter)

    def support(self, l) -> float:
        l = np.asarray(l, dtype=float)
        return float(self.center @ l + self.radius * np.linalg.norm(l))


def square(half_width: float = 1.0, center=(0.0, 0.0)) -> ConvexPolygon:
    cx, cy = center
    h = half_width
    return ConvexPolygon(np.array([[cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h], [cx - h, cy - h]]))


def regular_hexagon() -> ConvexPolygon:
    """Hexagon with vertices (±1, 0) and (±1/2, ±√3/2), starting at (1, 0)."""
    ang = np.arange(6) * np.pi / 3
    return ConvexPolygon(np.column_stack([np.cos(ang), np.sin(ang)]))


# -- norms and faces -------------------------------------------------------


@dataclass(frozen=True)
class Face:
    """Closed flat part ``[a, b]`` of the unit sphere of a polyhedral norm.

    ``n`` is the supporting functional (``<n, a> = <n, b> = 1``), so on the
    cone over ``[a, b]`` the norm equals ``<n, z>``.
    """

    id: int
    a: np.ndarray
    b: np.ndarray
    n: np.ndarray
    tangent: np.ndarray

    def section(self, t: float, tol: float = DEFAULT_TOL):
        """Interval of ``<tangent, z>`` over cone points with ``<n, z> = t``."""
        if t < -tol:
            return None
        t = max(t, 0.0)
        lo, hi = t * float(self.tangent @ self.a), t * float(self.tangent @ self.b)
        return (lo, hi)

    def in_cone(self, z, tol: float = DEFAULT_TOL) -> bool:
        z = np.asarray(z, dtype=float)
        g = float(self.n @ z)
        if g < 0:
            return False
        # z = alpha a + beta b with alpha, beta >= 0
        m = np.column_stack([self.a, self.b])
        alpha, beta = np.linalg.solve(m, z)
        scale = tol * max(g, np.linalg.norm(z))
        return alpha >= -scale and beta >= -scale


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A planar norm: Euclidean, or polyhedral with an origin-symmetric ball."""

    kind: str
    ball: ConvexPolygon | None = None

    def __post_init__(self):
        if self.kind == "euclidean":
            if self.ball is not None:
                raise ValueError("the Euclidean norm takes no ball")
            return
        if self.kind != "polyhedral":
            raise ValueError(f"unknown norm kind {self.kind!r}")
        ball = self.ball if isinstance(self.ball, ConvexPolygon) else ConvexPolygon(self.ball)
        object.__setattr__(self, "ball", ball)
        v = ball.vertices
        scale = max(1.0, float(np.abs(v).max()))
        for p in v:
            if np.min(np.linalg.norm(v + p, axis=1)) > 1e-9 * scale:
                raise ValueError("polyhedral norm ball must be symmetric about the origin")
        if np.min(ball.halfplanes[1]) <= 0:
            raise ValueError("norm ball must contain the origin in its interior")

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean"

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        if self.is_euclidean:
            return ()
        v = self.ball.vertices
        out = []
        for k in range(len(v)):
            a, b = v[k], v[(k + 1) % len(v)]
            n = np.linalg.solve(np.vstack([a, b]), np.ones(2))
            t = (b - a) / np.linalg.norm(b - a)
            for arr in (n, t):
                arr.setflags(write=False)
            out.append(Face(k, a, b, n, t))
        return tuple(out)

    @cached_property
    def _normal_matrix(self) -> np.ndarray:
        return np.array([f.n for f in self.faces])

    def __call__(self, z) -> float:
        return gauge(self, z)

    def norms(self, Z) -> np.ndarray:
        """Vectorised norm of the rows of ``Z``."""
        Z = np.asarray(Z, dtype=float)
        if self.is_euclidean:
            return np.hypot(Z[..., 0], Z[..., 1])
        return np.maximum(Z @ self._normal_matrix.T, 0.0).max(axis=-1)


def euclidean_norm() -> NormSpec:
    return NormSpec("euclidean")


def polyhedral_norm(vertices) -> NormSpec:
    return NormSpec("polyhedral", ConvexPolygon(vertices))


def square_norm() -> NormSpec:
    """The l-infinity norm, unit ball ``[-1, 1]^2``."""
    return NormSpec("polyhedral", square())


def hexagon_norm() -> NormSpec:
    return NormSpec("polyhedral", regular_hexagon())


def faces(norm: NormSpec) -> list[Face]:
    return list(norm.faces)


def gauge(ball, z) -> float:
    """Minkowski functional ``inf{t >= 0 : z in t*ball}``.

    ``ball`` is a :class:`NormSpec`, a :class:`ConvexPolygon` or a
    :class:`Disk` containing the origin (on the boundary is allowed, the
    gauge is then ``inf`` outside the generated cone).
    """
    z = as_vec2(z)
    if isinstance(ball, NormSpec):
        if ball.is_euclidean:
            return float(math.hypot(z[0], z[1]))
        ball = ball.ball
    if not np.any(z):
        return 0.0
    if isinstance(ball, Disk):
        c, r = ball.center, ball.radius
        a = r * r - float(c @ c)
        if a < 0:
            raise ValueError("gauge needs a disk containing the origin")
        zc, zz = float(z @ c), float(z @ z)
        if a == 0:
            return zz / (2 * zc) if zc > 0 else math.inf
        return (-zc + math.sqrt(zc * zc + a * zz)) / a
    normals, offsets = ball.halfplanes
    eps = 1e-14 * max(1.0, ball.diameter)
    if np.min(offsets) < -eps:
        raise ValueError("gauge needs a polygon containing the origin")
    proj = normals @ z
    flat = offsets <= eps
    if np.any(proj[flat] > eps * np.linalg.norm(z)):
        return math.inf
    pos = ~flat
    return float(max(0.0, np.max(proj[pos] / offsets[pos])))


def face_of_direction(norm: NormSpec, z, tol: float = DEFAULT_TOL) -> int | None:
    """Id of the face whose cone contains ``z``.

    Directions hitting a vertex of the ball touch two faces and are
    reported as ``None`` (rigid), as are all directions of a Euclidean norm.
    """
    z = as_vec2(z)
    if not np.any(z):
        raise ZeroDisplacement("zero displacement has no face")
    if norm.is_euclidean:
        return None
    g = gauge(norm, z)
    hits = [f.id for f in norm.faces if abs(float(f.n @ z) - g) <= tol * g]
    return hits[0] if len(hits) == 1 else None


def classify_directions(norm: NormSpec, Z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised :func:`face_of_direction`; -1 marks rigid or zero rows."""
    Z = np.asarray(Z, dtype=float).reshape(-1, 2)
    out = np.full(len(Z), -1, dtype=int)
    if norm.is_euclidean or len(Z) == 0:
        return out
    vals = Z @ norm._normal_matrix.T
    g = np.maximum(vals, 0.0).max(axis=1)
    hits = np.abs(vals - g[:, None]) <= tol * g[:, None]
    single = (hits.sum(axis=1) == 1) & (g > 0)
    out[single] = hits[single].argmax(axis=1)
    return out


def _project_segment(p, a, b) -> np.ndarray:
    d = b - a
    t = float((p - a) @ d) / float(d @ d)
    return a + min(1.0, max(0.0, t)) * d


def project_onto(K, p) -> np.ndarray:
    """Euclidean projection of ``p`` onto a polygon or disk."""
    p = as_vec2(p)
    if isinstance(K, Disk):
        d = p - K.center
        r = float(np.linalg.norm(d))
        if r <= K.radius:
            return p.copy()
        return K.center + d * (K.radius / r)
    if K.residual(p) <= 0:
        return p.copy()
    v = K.vertices
    best, best_d = None, math.inf
    for k in range(len(v)):
        q = _project_segment(p, v[k], v[(k + 1) % len(v)])
        d = float(np.sum((p - q) ** 2))
        if d < best_d:
            best, best_d = q, d
    return best


def _clip_line(normals, offsets, base, direction):
    lo, hi = -math.inf, math.inf
    for nrm, off in zip(normals, offsets):
        a = float(nrm @ direction)
        r = float(off - nrm @ base)
        if abs(a) < 1e-15:
            if r < -1e-12 * max(1.0, abs(off)):
                return None
            continue
        if a > 0:
            hi = min(hi, r / a)
        else:
            lo = max(lo, r / a)
    if lo > hi:
        # a tangent line through a vertex can miss by rounding
        if lo - hi > 1e-12 * max(1.0, abs(lo), abs(hi)):
            return None
        lo = hi = 0.5 * (lo + hi)
    return (lo, hi)


def section(K, t: float, frame=((1.0, 0.0), (0.0, 1.0))):
    """The interval ``{s : <e1, z> = t, <e2, z> = s, z in K}`` or ``None``.

    ``frame = (e1, e2)`` with ``e2`` a unit vector orthogonal to ``e1``;
    ``e1`` need not be unit (face frames use the supporting functional).
    """
    e1, e2 = as_vec2(frame[0]), as_vec2(frame[1])
    base = t * e1 / float(e1 @ e1)
    if isinstance(K, Disk):
        w = base - K.center
        b = float(w @ e2)
        disc = b * b - (float(w @ w) - K.radius ** 2)
        if disc < 0:
            return None
        r = math.sqrt(disc)
        return (-b - r, -b + r)
    normals, offsets = K.halfplanes
    return _clip_line(normals, offsets, base, e2)


def normal_cone_contains(K, z, l, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``l`` lies in the normal cone of ``K`` at ``z``."""
    z, l = as_vec2(z), as_vec2(l)
    if not K.contains(z, tol):
        raise PointNotInK(f"{z} is not in K")
    return K.support(l) - float(l @ z) <= tol
