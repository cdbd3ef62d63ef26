"""Difference costs ``c(x - y)`` built from a scalar profile ``h``.

Three families are supported:

* ``HNorm``              c(z) = h(||z||)
* ``ConstrainedStrict``  c(z) = |z|^2 / 2 + indicator_K(z)
* ``ConstrainedOneVar``  c(z) = h(<e1, z>) + indicator_K(z)

Infeasible displacements evaluate to ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_TOL, ConvexPolygon, Disk, NormSpec, as_vec2, euclidean_norm


@dataclass(frozen=True)
class Power:
    """h(t) = |t|**p, p > 1."""

    p: float = 2.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("power must exceed 1")

    strictly_convex = True

    def __call__(self, t):
        return np.abs(t) ** self.p


@dataclass(frozen=True)
class ShiftedSquarePlus:
    """h(t) = ((t - 1)_+)^2: flat on [0, 1], so not strictly convex."""

    strictly_convex = False

    def __call__(self, t):
        return np.maximum(np.asarray(t, dtype=float) - 1.0, 0.0) ** 2


@dataclass(frozen=True, eq=False)
class HNorm:
    h: Power | ShiftedSquarePlus
    norm: NormSpec


@dataclass(frozen=True, eq=False)
class ConstrainedStrict:
    K: ConvexPolygon | Disk


@dataclass(frozen=True, eq=False)
class ConstrainedOneVar:
    h: Power
    frame: tuple
    K: ConvexPolygon | Disk

    def __post_init__(self):
        e1, e2 = (as_vec2(e) for e in self.frame)
        if abs(e1 @ e1 - 1) > 1e-9 or abs(e2 @ e2 - 1) > 1e-9 or abs(e1 @ e2) > 1e-9:
            raise ValueError("frame must be orthonormal")
        if not isinstance(self.h, Power):
            raise ValueError("one-variable costs take a Power profile")
        object.__setattr__(self, "frame", (e1, e2))


CostSpec = HNorm | ConstrainedStrict | ConstrainedOneVar


def shifted_square_plus(norm: NormSpec | None = None) -> HNorm:
    return HNorm(ShiftedSquarePlus(), norm or euclidean_norm())


def _in_K(K, Z, tol) -> np.ndarray:
    scale = tol * max(1.0, K.diameter)
    if isinstance(K, Disk):
        return np.linalg.norm(Z - K.center, axis=-1) - K.radius <= scale
    normals, offsets = K.halfplanes
    return (Z @ normals.T - offsets).max(axis=-1) <= scale


def cost_values(c: CostSpec, Z, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evaluate ``c`` on an array of displacements with trailing dim 2."""
    Z = np.asarray(Z, dtype=float)
    if isinstance(c, HNorm):
        return c.h(c.norm.norms(Z))
    if isinstance(c, ConstrainedStrict):
        vals = 0.5 * np.sum(Z * Z, axis=-1)
    elif isinstance(c, ConstrainedOneVar):
        vals = c.h(Z @ c.frame[0])
    else:
        raise TypeError(f"unknown cost {c!r}")
    return np.where(_in_K(c.K, Z, tol), vals, math.inf)


def cost_eval(c: CostSpec, z, tol: float = DEFAULT_TOL) -> float:
    return float(cost_values(c, as_vec2(z), tol))


def cost_matrix(c: CostSpec, X, Y, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``C[i, j] = c(X[i] - Y[j])``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    return cost_values(c, X[:, None, :] - Y[None, :, :], tol)


def is_strictly_convex_cost(c: CostSpec) -> bool:
    if isinstance(c, HNorm):
        return c.norm.is_euclidean and c.h.strictly_convex
    # h strictly convex plus a convex indicator stays strictly convex on K
    return isinstance(c, ConstrainedStrict)
