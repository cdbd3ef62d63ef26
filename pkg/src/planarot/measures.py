"""Discrete measures, transport plans and dual potentials."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted atoms in the plane.

    A probability measure by default; ``probability=False`` admits
    sub-measures (restrictions of a plan's marginals), which only need
    positive masses.
    """

    points: np.ndarray
    masses: np.ndarray
    probability: bool = True

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, 2)
        w = np.array(self.masses, dtype=float).reshape(-1)
        if len(pts) != len(w):
            raise ValueError(f"{len(pts)} points but {len(w)} masses")
        if len(pts) == 0:
            raise ValueError("empty measure")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite point or mass")
        if np.any(w <= 0):
            raise ValueError("masses must be positive")
        if self.probability and abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {w.sum()!r}, expected 1")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("atoms must be pairwise distinct")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", w)

    def __len__(self):
        return len(self.masses)

    @classmethod
    def uniform(cls, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(points, equal_masses(len(points)))

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    @property
    def is_equal_mass(self) -> bool:
        return bool(np.all(np.abs(self.masses - self.masses[0]) <= MASS_TOL))


def equal_masses(n: int) -> np.ndarray:
    """``n`` masses of ``1/n``; the last one absorbs rounding so they sum to 1."""
    w = np.full(n, 1.0 / n)
    w[-1] = 1.0 - w[:-1].sum()
    return w


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse coupling: entry ``k`` moves ``mass[k]`` from source ``rows[k]``
    to target ``cols[k]``.  Entries are kept sorted by ``(row, col)``."""

    n: int
    m: int
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=np.int64).reshape(-1)
        c = np.asarray(self.cols, dtype=np.int64).reshape(-1)
        w = np.asarray(self.mass, dtype=float).reshape(-1)
        if not (len(r) == len(c) == len(w)):
            raise ValueError("ragged plan entries")
        if len(r) and (r.min() < 0 or r.max() >= self.n or c.min() < 0 or c.max() >= self.m):
            raise ValueError("plan index out of range")
        order = np.lexsort((c, r))
        r, c, w = r[order], c[order], w[order]
        for arr in (r, c, w):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", r)
        object.__setattr__(self, "cols", c)
        object.__setattr__(self, "mass", w)

    @classmethod
    def from_entries(cls, n, m, entries):
        entries = list(entries)
        if not entries:
            return cls.empty(n, m)
        r, c, w = zip(*entries)
        return cls(n, m, r, c, w)

    @classmethod
    def empty(cls, n, m):
        return cls(n, m, np.zeros(0, int), np.zeros(0, int), np.zeros(0))

    @classmethod
    def from_dense(cls, G, tol=0.0):
        G = np.asarray(G, dtype=float)
        r, c = np.nonzero(G > tol)
        return cls(G.shape[0], G.shape[1], r, c, G[r, c])

    def __len__(self):
        return len(self.mass)

    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.mass.tolist()))

    def to_dense(self) -> np.ndarray:
        G = np.zeros((self.n, self.m))
        np.add.at(G, (self.rows, self.cols), self.mass)
        return G

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.mass, minlength=self.n)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.mass, minlength=self.m)

    def targets_per_source(self) -> np.ndarray:
        return np.bincount(self.rows, minlength=self.n)

    def is_map(self) -> bool:
        """True when every source atom has at most one target."""
        return bool(np.all(self.targets_per_source() <= 1))

    def is_permutation(self) -> bool:
        return (
            self.n == self.m
            and len(self) == self.n
            and np.array_equal(self.rows, np.arange(self.n))
            and len(np.unique(self.cols)) == self.n
        )

    def cost(self, C) -> float:
        return float(np.dot(self.mass, np.asarray(C)[self.rows, self.cols]))

    def displacements(self, mu, nu) -> np.ndarray:
        return mu.points[self.rows] - nu.points[self.cols]

    def select(self, mask) -> "TransportPlan":
        mask = np.asarray(mask, dtype=bool)
        return TransportPlan(self.n, self.m, self.rows[mask], self.cols[mask], self.mass[mask])

    def __add__(self, other: "TransportPlan") -> "TransportPlan":
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("plan shapes differ")
        return TransportPlan(
            self.n,
            self.m,
            np.concatenate([self.rows, other.rows]),
            np.concatenate([self.cols, other.cols]),
            np.concatenate([self.mass, other.mass]),
        )

    def merged(self) -> "TransportPlan":
        """Combine duplicate ``(row, col)`` entries."""
        if len(self) == 0:
            return self
        key = self.rows * self.m + self.cols
        uniq, inv = np.unique(key, return_inverse=True)
        w = np.bincount(inv, weights=self.mass)
        return TransportPlan(self.n, self.m, uniq // self.m, uniq % self.m, w)


@dataclass(frozen=True, eq=False)
class DualPotentials:
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float).reshape(-1))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float).reshape(-1))

    def value(self, mu, nu) -> float:
        return float(np.dot(self.phi, mu.masses) + np.dot(self.psi, nu.masses))
