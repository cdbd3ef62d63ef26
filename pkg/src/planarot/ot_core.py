"""Discrete Kantorovich problems: exact solver, brute-force oracle, certificates."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .costs import cost_matrix
from .errors import Infeasible, TooLarge
from .geometry import DEFAULT_TOL, gauge
from .measures import DiscreteMeasure, DualPotentials, TransportPlan
from .simplex import network_simplex


@dataclass(frozen=True)
class Solution:
    plan: TransportPlan
    potentials: DualPotentials
    value: float
    pivots: int = 0

    def __iter__(self):
        # allows ``plan, pots, value = solve_kantorovich(...)``
        return iter((self.plan, self.potentials, self.value))


def _admissible_components(n, m, rows, cols):
    g = coo_matrix((np.ones(len(rows)), (rows, n + cols)), shape=(n + m, n + m))
    return connected_components(g, directed=False)[1]


def _hall_witness(a, b, rows, cols, flow, unmet_sources):
    """Sources reachable from unmet ones by alternating paths, and their neighbourhood."""
    n, m = len(a), len(b)
    out_adj = [[] for _ in range(n)]
    for r, c in zip(rows.tolist(), cols.tolist()):
        out_adj[r].append(c)
    back_adj = [[] for _ in range(m)]
    for r, c, f in zip(rows.tolist(), cols.tolist(), flow.tolist()):
        if f > 0:
            back_adj[c].append(r)
    seen_s = set(unmet_sources)
    seen_t = set()
    stack = list(unmet_sources)
    while stack:
        i = stack.pop()
        for j in out_adj[i]:
            if j not in seen_t:
                seen_t.add(j)
                for k in back_adj[j]:
                    if k not in seen_s:
                        seen_s.add(k)
                        stack.append(k)
    S, T = sorted(seen_s), sorted(seen_t)
    return {
        "sources": S,
        "targets": T,
        "source_mass": float(a[S].sum()),
        "target_mass": float(b[T].sum()) if T else 0.0,
    }


def solve_transport(a, b, C) -> Solution:
    """Exact optimal coupling of masses ``a`` and ``b`` for the cost matrix ``C``.

    ``inf`` entries of ``C`` are forbidden arcs.  Potentials are normalised
    so that the first source of every admissible component has ``phi = 0``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    n, m = C.shape
    if abs(a.sum() - b.sum()) > 1e-12 * max(1.0, a.sum()):
        raise Infeasible(f"unbalanced masses {a.sum()!r} vs {b.sum()!r}")
    rows, cols = np.nonzero(np.isfinite(C))
    cost = C[rows, cols]

    dead_s = np.flatnonzero(np.bincount(rows, minlength=n) == 0)
    dead_t = np.flatnonzero(np.bincount(cols, minlength=m) == 0)
    if len(dead_s) or len(dead_t):
        raise Infeasible(
            "atoms without any admissible partner",
            {"sources": dead_s.tolist(), "targets": dead_t.tolist()},
        )

    supply = np.concatenate([a, -b])
    res = network_simplex(supply, rows, n + cols, cost)
    total = a.sum()
    if res.unmet > 1e-12 * max(1.0, total):
        unmet = [i for i in range(n) if res.flow[rows == i].sum() < a[i] - 1e-12]
        raise Infeasible(
            f"no finite-cost plan: {res.unmet:.3g} mass cannot be moved",
            _hall_witness(a, b, rows, cols, res.flow, unmet),
        )

    pi = res.pi
    comp = _admissible_components(n, m, rows, cols)
    shift = np.zeros(comp.max() + 1)
    # first source (lowest index) of each component anchors it
    for i in range(n - 1, -1, -1):
        shift[comp[i]] = pi[i]
    phi = pi[:n] - shift[comp[:n]]
    psi = shift[comp[n:]] - pi[n : n + m]

    support = res.flow > 0
    plan = TransportPlan(n, m, rows[support], cols[support], res.flow[support])
    value = plan.cost(C)
    return Solution(plan, DualPotentials(phi, psi), value, res.pivots)


def solve_kantorovich(mu: DiscreteMeasure, nu: DiscreteMeasure, c, tol: float = DEFAULT_TOL) -> Solution:
    C = cost_matrix(c, mu.points, nu.points, tol)
    return solve_transport(mu.masses, nu.masses, C)


# -- oracle -----------------------------------------------------------------

MAX_PERMUTATION_N = 8
MAX_VERTEX_ARCS = 12


def brute_force_value(mu: DiscreteMeasure, nu: DiscreteMeasure, c, tol: float = DEFAULT_TOL) -> float:
    """Exact optimum by enumeration.

    Equal-mass problems with ``n == m <= 8`` enumerate all permutations;
    other problems with ``n * m <= 12`` enumerate the vertices of the
    transportation polytope.
    """
    C = cost_matrix(c, mu.points, nu.points, tol)
    n, m = C.shape
    equal = n == m and mu.is_equal_mass and nu.is_equal_mass
    if equal and n <= MAX_PERMUTATION_N:
        best = math.inf
        idx = np.arange(n)
        for perm in itertools.permutations(range(n)):
            best = min(best, float(C[idx, perm].sum()))
        if not math.isfinite(best):
            raise Infeasible("no permutation with finite cost")
        return best / n
    if n * m <= MAX_VERTEX_ARCS:
        return _vertex_enumeration(mu.masses, nu.masses, C)
    raise TooLarge(f"brute force is limited to n<=8 equal masses or n*m<=12, got {n}x{m}")


def _vertex_enumeration(a, b, C) -> float:
    n, m = C.shape
    arcs = [(i, j) for i in range(n) for j in range(m) if math.isfinite(C[i, j])]
    # one balance row is redundant: drop the last target equation
    rhs = np.concatenate([a, b[:-1]])
    best = math.inf
    k = n + m - 1
    for subset in itertools.combinations(range(len(arcs)), min(k, len(arcs))):
        M = np.zeros((n + m - 1, len(subset)))
        for col, s in enumerate(subset):
            i, j = arcs[s]
            M[i, col] = 1.0
            if j < m - 1:
                M[n + j, col] = 1.0
        if np.linalg.matrix_rank(M) < len(subset):
            continue
        x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        if np.linalg.norm(M @ x - rhs) > 1e-10 or np.any(x < -1e-12):
            continue
        best = min(best, sum(x[col] * C[arcs[s]] for col, s in enumerate(subset)))
    if not math.isfinite(best):
        raise Infeasible("transportation polytope has no finite-cost vertex")
    return float(best)


# -- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    max_violation: float
    max_slack_on_support: float
    marginal_error: float
    duality_gap: float
    primal_value: float
    dual_value: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.max_violation, self.max_slack_on_support, self.marginal_error, self.duality_gap) <= self.tol

    def as_dict(self):
        return {
            "max_violation": self.max_violation,
            "max_slack_on_support": self.max_slack_on_support,
            "marginal_error": self.marginal_error,
            "duality_gap": self.duality_gap,
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "passed": self.passed,
        }


def verify_duality(plan, pots, mu, nu, c, tol: float = 1e-9, geom_tol: float = DEFAULT_TOL) -> DualityReport:
    C = cost_matrix(c, mu.points, nu.points, geom_tol)
    S = pots.phi[:, None] + pots.psi[None, :]
    finite = np.isfinite(C)
    viol = float(np.max(np.where(finite, S - C, -math.inf), initial=-math.inf))
    support_c = C[plan.rows, plan.cols]
    if np.any(~np.isfinite(support_c)):
        slack = math.inf
    else:
        slack = float(np.max(np.abs(support_c - S[plan.rows, plan.cols]), initial=0.0))
    marg = max(
        float(np.max(np.abs(plan.row_sums() - mu.masses))),
        float(np.max(np.abs(plan.col_sums() - nu.masses))),
    )
    primal = plan.cost(C) if math.isfinite(slack) else math.inf
    dual = pots.value(mu, nu)
    return DualityReport(max(viol, 0.0), slack, marg, abs(primal - dual), primal, dual, tol)


def linf_gauge_value(plan, mu, nu, K) -> float:
    """Largest gauge of ``K`` over the displacements in the plan's support."""
    Z = plan.displacements(mu, nu)
    return max((gauge(K, z) for z in Z), default=0.0)
