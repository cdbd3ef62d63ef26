"""Primal network simplex for bipartite transportation problems.

Arcs run from sources to targets and are uncapacitated.  An artificial
root node is joined to every source (arc ``i -> root``) and every target
(arc ``root -> j``) with a big-M cost, giving a strongly feasible starting
tree.  Leaving arcs follow Cunningham's rule (last blocking arc from the
apex of the cycle); entering arcs are chosen by block search in fixed arc
order, falling back to Bland's smallest-index rule during long runs of
degenerate pivots.  Artificial arcs never re-enter once they leave.

Everything is deterministic for a given arc order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FLOW_EPS = 1e-14


@dataclass
class SimplexResult:
    flow: np.ndarray  # flow on the real arcs
    pi: np.ndarray  # node potentials, pi[tail] - pi[head] = cost on basic arcs
    basic: np.ndarray  # indices of real arcs in the final spanning tree
    unmet: float  # source mass routed through the root (0 when feasible)
    pivots: int


class _Tree:
    def __init__(self, supply, tail, head, cost, art_cost):
        n_nodes = len(supply)
        self.root = root = n_nodes
        self.n_real_arcs = A = len(tail)
        # artificial arcs: node v <-> root, oriented by the sign of its supply
        nodes = np.arange(n_nodes)
        src_side = supply >= 0
        art_tail = np.where(src_side, nodes, root)
        art_head = np.where(src_side, root, nodes)
        self.tail = np.concatenate([tail, art_tail]).astype(np.int64)
        self.head = np.concatenate([head, art_head]).astype(np.int64)
        self.cost = np.concatenate([cost, np.full(n_nodes, art_cost)])
        self.flow = [0.0] * A + np.abs(supply).tolist()
        self.tail_l = self.tail.tolist()
        self.head_l = self.head.tolist()
        self.cost_l = self.cost.tolist()

        self.parent = [root] * n_nodes + [-1]
        self.pred = [A + v for v in range(n_nodes)] + [-1]
        self.up = src_side.tolist() + [False]
        self.depth = [1] * n_nodes + [0]
        self.children = [set() for _ in range(n_nodes)] + [set(range(n_nodes))]
        self.pi = np.where(src_side, art_cost, -art_cost).astype(float)
        self.pi = np.append(self.pi, 0.0)

    def join(self, u, v):
        parent, depth = self.parent, self.depth
        while u != v:
            if depth[u] >= depth[v]:
                u = parent[u]
            else:
                v = parent[v]
        return u

    def pivot(self, e):
        """Bring arc ``e`` into the tree; return the flow change ``delta``."""
        parent, pred, up, flow = self.parent, self.pred, self.up, self.flow
        first, second = self.tail_l[e], self.head_l[e]
        join = self.join(first, second)
        delta = math.inf
        u_out = -1
        side = 0
        u = first
        while u != join:
            if up[u]:
                d = flow[pred[u]]
                if d < delta:
                    delta, u_out, side = d, u, 1
            u = parent[u]
        u = second
        while u != join:
            if not up[u]:
                d = flow[pred[u]]
                if d <= delta:
                    delta, u_out, side = d, u, 2
            u = parent[u]
        if u_out < 0:
            raise RuntimeError("unbounded cycle in transportation problem")
        if delta < FLOW_EPS:
            delta = 0.0
        if delta > 0:
            u = first
            while u != join:
                flow[pred[u]] += -delta if up[u] else delta
                u = parent[u]
            flow[e] += delta
            u = second
            while u != join:
                flow[pred[u]] += delta if up[u] else -delta
                u = parent[u]
        flow[pred[u_out]] = 0.0
        self._rehang(e, u_out, first if side == 1 else second, second if side == 1 else first)
        return delta

    def _rehang(self, e, u_out, u_in, v_in):
        parent, pred, up, children = self.parent, self.pred, self.up, self.children
        path = [u_in]
        while path[-1] != u_out:
            path.append(parent[path[-1]])
        old_pred = [pred[p] for p in path]
        old_up = [up[p] for p in path]
        children[parent[u_out]].discard(u_out)
        for t in range(len(path) - 1):
            a, b = path[t], path[t + 1]
            children[b].discard(a)
            children[a].add(b)
            parent[b] = a
            pred[b] = old_pred[t]
            up[b] = not old_up[t]
        parent[u_in] = v_in
        pred[u_in] = e
        up[u_in] = self.tail_l[e] == u_in
        children[v_in].add(u_in)
        c = self.cost_l[e]
        new_pi = self.pi[v_in] + c if up[u_in] else self.pi[v_in] - c
        self._shift_subtree(u_in, new_pi - self.pi[u_in])

    def _shift_subtree(self, start, shift):
        """Fix depths below ``start`` and move its subtree's potentials by ``shift``."""
        depth, children = self.depth, self.children
        depth[start] = depth[self.parent[start]] + 1
        nodes = [start]
        i = 0
        while i < len(nodes):
            u = nodes[i]
            i += 1
            du = depth[u] + 1
            for ch in children[u]:
                depth[ch] = du
                nodes.append(ch)
        self.pi[nodes] += shift

    def refresh_potentials(self):
        """Recompute all potentials from the root along tree paths."""
        pi, cost, pred, up = self.pi, self.cost_l, self.pred, self.up
        for u in self.order():
            if u == self.root:
                continue
            p = self.parent[u]
            c = cost[pred[u]]
            pi[u] = pi[p] + c if up[u] else pi[p] - c

    def order(self):
        """Nodes in DFS preorder from the root."""
        out = []
        stack = [self.root]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children[u])
        return out

    def recompute_flow(self, supply):
        """Basic flows implied by the tree and the supplies (leaf elimination).

        Subtree supplies are summed exactly and rounded once, so a flow that
        equals some atom's mass comes out as that float bit for bit.
        """
        sub = [Fraction(x) for x in np.asarray(supply, dtype=float).tolist()] + [Fraction(0)]
        flow = np.zeros(len(self.flow))
        for u in reversed(self.order()):
            if u == self.root:
                continue
            s = sub[u]
            flow[self.pred[u]] = float(s) if self.up[u] else float(-s)
            sub[self.parent[u]] += s
        return flow


def network_simplex(supply, tail, head, cost, *, max_pivots=None) -> SimplexResult:
    """Minimise ``sum(cost * flow)`` subject to node balance.

    ``supply`` is positive at sources and negative at sinks and sums to 0;
    ``tail``/``head`` index nodes.  Infeasibility shows up as ``unmet > 0``.
    """
    supply = np.asarray(supply, dtype=float)
    tail = np.asarray(tail, dtype=np.int64)
    head = np.asarray(head, dtype=np.int64)
    cost = np.asarray(cost, dtype=float)
    n_nodes, A = len(supply), len(tail)
    cmax = float(np.abs(cost).max(initial=0.0))
    art = (cmax + 1.0) * (n_nodes + 1)
    tree = _Tree(supply, tail, head, cost, art)
    eps = 1e-12 * (1.0 + cmax) + 32 * np.finfo(float).eps * art

    block = min(A, max(16, 8 * math.isqrt(A)))
    if max_pivots is None:
        max_pivots = 50 * (n_nodes + 10) * max(1, int(math.sqrt(A)))
    pi = tree.pi
    next_arc = 0
    pivots = 0
    degenerate_run = 0
    bland_after = 4 * n_nodes + 100
    while A:
        entering = -1
        if degenerate_run > bland_after:
            rc = cost - pi[tail] + pi[head]
            neg = np.flatnonzero(rc < -eps)
            if len(neg):
                entering = int(neg[0])
        else:
            scanned = 0
            while scanned < A:
                s = next_arc
                e_ = min(s + block, A)
                rc = cost[s:e_] - pi[tail[s:e_]] + pi[head[s:e_]]
                k = int(np.argmin(rc))
                scanned += e_ - s
                next_arc = e_ % A
                if rc[k] < -eps:
                    entering = s + k
                    break
        if entering < 0:
            # potentials drift under incremental shifts; confirm on fresh ones
            tree.refresh_potentials()
            if not np.any(cost - pi[tail] + pi[head] < -eps):
                break
            continue
        delta = tree.pivot(entering)
        pivots += 1
        degenerate_run = degenerate_run + 1 if delta == 0 else 0
        if pivots > max_pivots:
            raise RuntimeError(f"network simplex exceeded {max_pivots} pivots")

    flow_all = tree.recompute_flow(supply)
    neg = flow_all < 0
    if np.any(flow_all[neg] < -1e-12):
        raise RuntimeError("negative basic flow after simplex")
    flow_all[np.abs(flow_all) <= 1e-13] = 0.0
    basic = np.array(sorted(p for p in tree.pred if 0 <= p < A), dtype=np.int64)
    return SimplexResult(
        flow=flow_all[:A],
        pi=tree.pi.copy(),
        basic=basic,
        unmet=0.5 * float(flow_all[A:].sum()),
        pivots=pivots,
    )
