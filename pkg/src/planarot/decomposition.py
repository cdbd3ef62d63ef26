"""Split an optimal plan by the face of the cost its displacements select.

A source atom with a single target is *rigid*.  A source atom with several
targets is assigned to face ``i`` when all of its displacements lie in the
cone ``K_i`` over that face; otherwise it is *ambiguous* and left alone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import ConstrainedOneVar, HNorm, ShiftedSquarePlus, is_strictly_convex_cost
from .errors import NotApplicable
from .geometry import DEFAULT_TOL, Disk
from .measures import TransportPlan


@dataclass(frozen=True)
class SubMarginals:
    sources: np.ndarray
    source_mass: np.ndarray
    targets: np.ndarray
    target_mass: np.ndarray


@dataclass(frozen=True, eq=False)
class FaceDecomposition:
    rigid: TransportPlan
    per_face: dict[int, TransportPlan]
    ambiguous: TransportPlan
    sub_marginals: dict[int, SubMarginals]
    kind: str  # "polyhedral", "ball" or "constraint"
    diagnostics: list[dict] = field(default_factory=list)

    def recombined(self) -> TransportPlan:
        out = self.rigid + self.ambiguous
        for fid in sorted(self.per_face):
            out = out + self.per_face[fid]
        return out


def _face_sets(c, Z, tol):
    """For each displacement, a boolean row over candidate faces."""
    if isinstance(c, ConstrainedOneVar):
        return np.ones((len(Z), 1), dtype=bool), "constraint"
    if not isinstance(c, HNorm):
        raise NotApplicable(f"no face decomposition for {type(c).__name__}")
    if isinstance(c.h, ShiftedSquarePlus):
        if not c.norm.is_euclidean:
            raise NotApplicable("the shifted-square cost is only decomposed for the Euclidean norm")
        r = np.hypot(Z[:, 0], Z[:, 1])
        return (r <= 1.0 + tol)[:, None], "ball"
    vals = Z @ c.norm._normal_matrix.T
    g = np.maximum(vals, 0.0).max(axis=1)
    member = np.abs(vals - g[:, None]) <= tol * g[:, None]
    member &= (g > 0)[:, None]
    return member, "polyhedral"


def decompose(plan: TransportPlan, mu, nu, c, tol: float = DEFAULT_TOL) -> FaceDecomposition:
    if is_strictly_convex_cost(c):
        raise NotApplicable("strictly convex cost: the optimal plan is already a map")
    Z = plan.displacements(mu, nu)
    member, kind = _face_sets(c, Z, tol)
    counts = plan.targets_per_source()

    label = np.full(len(plan), -2, dtype=int)  # -2 rigid, -1 ambiguous
    diagnostics = []
    starts = np.searchsorted(plan.rows, np.arange(plan.n))
    for i in np.flatnonzero(counts > 1):
        sl = slice(starts[i], starts[i] + counts[i])
        common = np.flatnonzero(member[sl].all(axis=0))
        if len(common) == 1:
            label[sl] = common[0]
        else:
            label[sl] = -1
            diagnostics.append(
                {
                    "source": int(i),
                    "targets": plan.cols[sl].tolist(),
                    "mass": float(plan.mass[sl].sum()),
                    "reason": "displacements share no single face" if len(common) == 0 else "displacements on a vertex ray",
                }
            )

    per_face, subs = {}, {}
    for fid in np.unique(label[label >= 0]).tolist():
        sub = plan.select(label == fid)
        per_face[fid] = sub
        rs, cs = sub.row_sums(), sub.col_sums()
        src, tgt = np.flatnonzero(rs > 0), np.flatnonzero(cs > 0)
        subs[fid] = SubMarginals(src, rs[src], tgt, cs[tgt])
    return FaceDecomposition(
        rigid=plan.select(label == -2),
        per_face=per_face,
        ambiguous=plan.select(label == -1),
        sub_marginals=subs,
        kind=kind,
        diagnostics=diagnostics,
    )


def face_set(c, fid):
    """Geometric object for face ``fid`` of ``c``: a ``Face``, the unit disk or ``K``."""
    if isinstance(c, ConstrainedOneVar):
        return c.K
    if isinstance(c.h, ShiftedSquarePlus):
        return Disk(radius=1.0)
    return c.norm.faces[fid]


def decomposition_stats(d: FaceDecomposition) -> dict:
    return {
        "n_rigid": int(np.count_nonzero(d.rigid.targets_per_source())),
        "n_faces_used": len(d.per_face),
        "mass_per_face": {int(k): float(v.mass.sum()) for k, v in sorted(d.per_face.items())},
        "rigid_mass": float(d.rigid.mass.sum()),
        "ambiguous_mass": float(d.ambiguous.mass.sum()),
        "n_ambiguous_atoms": len(d.diagnostics),
    }
