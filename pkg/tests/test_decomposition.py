import numpy as np
import pytest

from planarot.costs import ConstrainedOneVar, ConstrainedStrict, HNorm, Power, cost_matrix, shifted_square_plus
from planarot.decomposition import decompose, decomposition_stats, face_set
from planarot.errors import NotApplicable
from planarot.geometry import Disk, euclidean_norm, hexagon_norm, square, square_norm
from planarot.measures import DiscreteMeasure, TransportPlan
from planarot.ot_core import solve_kantorovich

from conftest import uniform_pair

SQ2 = HNorm(Power(2), square_norm())


def _left_face_id():
    return next(f.id for f in square_norm().faces if np.allclose(f.n, [-1, 0]))


def test_all_rigid_plan(rng):
    mu, nu = uniform_pair(rng.random((10, 2)), rng.random((10, 2)))
    plan = solve_kantorovich(mu, nu, SQ2).plan
    d = decompose(plan, mu, nu, SQ2)
    assert d.per_face == {}
    assert d.rigid.entries() == plan.entries()
    stats = decomposition_stats(d)
    assert stats["n_faces_used"] == 0
    assert stats["ambiguous_mass"] == 0.0
    assert stats["n_rigid"] == 10


def test_two_targets_on_left_face():
    mu = DiscreteMeasure([[0, 0]], [1.0])
    nu = DiscreteMeasure([[1, 0.3], [1, -0.2]], [0.5, 0.5])
    plan = TransportPlan.from_entries(1, 2, [(0, 0, 0.5), (0, 1, 0.5)])
    d = decompose(plan, mu, nu, SQ2)
    left = _left_face_id()
    assert list(d.per_face) == [left]
    assert len(d.per_face[left]) == 2
    assert decomposition_stats(d)["mass_per_face"] == {left: 1.0}
    assert d.recombined().merged().entries() == plan.entries()


def test_ambiguous_atom_gets_diagnostic():
    mu = DiscreteMeasure([[0, 0]], [1.0])
    nu = DiscreteMeasure([[1, 0.5], [0.5, 1]], [0.5, 0.5])
    plan = TransportPlan.from_entries(1, 2, [(0, 0, 0.5), (0, 1, 0.5)])
    d = decompose(plan, mu, nu, SQ2)
    assert d.per_face == {}
    assert decomposition_stats(d)["ambiguous_mass"] == 1.0
    assert d.diagnostics[0]["source"] == 0
    assert d.diagnostics[0]["targets"] == [0, 1]


def test_vertex_ray_is_ambiguous_not_assigned():
    mu = DiscreteMeasure([[0, 0]], [1.0])
    nu = DiscreteMeasure([[-1, -1], [-2, -2]], [0.5, 0.5])
    plan = TransportPlan.from_entries(1, 2, [(0, 0, 0.5), (0, 1, 0.5)])
    d = decompose(plan, mu, nu, SQ2)
    assert d.per_face == {}
    assert "vertex" in d.diagnostics[0]["reason"]


def test_strictly_convex_not_decomposed():
    mu, nu = uniform_pair([[0, 0]], [[1, 1]])
    plan = TransportPlan.from_entries(1, 1, [(0, 0, 1.0)])
    for c in (HNorm(Power(2), euclidean_norm()), ConstrainedStrict(square(2.0))):
        with pytest.raises(NotApplicable):
            decompose(plan, mu, nu, c)


def test_shifted_square_uses_unit_disk():
    mu = DiscreteMeasure([[0, 0], [0, 0.5]], [0.5, 0.5])
    nu = DiscreteMeasure([[0.2, 0], [0.2, 0.5]], [0.5, 0.5])
    plan = TransportPlan.from_entries(2, 2, [(i, j, 0.25) for i in range(2) for j in range(2)])
    c = shifted_square_plus()
    d = decompose(plan, mu, nu, c)
    assert d.kind == "ball"
    assert list(d.per_face) == [0]
    assert isinstance(face_set(c, 0), Disk)


def test_shifted_square_with_polyhedral_norm_not_applicable():
    mu, nu = uniform_pair([[0, 0]], [[1, 1]])
    plan = TransportPlan.from_entries(1, 1, [(0, 0, 1.0)])
    with pytest.raises(NotApplicable):
        decompose(plan, mu, nu, shifted_square_plus(square_norm()))


def test_onevar_single_constraint_face():
    c = ConstrainedOneVar(Power(2), ((1.0, 0.0), (0.0, 1.0)), square(2.0))
    mu = DiscreteMeasure([[0, 0]], [1.0])
    nu = DiscreteMeasure([[1, 0.3], [1, -0.2]], [0.5, 0.5])
    plan = TransportPlan.from_entries(1, 2, [(0, 0, 0.5), (0, 1, 0.5)])
    d = decompose(plan, mu, nu, c)
    assert d.kind == "constraint"
    assert list(d.per_face) == [0]


def test_sub_marginals_sum_to_face_mass():
    mu = DiscreteMeasure([[0, 0], [0, 1]], [0.5, 0.5])
    nu = DiscreteMeasure([[1, 0.6], [1, 0.5]], [0.5, 0.5])
    plan = TransportPlan.from_entries(2, 2, [(i, j, 0.25) for i in range(2) for j in range(2)])
    d = decompose(plan, mu, nu, HNorm(Power(3), square_norm()))
    (sub,) = d.sub_marginals.values()
    assert sub.source_mass.sum() == pytest.approx(1.0)
    assert sub.target_mass.sum() == pytest.approx(1.0)


def test_hexagon_classification_of_lp_plans(rng):
    c = HNorm(Power(3), hexagon_norm())
    for _ in range(5):
        mu, nu = uniform_pair(rng.random((30, 2)), rng.random((30, 2)))
        d = decompose(solve_kantorovich(mu, nu, c).plan, mu, nu, c)
        assert d.ambiguous.mass.sum() == 0.0


def test_face_subplans_optimal_for_restricted_cost():
    from planarot.ot_core import solve_transport

    c = HNorm(Power(2), square_norm())
    mu = DiscreteMeasure([[0, 0], [0, 1], [3, 0]], [0.25, 0.25, 0.5])
    nu = DiscreteMeasure([[1, 0.6], [1, 0.5], [3.1, 0.05]], [0.25, 0.25, 0.5])
    plan = TransportPlan.from_entries(3, 3, [(0, 0, 0.125), (0, 1, 0.125), (1, 0, 0.125), (1, 1, 0.125), (2, 2, 0.5)])
    assert plan.cost(cost_matrix(c, mu.points, nu.points)) == pytest.approx(solve_kantorovich(mu, nu, c).value)
    d = decompose(plan, mu, nu, c)
    for fid, sub in d.per_face.items():
        face = c.norm.faces[fid]
        m = d.sub_marginals[fid]
        X, Y = mu.points[m.sources], nu.points[m.targets]
        C = cost_matrix(c, X, Y)
        inside = np.array([[face.in_cone(x - y) for y in Y] for x in X])
        C[~inside] = np.inf
        best = solve_transport(m.source_mass, m.target_mass, C).value
        assert sub.cost(cost_matrix(c, mu.points, nu.points)) == pytest.approx(best, abs=1e-9)
