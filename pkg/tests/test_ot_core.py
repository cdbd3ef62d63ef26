import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from planarot.costs import ConstrainedStrict, HNorm, Power, cost_matrix
from planarot.errors import Infeasible, TooLarge
from planarot.geometry import Disk, euclidean_norm, hexagon_norm, square, square_norm
from planarot.measures import DiscreteMeasure, DualPotentials, TransportPlan
from planarot.ot_core import (
    brute_force_value,
    linf_gauge_value,
    solve_kantorovich,
    solve_transport,
    verify_duality,
)
from planarot.simplex import network_simplex

from conftest import uniform_pair

QUAD = HNorm(Power(2), euclidean_norm())


def _linprog_value(a, b, C):
    n, m = C.shape
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1
    for j in range(m):
        A[n + j, j::m] = 1
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_identity_instance():
    pts = [[0, 0], [1, 0.5], [2, 3]]
    mu, nu = uniform_pair(pts, pts)
    sol = solve_kantorovich(mu, nu, HNorm(Power(2), square_norm()))
    assert sol.value == 0.0
    assert sol.plan.is_permutation()
    assert sol.plan.cols.tolist() == [0, 1, 2]


def test_two_point_instance_prefers_vertical_pairing():
    mu, nu = uniform_pair([[0, 0], [1, 0]], [[0, 1], [1, 1]])
    plan, pots, value = solve_kantorovich(mu, nu, QUAD)
    assert value == pytest.approx(1.0, abs=1e-15)
    assert plan.cols.tolist() == [0, 1]
    assert brute_force_value(mu, nu, QUAD) == pytest.approx(1.0, abs=1e-15)


def test_constrained_infeasible():
    mu, nu = uniform_pair([[0, 0], [0, 1]], [[1, 0], [1, 1]])
    with pytest.raises(Infeasible):
        solve_kantorovich(mu, nu, ConstrainedStrict(Disk(radius=0.1)))


def test_hall_witness_reported():
    # both sources can only reach target 0
    C = np.array([[0.0, np.inf], [1.0, np.inf], [2.0, 0.0]])
    with pytest.raises(Infeasible) as exc:
        solve_transport([1 / 3, 1 / 3, 1 / 3], [1 / 3, 1 / 3, 1 / 3], C)
    w = exc.value.witness
    assert w is not None
    assert w["source_mass"] > w["target_mass"]
    assert set(w["targets"]) == {0}


def test_unbalanced_masses_rejected():
    with pytest.raises(Infeasible):
        solve_transport([0.5, 0.5], [1.0, 0.5], np.ones((2, 2)))


def test_single_pair():
    mu = DiscreteMeasure([[0, 0]], [1.0])
    nu = DiscreteMeasure([[3, 4]], [1.0])
    assert solve_kantorovich(mu, nu, QUAD).value == pytest.approx(25.0)
    assert brute_force_value(mu, nu, QUAD) == pytest.approx(25.0)


def test_three_point_square_matches_enumeration(rng):
    c = HNorm(Power(2), square_norm())
    for _ in range(20):
        mu, nu = uniform_pair(rng.random((3, 2)), rng.random((3, 2)))
        assert solve_kantorovich(mu, nu, c).value == pytest.approx(brute_force_value(mu, nu, c), abs=1e-12)


def _random_masses(r, k):
    w = r.random(k) + 0.2
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return w


def test_vertex_enumeration_for_unequal_masses(rng):
    c = HNorm(Power(3), hexagon_norm())
    for _ in range(10):
        mu = DiscreteMeasure(rng.random((3, 2)), _random_masses(rng, 3))
        nu = DiscreteMeasure(rng.random((4, 2)), _random_masses(rng, 4))
        assert solve_kantorovich(mu, nu, c).value == pytest.approx(brute_force_value(mu, nu, c), abs=1e-12)


def test_brute_force_size_limit(rng):
    mu = DiscreteMeasure(rng.random((4, 2)), _random_masses(rng, 4))
    nu = DiscreteMeasure(rng.random((4, 2)), _random_masses(rng, 4))
    with pytest.raises(TooLarge):
        brute_force_value(mu, nu, QUAD)


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_simplex_matches_highs(n, m, seed):
    r = np.random.default_rng(seed)
    a = r.random(n) + 0.1
    b = r.random(m) + 0.1
    a /= a.sum()
    b *= a.sum() / b.sum()
    C = np.round(r.random((n, m)) * 4) / 4  # coarse costs force ties and degeneracy
    sol = solve_transport(a, b, C)
    assert sol.value == pytest.approx(_linprog_value(a, b, C), abs=1e-10)
    np.testing.assert_allclose(sol.plan.row_sums(), a, atol=1e-13)
    np.testing.assert_allclose(sol.plan.col_sums(), b, atol=1e-13)
    S = sol.potentials.phi[:, None] + sol.potentials.psi[None, :]
    assert np.max(S - C) <= 1e-12
    # basic solution
    assert len(sol.plan) <= n + m - 1


def test_simplex_degenerate_grid_terminates():
    # identical integer-valued costs on a lattice are massively degenerate
    g = np.array([(i, j) for i in range(6) for j in range(6)], dtype=float)
    C = np.abs(g[:, None, :] - g[None, :, :]).sum(axis=2)
    w = np.full(36, 1 / 36)
    sol = solve_transport(w, w, C)
    assert sol.value == 0.0


def test_simplex_reports_unmet_flow():
    res = network_simplex(np.array([1.0, -1.0, 0.0]), [0], [2], [1.0])
    assert res.unmet > 0


def test_potentials_normalised_per_component():
    C = np.array([[1.0, np.inf], [np.inf, 2.0]])
    sol = solve_transport([0.5, 0.5], [0.5, 0.5], C)
    np.testing.assert_array_equal(sol.potentials.phi, [0.0, 0.0])
    np.testing.assert_array_equal(sol.potentials.psi, [1.0, 2.0])


def test_verify_duality_passes_on_solver_output(rng):
    for c in (QUAD, HNorm(Power(2), square_norm()), HNorm(Power(3), hexagon_norm())):
        mu, nu = uniform_pair(rng.random((15, 2)), rng.random((15, 2)))
        plan, pots, _ = solve_kantorovich(mu, nu, c)
        assert verify_duality(plan, pots, mu, nu, c).passed


def test_verify_duality_detects_bad_potentials():
    mu, nu = uniform_pair([[0, 0], [1, 0]], [[0, 1], [1, 1]])
    plan, pots, _ = solve_kantorovich(mu, nu, QUAD)
    bumped = DualPotentials(pots.phi + np.array([1.0, 0.0]), pots.psi)
    rep = verify_duality(plan, bumped, mu, nu, QUAD)
    assert not rep.passed
    assert rep.max_violation == pytest.approx(1.0)


def test_verify_duality_detects_suboptimal_plan():
    mu, nu = uniform_pair([[0, 0], [1, 0]], [[0, 1], [1, 1]])
    _, pots, _ = solve_kantorovich(mu, nu, QUAD)
    crossed = TransportPlan.from_entries(2, 2, [(0, 1, 0.5), (1, 0, 0.5)])
    rep = verify_duality(crossed, pots, mu, nu, QUAD)
    assert not rep.passed
    # crossed arcs cost 2, potentials sum to 1 there
    assert rep.max_slack_on_support == pytest.approx(1.0)


def test_linf_gauge_value():
    mu, nu = uniform_pair([[0, 0], [1, 0]], [[0, 1], [1, 1]])
    plan, _, _ = solve_kantorovich(mu, nu, QUAD)
    assert linf_gauge_value(plan, mu, nu, square(1.0)) == 1.0
    ident = TransportPlan.from_entries(2, 2, [(0, 0, 0.5), (1, 1, 0.5)])
    assert linf_gauge_value(ident, mu, mu, square(1.0)) == 0.0


def test_linf_value_at_most_one_when_feasible(rng):
    K = square(0.3)
    X = rng.random((12, 2))
    Y = X + rng.uniform(-0.3, 0.3, size=X.shape)
    mu, nu = uniform_pair(X, Y)
    plan, _, _ = solve_kantorovich(mu, nu, ConstrainedStrict(K))
    assert linf_gauge_value(plan, mu, nu, K) <= 1 + 1e-9


def test_cost_matrix_inf_outside_constraint():
    C = cost_matrix(ConstrainedStrict(Disk(radius=0.5)), [[0, 0]], [[0.2, 0], [2, 0]])
    assert np.isfinite(C[0, 0]) and np.isinf(C[0, 1])
