import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from planarot import formats
from planarot.costs import ConstrainedOneVar, ConstrainedStrict, HNorm, Power, ShiftedSquarePlus
from planarot.decomposition import decompose
from planarot.geometry import Disk, square
from planarot.measures import DiscreteMeasure, TransportPlan

coord = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=12, unique=True), st.integers(0, 2**32 - 1))
def test_csv_roundtrip_is_lossless(pts, seed):
    w = np.random.default_rng(seed).random(len(pts)) + 0.01
    w /= w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    if w[-1] <= 0:
        return
    mu = DiscreteMeasure(np.array(pts), w)
    back = formats.measure_from_csv(formats.measure_to_csv(mu))
    assert np.array_equal(back.points, mu.points)
    assert np.array_equal(back.masses, mu.masses)
    back = formats.measure_from_json(json.loads(formats.dumps(formats.measure_to_json(mu))))
    assert np.array_equal(back.points, mu.points)


def test_csv_header_and_line_endings():
    text = formats.measure_to_csv(DiscreteMeasure([[0.1, 0.2]], [1.0]))
    assert text.startswith("x1,x2,mass\n")
    assert "\r" not in text


@pytest.mark.parametrize(
    "text, where",
    [
        ("a,b,c\n", ":1:1:"),
        ("x1,x2,mass\n0,0\n", ":2:1:"),
        ("x1,x2,mass\n0,0,1\n1,zz,0\n", ":3:3:"),
        ("x1,x2,mass\n0,nan,1\n", ":2:3:"),
    ],
)
def test_csv_errors_report_line_and_column(text, where):
    with pytest.raises(ValueError, match=where):
        formats.measure_from_csv(text, "m.csv")


def test_json_measure_error_position(tmp_path):
    p = tmp_path / "m.json"
    p.write_text('{"points": [[0, 0]],\n "masses": [1.0,]}')
    with pytest.raises(ValueError, match=r"m\.json:2:"):
        formats.read_measure(p)


@pytest.mark.parametrize(
    "lit",
    [
        {"kind": "h_norm", "h": {"power": 2}, "norm": "square"},
        {"kind": "h_norm", "h": {"power": 3}, "norm": {"kind": "polyhedral", "vertices": [[1, 1], [-1, 1], [-1, -1], [1, -1]]}},
        {"kind": "h_norm", "h": {"power": 2}, "norm": {"kind": "euclidean"}},
        {"kind": "shifted_square_plus"},
        {"kind": "constrained_quadratic", "K": {"kind": "disk", "radius": 0.5}},
        {"kind": "constrained_quadratic", "K": {"kind": "box", "bounds": [[-1, -1], [1, 1]]}},
        {"kind": "constrained_onevar", "power": 2, "K": [[0, -1], [2, -1], [2, 1], [0, 1]]},
    ],
)
def test_cost_literals_roundtrip(lit):
    c = formats.cost_from_json(json.dumps(lit))
    again = formats.cost_from_json(formats.cost_to_json(c))
    assert formats.cost_to_json(again) == formats.cost_to_json(c)


def test_cost_literal_kinds():
    assert isinstance(formats.cost_from_json({"kind": "shifted_square_plus"}).h, ShiftedSquarePlus)
    c = formats.cost_from_json({"kind": "constrained_onevar", "power": 3, "K": {"kind": "disk"}})
    assert isinstance(c, ConstrainedOneVar) and isinstance(c.K, Disk)
    with pytest.raises(ValueError):
        formats.cost_from_json({"kind": "nope"})


def test_cost_literal_from_file(tmp_path):
    p = tmp_path / "cost.json"
    p.write_text('{"kind": "constrained_quadratic", "K": {"kind": "box", "bounds": [[0, 0], [1, 1]]}}')
    assert isinstance(formats.cost_from_json(str(p)), ConstrainedStrict)


def test_plan_and_potentials_roundtrip():
    plan = TransportPlan.from_entries(2, 3, [(0, 2, 0.1 + 0.2), (1, 0, 1 / 3)])
    back = formats.plan_from_json(json.loads(formats.dumps(formats.plan_to_json(plan))))
    assert back.entries() == plan.entries()


def test_decomposition_roundtrip():
    mu = DiscreteMeasure([[0, 0], [0, 1]], [0.5, 0.5])
    nu = DiscreteMeasure([[1, 0.6], [1, 0.5]], [0.5, 0.5])
    plan = TransportPlan.from_entries(2, 2, [(i, j, 0.25) for i in range(2) for j in range(2)])
    d = decompose(plan, mu, nu, HNorm(Power(2), formats.norm_from_json("square")))
    obj = json.loads(formats.dumps(formats.decomposition_to_json(d)))
    back = formats.decomposition_from_json(obj)
    assert back.kind == d.kind
    assert {k: v.entries() for k, v in back.per_face.items()} == {k: v.entries() for k, v in d.per_face.items()}
    for k in d.sub_marginals:
        np.testing.assert_array_equal(back.sub_marginals[k].sources, d.sub_marginals[k].sources)


def test_set_literals():
    K = formats.set_from_json({"kind": "box", "bounds": [[-1, -2], [1, 2]]})
    assert K.contains((0.9, 1.9)) and not K.contains((0, 2.5))
    assert formats.set_to_json(square(1.0))["kind"] == "polygon"
