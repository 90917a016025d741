from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toriclow.fixtures import quadrilateral, quadrilateral_divisor, hexagon, hexagon_conic, projective_space, torsion_fan
from toriclow.intersection import (
    cartier_data,
    class_group,
    curve_class,
    divisor_from_json,
    divisor_to_json,
    intersection_table,
    is_ample,
    is_cartier,
    is_nef,
    j_sets,
    linear_equivalence,
    local_representative,
    pair,
    principal,
    restriction_data,
    wall_curve,
    wall_curves,
)

# rows in ray order D1, D12, D2, D23, D3, D13
HEXAGON_TABLE = [
    [-1, 1, 0, 0, 0, 1],
    [1, -1, 1, 0, 0, 0],
    [0, 1, -1, 1, 0, 0],
    [0, 0, 1, -1, 1, 0],
    [0, 0, 0, 1, -1, 1],
    [1, 0, 0, 0, 1, -1],
]

QUADRILATERAL_TABLE = [
    [F(-1, 2), F(1, 2), 0, 1],
    [F(1, 2), F(-1, 4), F(1, 4), 0],
    [0, F(1, 4), F(1, 4), 1],
    [1, 0, 1, 2],
]


def test_hexagon_table():
    assert intersection_table(hexagon()) == [[F(x) for x in row] for row in HEXAGON_TABLE]


def test_quadrilateral_table():
    assert intersection_table(quadrilateral()) == [[F(x) for x in row] for row in QUADRILATERAL_TABLE]


def test_class_group_examples():
    cl = class_group(projective_space(2))
    assert (cl.free_rank, cl.torsion) == (1, ())
    cl = class_group(torsion_fan())
    assert (cl.free_rank, cl.torsion) == (1, (3,))
    assert not cl.h3_ok(3) and cl.h3_ok(2)
    cl = class_group(hexagon())
    assert (cl.free_rank, cl.torsion) == (4, ())


def test_class_group_kills_principal_divisors():
    fan = torsion_fan()
    cl = class_group(fan)
    for m in [(1, 0), (0, 1), (2, -3)]:
        assert cl.coordinates(principal(fan, m)) == (0, 0)
    assert cl.coordinates((1, 0, 0)) != (0, 0)


def test_wall_curve_examples():
    p2 = projective_space(2)
    assert wall_curve(p2, p2.wall_of([0])).degrees == (1, 1, 1)
    g = quadrilateral()
    assert wall_curve(g, g.wall_of([0])).degrees == (F(-1, 2), F(1, 2), 0, 1)
    h = hexagon()
    assert wall_curve(h, h.wall_of([1])).degrees == (1, -1, 1, 0, 0, 0)


def test_pair_examples():
    g = quadrilateral()
    d = quadrilateral_divisor()
    assert [pair(wall_curve(g, g.wall_of([i])), d) for i in range(4)] == [2, 1, 3, 8]
    p2 = projective_space(2)
    assert pair(wall_curves(p2)[0], (-1, -1, -1)) == -3
    h = hexagon()
    for i in (1, 3, 5):
        assert pair(wall_curve(h, h.wall_of([i])), hexagon_conic()) == 0
    with pytest.raises(ValueError):
        pair(wall_curves(p2)[0], (1, 1))


def test_nef_cartier_ample():
    p2 = projective_space(2)
    for k in range(0, 4):
        d = (0, 0, k)
        assert is_nef(p2, d)
        assert is_ample(p2, d) == (k >= 1)
    h, d = hexagon(), hexagon_conic()
    assert is_nef(h, d) and is_cartier(h, d) is not None and not is_ample(h, d)
    t = torsion_fan()
    assert is_cartier(t, (1, 0, 0)) is None
    data = cartier_data(t, (1, 0, 0))
    assert (F(-2, 3), F(-1, 3)) in data.values()


def test_local_representatives():
    p2 = projective_space(2)
    assert local_representative(p2, (2, 0, 0), {0, 1}) == (0, 0, 2)
    h, d = hexagon(), hexagon_conic()
    reps = [local_representative(h, d, s) for s in h.max_cones]
    for s, r in zip(h.max_cones, reps):
        assert all(x >= 0 for x in r) and all(r[i] == 0 for i in s)
    g, gd = quadrilateral(), quadrilateral_divisor()
    reps = [local_representative(g, gd, s) for s in g.max_cones]
    assert len(set(reps)) == len(reps)


def test_j_sets():
    p2 = projective_space(2)
    assert j_sets(wall_curves(p2)[0]) == (frozenset({0, 1, 2}), frozenset())
    h = hexagon()
    assert j_sets(wall_curve(h, h.wall_of([1]))) == (frozenset({0, 2}), frozenset({1}))
    assert j_sets(curve_class(h, (0,) * 6)) == (frozenset(), frozenset())


def test_restriction_examples():
    g, d = quadrilateral(), quadrilateral_divisor()
    r = restriction_data(g, d, {1})
    [(c, deg, k)] = r.comparisons()
    assert (deg, k) == (1, 2)
    h, hd = hexagon(), hexagon_conic()
    r = restriction_data(h, hd, {0})
    assert r.comparisons()[0][1] == 2
    assert set(r.star.scale) == {1}
    assert r.coeffs == r.ambient


def test_linear_equivalence():
    p2 = projective_space(2)
    assert linear_equivalence(p2, (2, 0, 0), (0, 0, 2)) == (2, 0)
    assert linear_equivalence(p2, (1, 0, 0), (0, 0, 2)) is None
    t = torsion_fan()
    assert linear_equivalence(t, (1, 0, 0), (0, 1, 0)) is None


def test_divisor_json():
    d = (F(1, 2), F(-3), F(0))
    assert divisor_from_json(divisor_to_json(d)) == d
    assert divisor_to_json(d) == {"coeffs": ["1/2", "-3", "0"]}
    with pytest.raises(ValueError):
        divisor_from_json({"coeffs": [1, 2]}, projective_space(2))
    with pytest.raises(ValueError):
        divisor_from_json({})


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3), st.integers(0, 199))
def test_principal_divisors_are_numerically_trivial(m, k):
    from conftest import corpus_instances

    fan = corpus_instances()[k].fan
    div = principal(fan, m[: fan.dim])
    assert all(pair(c, div) == 0 for c in wall_curves(fan))


def test_wall_curves_satisfy_relation(corpus):
    for inst in corpus:
        for c in wall_curves(inst.fan):
            curve_class(inst.fan, c.degrees)


def test_nef_cartier_representatives(corpus):
    for inst in corpus:
        reps = {local_representative(inst.fan, inst.divisor, s) for s in inst.fan.max_cones}
        assert all(x >= 0 for r in reps for x in r)
        if is_ample(inst.fan, inst.divisor):
            assert len(reps) == len(inst.fan.max_cones)
