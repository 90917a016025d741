import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import low_instances
from toriclow import fixtures as fx
from toriclow.corpus import random_poly
from toriclow.intersection import class_group
from toriclow.linalg import CapExceeded
from toriclow.lowdeg import global_ltd
from toriclow.points import (
    HomogeneousPoly, exhaustive_search, is_relevant, massage_root, rational_point, structured_search,
    zero_set,
)
from toriclow.polytopes import sigma_d


def poly_from_data(name, fan, d):
    return HomogeneousPoly.from_json(fx.load(name), fan, d)


P2_QUADRICS = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)]


def test_is_relevant_p2():
    fan = fx.projective_space(2)
    assert is_relevant(fan, (0, 0, 1))
    assert is_relevant(fan, (1, 1, 1))
    assert not is_relevant(fan, (0, 0, 0))


def test_is_relevant_hexagon():
    fan = fx.hexagon()
    assert is_relevant(fan, (0, 0, 1, 1, 1, 1))
    # D1 and D2 do not span a cone
    assert not is_relevant(fan, (0, 1, 0, 1, 1, 1))


def test_build_validates_input():
    fan, d = fx.projective_space(2), fx.hyperplane(2, 2)
    with pytest.raises(ValueError):
        HomogeneousPoly.build(fan, d, 4, [((2, 0, 0), 1)])
    with pytest.raises(ValueError):
        HomogeneousPoly.build(fan, d, 3, [((1, 0, 0), 1)])
    with pytest.raises(ValueError):
        HomogeneousPoly.build(fan, d, 3, [((2, 0, 0), 3)])
    with pytest.raises(ValueError):
        HomogeneousPoly.build(fan, d, 3, [((2, 0), 1)])


def test_evaluation_mod_p():
    fan, d = fx.projective_space(2), fx.hyperplane(2, 2)
    f = HomogeneousPoly.build(fan, d, 5, [((2, 0, 0), 1), ((0, 1, 1), 3), ((2, 0, 0), 1)])
    assert f.terms == (((0, 1, 1), 3), ((2, 0, 0), 2))
    assert f((1, 2, 3)) == (2 + 18) % 5
    assert HomogeneousPoly.from_json(f.to_json(), fan, d) == f


def _p2_witness(degree):
    fan, d = fx.projective_space(2), fx.hyperplane(2, degree)
    gf = sigma_d(fan, d)
    return fan, d, gf, global_ltd(fan, d, gf)


def test_structured_search_f2_conic():
    fan, d, gf, w = _p2_witness(2)
    f = poly_from_data("p2_conic_f2", fan, d)
    x = structured_search(fan, f, w, gf)
    assert f(x) == 0 and is_relevant(fan, x)


def test_structured_search_f3_sum_of_squares():
    fan, d, gf, w = _p2_witness(2)
    f = HomogeneousPoly.build(fan, d, 3, [((2, 0, 0), 1), ((0, 2, 0), 1), ((0, 0, 2), 1)])
    x = structured_search(fan, f, w, gf)
    assert f(x) == 0 and is_relevant(fan, x)
    assert zero_set(x) == frozenset()


def test_structured_search_single_monomial():
    fan, d, gf, w = _p2_witness(2)
    f = HomogeneousPoly.build(fan, d, 2, [((1, 1, 0), 1)])
    x = structured_search(fan, f, w, gf)
    assert f(x) == 0 and is_relevant(fan, x)


def test_structured_search_cap():
    fan, d, gf, w = _p2_witness(2)
    f = HomogeneousPoly.build(fan, d, 5, [(e, 1) for e in P2_QUADRICS[:3]])
    with pytest.raises(CapExceeded):
        structured_search(fan, f, w, gf, cap=1)


def test_massage_root_on_hexagon():
    fan, d = fx.builtin("hexagon")
    gf = sigma_d(fan, d)
    f = HomogeneousPoly.build(fan, d, 5, [((2, 2, 0, 0, 0, 2), 1), ((0, 2, 2, 2, 0, 0), 1)])
    alpha = (0, 1, 0, 1, 1, 1)
    assert f(alpha) == 0 and not is_relevant(fan, alpha)
    beta = massage_root(fan, gf, f, alpha)
    assert f(beta) == 0 and is_relevant(fan, beta)
    assert zero_set(beta) <= gf.hull({0, 2})


def test_massage_root_rejects_non_roots():
    fan, d = fx.builtin("hexagon")
    f = poly_from_data("hexagon_conic_f5", fan, d)
    with pytest.raises(ValueError):
        massage_root(fan, sigma_d(fan, d), f, (1, 1, 1, 1, 1, 1))


def test_missing_vertex_monomial_gives_coordinate_point():
    fan, d = fx.projective_space(2), fx.hyperplane(2, 2)
    f = HomogeneousPoly.build(fan, d, 3, [(e, 1) for e in P2_QUADRICS if e != (0, 0, 2)])
    r = rational_point(fan, f)
    assert r.point == (0, 0, 1) and r.method.startswith("trivial point")


def test_p2_conic_point():
    fan, d = fx.builtin("p2")
    r = rational_point(fan, poly_from_data("p2_conic_f2", fan, d))
    assert r.found and r.point == (0, 0, 1)


def test_hexagon_conic_over_f5():
    fan, d = fx.builtin("hexagon")
    f = poly_from_data("hexagon_conic_f5", fan, d)
    r = rational_point(fan, f)
    assert r.found and r.method == "structured search"
    assert f(r.point) == 0 and is_relevant(fan, r.point)


def test_p121_quartic_has_no_point():
    fan, d = fx.builtin("p121")
    f = poly_from_data("p121_quartic_f2", fan, d)
    r = rational_point(fan, f)
    assert not r.found
    assert r.evaluations == 7
    assert "no relevant root" in r.to_json()["statement"]


def test_torsion_prime_rejected():
    fan, d = fx.builtin("torsion")
    assert not class_group(fan).h3_ok(3)
    f = HomogeneousPoly.build(fan, d, 3, [((1, 0, 0), 1)])
    with pytest.raises(ValueError):
        rational_point(fan, f)


def test_parallel_exhaustive_matches_serial():
    fan, d = fx.builtin("p121")
    f = poly_from_data("p121_quartic_f2", fan, d)
    assert exhaustive_search(fan, f, jobs=2) == exhaustive_search(fan, f)
    fan, d = fx.builtin("hexagon")
    f = poly_from_data("hexagon_conic_f5", fan, d)
    serial = exhaustive_search(fan, f)
    assert serial[0] is not None
    assert exhaustive_search(fan, f, jobs=3)[0] == serial[0]


def test_exhaustive_cap():
    fan, d = fx.builtin("hexagon")
    f = poly_from_data("hexagon_conic_f5", fan, d)
    with pytest.raises(CapExceeded):
        exhaustive_search(fan, f, cap=10)


@settings(max_examples=40, deadline=None)
@given(st.data(), st.sampled_from([2, 3, 5]), st.booleans(), st.integers(0, 10**6))
def test_reported_points_verify(data, p, keep_vertices, seed):
    inst = data.draw(st.sampled_from(low_instances()))
    if not class_group(inst.fan).h3_ok(p):
        return
    f = random_poly(random.Random(seed), inst.fan, inst.divisor, p, keep_vertices)
    r = rational_point(inst.fan, f)
    if r.found:
        assert f(r.point) == 0 and is_relevant(inst.fan, r.point)
        assert zero_set(r.point) <= r.zero_cone
