import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus_instances
from toriclow import fixtures as fx
from toriclow.fan import star_subdivision, validate
from toriclow.intersection import curve_class, is_nef, pair, wall_curves
from toriclow.linalg import CapExceeded
from toriclow.lowdeg import global_ltd, verify_global
from toriclow.mori import (
    DIVISORIAL, FIBERING, FLIPPING, BirationalStep, FiberingContraction, contract, extremal_rays,
    fan_digest, flip, initial_state, is_projective, normalized, picard_one_subvarieties, pull_curve,
    pull_divisor, push_curve, push_divisor, replay, run_descent, transport,
)
from toriclow.polytopes import sigma_d


def degrees(ray):
    return tuple(int(x) for x in ray.generator.degrees)


def test_p2_single_fibering_ray():
    rays = extremal_rays(fx.projective_space(2))
    assert [(degrees(r), r.kind) for r in rays] == [((1, 1, 1), FIBERING)]


def test_p1xp1_two_fibering_rays():
    rays = extremal_rays(fx.p1xp1())
    assert {degrees(r) for r in rays} == {(0, 1, 0, 1), (1, 0, 1, 0)}
    assert all(r.kind == FIBERING for r in rays)


def test_hexagon_every_wall_divisorial():
    rays = extremal_rays(fx.hexagon())
    assert len(rays) == 6
    assert all(r.kind == DIVISORIAL for r in rays)
    # the exceptional curves D12, D23, D13 are among them
    assert {1, 3, 5} <= {r.rho0 for r in rays}


def test_quadrilateral_extremal_rays():
    rays = extremal_rays(fx.quadrilateral())
    assert {degrees(r) for r in rays} == {(-1, 1, 0, 2), (2, -1, 1, 0)}
    assert all(r.kind == DIVISORIAL for r in rays)


def test_blowup_linear_c3_not_extremal():
    fan = fx.blowup_linear(3, 1)
    curves = fx.blowup_curves(3, 1)
    gens = {degrees(r): r.kind for r in extremal_rays(fan)}
    assert gens == {curves["C1"]: DIVISORIAL, curves["C2"]: FIBERING}
    assert curves["C3"] not in gens


def test_separators_certify_extremality(corpus):
    for inst in corpus[:40]:
        for r in extremal_rays(inst.fan):
            r.verify(inst.fan)


def test_is_projective_fixtures():
    for name in fx.NAMES:
        fan, _ = fx.builtin(name)
        assert is_projective(fan)


def test_normalized_scales_to_coprime_integers():
    assert normalized(curve_class(fx.projective_space(2), [2, 2, 2])).degrees == (1, 1, 1)
    with pytest.raises(ValueError):
        normalized(curve_class(fx.projective_space(2), [0, 0, 0]))


def _contract_rho0(fan, rho0):
    ray = next(r for r in extremal_rays(fan) if r.rho0 == rho0)
    return contract(fan, ray)


def test_hexagon_chain_contracts_to_p2():
    fan = fx.hexagon()
    for rho0 in (5, 3, 1):
        step = _contract_rho0(fan, rho0)
        assert isinstance(step, BirationalStep) and step.kind == DIVISORIAL
        fan = step.target
    assert set(fan.rays) == {(1, 0), (0, 1), (-1, -1)}
    assert validate(fan).ok and len(fan.max_cones) == 3


def test_divisorial_step_reverses_by_star_subdivision():
    fan = fx.hexagon()
    step = _contract_rho0(fan, 1)
    back = star_subdivision(step.target, fan.rays[1])
    assert set(back.rays) == set(fan.rays)
    assert pair(step.contracted, [int(i == 1) for i in range(6)]) == -1


def test_p1xp1_fibers_over_p1():
    fan = fx.p1xp1()
    ray = next(r for r in extremal_rays(fan) if degrees(r) == (0, 1, 0, 1))
    f = contract(fan, ray)
    assert isinstance(f, FiberingContraction)
    assert f.base.dim == 1 and len(f.base.rays) == 2
    assert f.fiber_rays == frozenset({1, 3})
    assert sorted(f.fiber.rays) == [(-1,), (1,)]
    assert f.ray_image[1] is None and f.ray_image[3] is None


def test_p2_fibers_over_a_point():
    fan = fx.projective_space(2)
    f = contract(fan, extremal_rays(fan)[0])
    assert f.base.dim == 0
    assert f.fiber_rays == frozenset({0, 1, 2})
    assert validate(f.fiber).ok and len(f.fiber.rays) == 3


def test_contract_rejects_non_extremal():
    fan = fx.blowup_linear(3, 1)
    c3 = curve_class(fan, fx.blowup_curves(3, 1)["C3"])
    fake = extremal_rays(fan)[0].__class__(c3, (0,), (0,) * fan.n_rays)
    with pytest.raises(ValueError):
        contract(fan, fake)


def _flipping(limit=200):
    out = []
    for inst in corpus_instances()[:limit]:
        for r in extremal_rays(inst.fan):
            if r.kind == FLIPPING:
                out.append((inst.fan, r))
    return out


def test_flip_examples_exist_and_share_star_subdivision():
    found = _flipping()
    assert found, "corpus should contain flipping rays"
    for fan, ray in found:
        step = flip(fan, ray)
        assert validate(step.target).ok
        assert step.source.rays == step.target.rays
        assert set(step.removed).isdisjoint(step.added)


def test_flip_is_an_involution():
    for fan, ray in _flipping():
        step = flip(fan, ray)
        opposite = curve_class(step.target, [-x for x in ray.generator.degrees])
        back_ray = next((r for r in extremal_rays(step.target) if r.generator == normalized(opposite)), None)
        assert back_ray is not None and back_ray.kind == FLIPPING
        back = flip(step.target, back_ray)
        assert set(back.target.max_cones) == set(fan.max_cones)


def test_flip_rejects_other_kinds():
    fan = fx.hexagon()
    with pytest.raises(ValueError):
        flip(fan, extremal_rays(fan)[0])


def _divisorial_steps(limit=120):
    out = []
    for inst in corpus_instances()[:limit]:
        for r in extremal_rays(inst.fan):
            if r.kind == DIVISORIAL:
                out.append((inst, contract(inst.fan, r)))
                break
    return out


def test_push_pull_divisors_and_projection_formula():
    steps = _divisorial_steps()
    assert len(steps) > 20
    for inst, step in steps:
        target_d = push_divisor(step, inst.divisor)
        assert push_divisor(step, pull_divisor(step, target_d)) == target_d
        back = pull_divisor(step, target_d)
        for c in wall_curves(step.target):
            assert pair(pull_curve(step, c), back) == pair(c, target_d)
        for c in wall_curves(step.source):
            assert pair(c, back) == pair(push_curve(step, c), target_d)


def test_push_curve_kills_contracted_class():
    for _, step in _divisorial_steps(60):
        assert all(x == 0 for x in push_curve(step, step.contracted).degrees)
        for c in wall_curves(step.target):
            assert push_curve(step, pull_curve(step, c)) == c


def test_hexagon_line_pullback():
    fan = fx.hexagon()
    steps = []
    for rho0 in (5, 3, 1):
        steps.append(_contract_rho0(fan, rho0))
        fan = steps[-1].target
    line = curve_class(fan, [1, 1, 1])
    for step in reversed(steps):
        line = pull_curve(step, line)
    assert line.degrees == (1, 0, 1, 0, 1, 0)
    assert pair(line, fx.hexagon_conic()) == 2
    d = fx.hexagon_conic()
    for step in steps:
        d = push_divisor(step, d)
    assert d == (2, 0, 0)


def test_transport_preserves_supports():
    step = _contract_rho0(fx.hexagon(), 1)
    for c in wall_curves(step.target):
        assert transport(step, c).support == frozenset(step.keep[i] for i in c.support)
    assert transport(step, (1, 2, 3, 4, 5, 6)) == (1, 3, 4, 5, 6)


def test_transport_rejects_wrong_fan():
    step = _contract_rho0(fx.hexagon(), 1)
    with pytest.raises(ValueError):
        push_divisor(step, (1, 2, 3))
    with pytest.raises(ValueError):
        pull_divisor(step, (1, 2, 3, 4, 5, 6))


def test_picard_one_subvarieties_examples():
    def cones(fan):
        return sorted(sorted(g) for g, _ in picard_one_subvarieties(fan))
    assert cones(fx.projective_space(2)) == [[], [0], [1], [2]]
    assert cones(fx.hexagon()) == [[i] for i in range(6)]
    assert cones(fx.quadrilateral()) == [[i] for i in range(4)]
    assert cones(fx.p1xp1()) == [[i] for i in range(4)]


def _hexagon_descent():
    fan, d = fx.hexagon(), fx.hexagon_conic()
    gf = sigma_d(fan, d)
    w = global_ltd(fan, d, gf)
    return fan, run_descent(initial_state(fan, d, w.c, w.i_set, gf))


def test_hexagon_descent():
    fan, (state, trace) = _hexagon_descent()
    assert [s["kind"] for s in trace.steps] == [DIVISORIAL] * 3
    assert sorted(s["rho0"] for s in trace.steps) == [1, 3, 5]
    assert state.labels == (0, 2, 4)
    assert (trace.final_witness.degree, trace.final_witness.i_sum) == (2, 3)


def test_ample_start_needs_no_steps():
    fan, d = fx.projective_space(2), fx.hyperplane(2, 1)
    gf = sigma_d(fan, d)
    w = global_ltd(fan, d, gf)
    assert w is not None and verify_global(fan, d, w)
    state, trace = run_descent(initial_state(fan, d, w.c, w.i_set, gf))
    assert trace.steps == [] and state.fan == fan
    assert trace.final_witness.degree == 1


def test_replay_reproduces_trace():
    fan, (state, trace) = _hexagon_descent()
    assert fan_digest(replay(fan, trace.steps)) == fan_digest(state.fan)
    tampered = [dict(s) for s in trace.steps]
    tampered[-1] = dict(tampered[-1], state=dict(tampered[-1]["state"], fan_digest="0" * 16))
    with pytest.raises(ValueError):
        replay(fan, tampered)


def test_descent_cap():
    fan, d = fx.hexagon(), fx.hexagon_conic()
    gf = sigma_d(fan, d)
    w = global_ltd(fan, d, gf)
    with pytest.raises(CapExceeded):
        run_descent(initial_state(fan, d, w.c, w.i_set, gf), cap=1)


def test_initial_state_checks_conditions():
    fan, d = fx.hexagon(), fx.hexagon_conic()
    gf = sigma_d(fan, d)
    w = global_ltd(fan, d, gf)
    with pytest.raises(AssertionError):
        initial_state(fan, d, w.c, frozenset(), gf)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=199))
def test_descent_invariants_on_corpus(k):
    inst = corpus_instances()[k]
    gf = sigma_d(inst.fan, inst.divisor)
    w = global_ltd(inst.fan, inst.divisor, gf)
    if w is None:
        return
    state, trace = run_descent(initial_state(inst.fan, inst.divisor, w.c, w.i_set, gf))
    assert all(s["kind"] != FIBERING for s in trace.steps)
    assert len(trace.steps) <= 10 * len(inst.fan.walls)
    assert is_nef(state.fan, state.d)
    fw = trace.final_witness
    assert 0 < fw.degree < fw.i_sum <= fw.j_plus_sum
    assert fan_digest(replay(inst.fan, trace.steps)) == fan_digest(state.fan)
