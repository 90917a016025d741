"""End-to-end acceptance checks; each prints one PASS/FAIL line."""

import random
import time
from fractions import Fraction
from itertools import combinations

import pytest

from conftest import corpus_instances
from test_intersection import HEXAGON_TABLE, QUADRILATERAL_TABLE
from toriclow import fixtures as fx
from toriclow.corpus import random_poly
from toriclow.intersection import class_group, curve_class, intersection_table, pair
from toriclow.linalg import CapExceeded
from toriclow.lowdeg import (
    LOW, NOT_LOW, TRIVIAL_POINT, cross_check_iii, global_ltd, global_scan, low_toric_degree, rcc_flag,
    restricted_ltd,
)
from toriclow.mori import DIVISORIAL, FIBERING, initial_state, run_descent
from toriclow.points import is_relevant, rational_point
from toriclow.polytopes import lattice_points, phi_hull, sigma_d


@pytest.fixture
def emit(capsys):
    def _emit(number, title, ok, detail=""):
        line = f"acceptance {number:>2} {title}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return _emit


def test_01_intersection_tables(emit):
    start = time.perf_counter()
    hexagon_ok = intersection_table(fx.hexagon()) == [[Fraction(x) for x in row] for row in HEXAGON_TABLE]
    quad_ok = intersection_table(fx.quadrilateral()) == [[Fraction(x) for x in row] for row in QUADRILATERAL_TABLE]
    elapsed = time.perf_counter() - start
    emit(1, "intersection tables", hexagon_ok and quad_ok and elapsed < 1,
         f"hexagon {hexagon_ok}, quadrilateral {quad_ok}, {elapsed:.3f} s")


def test_02_projective_space(emit):
    start = time.perf_counter()
    wrong = []
    for n in (2, 3, 4):
        fan = fx.projective_space(n)
        for d in range(1, n + 3):
            if low_toric_degree(fan, fx.hyperplane(n, d)).is_low != (d <= n):
                wrong.append((n, d))
    elapsed = time.perf_counter() - start
    emit(2, "projective spaces, low iff d <= n", not wrong and elapsed < 5, f"mismatches {wrong}, {elapsed:.2f} s")


def test_03_weighted_projective_plane(emit):
    fan = fx.weighted_p121()
    wrong = []
    for d in list(range(1, 5)) + list(range(6, 21, 2)):
        if low_toric_degree(fan, fx.p121_divisor(d)).is_low != (d < 4):
            wrong.append(d)
    # odd degrees are not Cartier: a torus-fixed point lies on every such curve
    odd = all(low_toric_degree(fan, fx.p121_divisor(d)).outcome == TRIVIAL_POINT for d in range(1, 21, 2))
    emit(3, "P(1,2,1), low iff d < 4 on Cartier degrees", not wrong and odd,
         f"mismatches {wrong}, odd degrees trivial {odd}")


def test_04_hexagon(emit):
    fan, d = fx.builtin("hexagon")
    no_restricted = restricted_ltd(fan, d) is None
    v = low_toric_degree(fan, d)
    via_model = v.outcome == LOW and v.path == "ample model" and (v.witness.degree, v.witness.anticanonical) == (2, 3)
    gf = sigma_d(fan, d)
    w = global_ltd(fan, d, gf)
    state, trace = run_descent(initial_state(fan, d, w.c, w.i_set, gf))
    kinds = [s["kind"] for s in trace.steps]
    to_p2 = set(state.fan.rays) == set(fx.projective_space(2).rays)
    ok = no_restricted and via_model and kinds == [DIVISORIAL] * 3 and to_p2
    emit(4, "hexagon, 2L low only through its ample model", ok,
         f"restricted absent {no_restricted}, model witness {via_model}, steps {kinds}, ends on P2 {to_p2}")


def test_05_quadrilateral(emit):
    fan, d = fx.builtin("quadrilateral")
    w = restricted_ltd(fan, d)
    restricted = w is not None and w.gamma == frozenset({1}) and w.degree == 1
    scan = global_scan(fan, d, stop=False)
    texts = scan.texts()
    quoted = "D_1·D = 2 > 3/2" in texts and "D_2·D = 1 > 3/4" in texts
    ok = restricted and scan.witness is None and quoted
    emit(5, "quadrilateral, restricted but not global", ok,
         f"restricted witness {restricted}, global absent {scan.witness is None}, report inequalities {quoted}")


def test_06_blowup_family(emit):
    n, k, d = 3, 1, 4
    fan = fx.blowup_linear(n, k)
    curves = {name: curve_class(fan, deg) for name, deg in fx.blowup_curves(n, k).items()}
    rows = []
    ok = True
    for m in (2, 3):
        div = fx.blowup_divisor(n, k, d, m)
        degs = [pair(curves[x], div) for x in ("C1", "C2", "C3")]
        w = rcc_flag(fan, div)
        fires = w is not None
        ok &= degs == [m, d - m, d] and fires == (0 < d - m < k + 2)
        ok &= not fires or (w.ray.generator == curves["C2"] and w.degree == d - m)
        rows.append(f"m={m}: C.D={[str(x) for x in degs]} flag {fires}")
    emit(6, "blow-up family flag", ok, "; ".join(rows))


def test_07_paths_agree(emit, corpus):
    start = time.perf_counter()
    disagree = []
    outcomes = {LOW: 0, NOT_LOW: 0, TRIVIAL_POINT: 0}
    for inst in corpus:
        v = low_toric_degree(inst.fan, inst.divisor)
        outcomes[v.outcome] += 1
        if v.is_low != cross_check_iii(inst.fan, inst.divisor):
            disagree.append(inst.name)
    elapsed = time.perf_counter() - start
    ok = len(corpus) >= 200 and not disagree and elapsed < 300
    emit(7, "decision procedure vs resolution check", ok,
         f"{len(corpus)} instances, {outcomes}, disagreements {disagree}, {elapsed:.1f} s")


def test_08_hull_filters(emit, corpus):
    checked, bad = 0, []
    for inst in corpus:
        pts = lattice_points(inst.fan, inst.divisor)
        gf = sigma_d(inst.fan, inst.divisor)
        for r in range(inst.fan.n_rays + 1):
            for c in combinations(range(inst.fan.n_rays), r):
                hull = phi_hull(gf, c)
                if hull is None:
                    continue
                checked += 1
                if pts.filter_zero_on(c) != pts.filter_zero_on(hull):
                    bad.append((inst.name, c))
    emit(8, "monomial filters by a ray set and by its hull", not bad and checked > 0,
         f"{checked} ray sets, mismatches {bad[:3]}")


def test_09_rational_points(emit, corpus):
    rng = random.Random(20240611)
    runs = found = failures = 0
    for inst in corpus:
        if not low_toric_degree(inst.fan, inst.divisor).is_low:
            continue
        group = class_group(inst.fan)
        for p in (2, 3, 5):
            if not group.h3_ok(p):
                continue
            for keep_vertices in (False, True):
                f = random_poly(rng, inst.fan, inst.divisor, p, keep_vertices)
                runs += 1
                try:
                    r = rational_point(inst.fan, f)
                except CapExceeded:
                    continue
                if r.found:
                    found += 1
                    if f(r.point) != 0 or not is_relevant(inst.fan, r.point):
                        failures += 1
    ok = runs > 0 and found >= 0.99 * runs and failures == 0
    emit(9, "relevant roots on low instances", ok, f"{found}/{runs} found, {failures} failed re-verification")


def _conditions_hold(gf, snap):
    labels = snap["rays"]
    c = [Fraction(x) for x in snap["c"]]
    d = [Fraction(x) for x in snap["d"]]
    i_set = set(snap["i_set"])
    cd = sum(x * y for x, y in zip(c, d))
    i_sum = sum(x for x, lab in zip(c, labels) if lab in i_set)
    a = 0 < cd < i_sum
    hull = gf.hull(lab for x, lab in zip(c, labels) if x < 0)
    b = hull is not None and not (hull & i_set)
    return a and b


def test_10_descent_invariants(emit, corpus):
    traces = steps = 0
    problems = []
    for inst in corpus:
        gf = sigma_d(inst.fan, inst.divisor)
        w = global_ltd(inst.fan, inst.divisor, gf)
        if w is None:
            continue
        cap = 10 * len(inst.fan.walls)
        _, trace = run_descent(initial_state(inst.fan, inst.divisor, w.c, w.i_set, gf), cap=cap)
        traces += 1
        steps += len(trace.steps)
        snaps = [trace.initial] + [s["state"] for s in trace.steps]
        if not all(_conditions_hold(gf, s) for s in snaps):
            problems.append((inst.name, "conditions"))
        if any(s["kind"] == FIBERING for s in trace.steps):
            problems.append((inst.name, "fibering step"))
        if len(trace.steps) > cap:
            problems.append((inst.name, "cap"))
    emit(10, "descent keeps its conditions", not problems and traces > 0,
         f"{traces} traces, {steps} steps, problems {problems[:3]}")
