"""Extremal rays, toric contractions and flips, and the relative log MMP used for descent."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Optional, Sequence, Union

from .fan import Fan, mult, quotient_projection, star, star_subdivision, validate
from .intersection import CurveClass, as_divisor, curve_class, format_rational, pair, wall_curves
from .linalg import CapExceeded, clear_denominators, cone_member, dot, integer_kernel, primitive, rank, rref, solve_exact, transpose
from .polytopes import GeneralizedFan

DIVISORIAL = "divisorial"
FLIPPING = "flipping"
FIBERING = "fibering"


def normalized(c: CurveClass) -> CurveClass:
    """Positive multiple of c with coprime integer degrees."""
    ints, _ = clear_denominators(c.degrees)
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        raise ValueError("zero curve class")
    return CurveClass(tuple(x // g for x in ints))


@lru_cache(maxsize=256)
def curve_coordinates(fan: Fan) -> tuple[int, ...]:
    """Ray indices whose degrees determine a numerical curve class.

    Curve classes are the relations among the rays; the non-pivot columns
    of the ray matrix are free coordinates on that space.
    """
    _, pivots = rref([[u[k] for u in fan.rays] for k in range(fan.dim)])
    return tuple(i for i in range(fan.n_rays) if i not in pivots)


def _project(fan: Fan, degrees: Sequence) -> tuple[Fraction, ...]:
    return tuple(Fraction(degrees[i]) for i in curve_coordinates(fan))


def _lift_functional(fan: Fan, h: Sequence) -> tuple[Fraction, ...]:
    out = [Fraction(0)] * fan.n_rays
    for i, x in zip(curve_coordinates(fan), h):
        out[i] = Fraction(x)
    return tuple(out)


@dataclass(frozen=True)
class ExtremalRay:
    """An extremal ray of the Mori cone spanned by wall curve classes.

    ``separator`` is a divisor pairing negatively with the generator and
    nonnegatively with every other wall class: the extremality certificate.
    """

    generator: CurveClass
    walls: tuple[int, ...]
    separator: tuple[Fraction, ...]

    @property
    def j_plus(self) -> frozenset[int]:
        return self.generator.j_plus

    @property
    def j_minus(self) -> frozenset[int]:
        return self.generator.j_minus

    @property
    def kind(self) -> str:
        k = len(self.j_minus)
        return FIBERING if k == 0 else DIVISORIAL if k == 1 else FLIPPING

    @property
    def rho0(self) -> Optional[int]:
        return next(iter(self.j_minus)) if self.kind == DIVISORIAL else None

    def verify(self, fan: Fan) -> None:
        assert pair(self.generator, self.separator) < 0
        for c in wall_curves(fan):
            if normalized(c) != self.generator:
                assert pair(c, self.separator) >= 0

    def to_json(self) -> dict:
        return {
            "generator": self.generator.to_json(),
            "walls": list(self.walls),
            "kind": self.kind,
            "j_plus": sorted(self.j_plus),
            "j_minus": sorted(self.j_minus),
        }


@lru_cache(maxsize=256)
def extremal_rays(fan: Fan) -> tuple[ExtremalRay, ...]:
    groups: dict[CurveClass, list[int]] = {}
    for w, c in zip(fan.walls, wall_curves(fan)):
        groups.setdefault(normalized(c), []).append(w.index)
    classes = list(groups)
    out = []
    for k, c in enumerate(classes):
        others = [_project(fan, x.degrees) for j, x in enumerate(classes) if j != k]
        res = cone_member(others, _project(fan, c.degrees))
        if res.member:
            continue
        ray = ExtremalRay(c, tuple(groups[c]), _lift_functional(fan, res.separator))
        ray.verify(fan)
        out.append(ray)
    return tuple(out)


def is_projective(fan: Fan) -> bool:
    """Diagnostic: some divisor is positive on every wall curve.

    By Gordan's alternative this fails exactly when 0 is a convex
    combination of the wall classes.
    """
    lifted = [_project(fan, c.degrees) + (Fraction(1),) for c in wall_curves(fan)]
    target = tuple(Fraction(0) for _ in curve_coordinates(fan)) + (Fraction(1),)
    return not cone_member(lifted, target).member


@dataclass(frozen=True)
class BirationalStep:
    """A divisorial contraction or a flip, source -> target.

    ``keep[i]`` is the source index of target ray i; ``removed`` and
    ``added`` list maximal cones in source ray indices. ``contracted`` is
    the generator of the ray, scaled so that it pairs to -1 with D_rho0
    for divisorial steps.
    """

    kind: str
    source: Fan
    target: Fan
    removed: tuple[frozenset[int], ...]
    added: tuple[frozenset[int], ...]
    contracted: CurveClass
    rho0: Optional[int] = None
    keep: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "contracted": self.contracted.to_json(),
            "rho0": self.rho0,
            "removed": [sorted(c) for c in self.removed],
            "added": [sorted(c) for c in self.added],
        }


@dataclass(frozen=True)
class FiberingContraction:
    """Contraction onto a lower-dimensional base N / U_0, U_0 = span(J+)."""

    source: Fan
    base: Fan
    projection: tuple[tuple[int, ...], ...]
    fiber_rays: frozenset[int]
    fiber: Fan
    ray_image: tuple[Optional[int], ...]


def _ray_sets(fan: Fan, ray: ExtremalRay) -> list[frozenset[int]]:
    return [fan.walls[i].support for i in ray.walls]


def _divisorial(fan: Fan, ray: ExtremalRay) -> BirationalStep:
    rho0 = ray.rho0
    keep = tuple(i for i in range(fan.n_rays) if i != rho0)
    new_index = {i: k for k, i in enumerate(keep)}
    removed = tuple(c for c in fan.max_cones if rho0 in c)
    added: list[frozenset[int]] = []
    for support in _ray_sets(fan, ray):
        c = support - {rho0}
        if c not in added:
            added.append(c)
    cones = [c for c in fan.max_cones if rho0 not in c] + added
    target = Fan(fan.dim, [fan.rays[i] for i in keep], [frozenset(new_index[i] for i in c) for c in cones])
    report = validate(target)
    assert report.ok, report.problems
    # reversing: the source is the star subdivision of the target at u_rho0
    back = star_subdivision(target, fan.rays[rho0])
    expected = {frozenset(new_index.get(i, target.n_rays) for i in c) for c in fan.max_cones}
    assert set(back.max_cones) == expected
    c0 = ray.generator.scaled(Fraction(-1, 1) / ray.generator.degrees[rho0])
    return BirationalStep(DIVISORIAL, fan, target, removed, tuple(added), c0, rho0, keep)


def flip(fan: Fan, ray: ExtremalRay) -> BirationalStep:
    if ray.kind != FLIPPING:
        raise ValueError("flip needs a flipping extremal ray")
    removed: list[frozenset[int]] = []
    added: list[frozenset[int]] = []
    maxes = set(fan.max_cones)
    for support in _ray_sets(fan, ray):
        for rho in sorted(ray.j_plus):
            c = support - {rho}
            assert c in maxes, "extremal wall must expose every cone of J+"
            if c not in removed:
                removed.append(c)
        for rho in sorted(ray.j_minus):
            c = support - {rho}
            if c not in added:
                added.append(c)
    cones = [c for c in fan.max_cones if c not in removed] + added
    target = Fan(fan.dim, fan.rays, cones)
    report = validate(target)
    assert report.ok, report.problems
    v = primitive(clear_denominators(
        [sum((ray.generator.degrees[i] * fan.rays[i][k] for i in ray.j_plus), Fraction(0)) for k in range(fan.dim)]
    )[0])
    assert set(star_subdivision(fan, v).max_cones) == set(star_subdivision(target, v).max_cones)
    return BirationalStep(FLIPPING, fan, target, tuple(removed), tuple(added), ray.generator, None,
                          tuple(range(fan.n_rays)))


def _fibering(fan: Fan, ray: ExtremalRay) -> FiberingContraction:
    j_plus = sorted(ray.j_plus)
    gens = [fan.rays[i] for i in j_plus]
    proj, _, r = quotient_projection(fan.dim, gens)
    assert len(j_plus) == r + 1, "fiber of a fibering contraction has 1 + dim U_0 rays"
    qdim = fan.dim - r
    base_rays: list[tuple[int, ...]] = []
    image: list[Optional[int]] = []
    for u in fan.rays:
        w = tuple(dot(u, [row[k] for row in proj]) for k in range(qdim)) if qdim else ()
        if not any(w):
            image.append(None)
            continue
        w = primitive(w)
        if w not in base_rays:
            base_rays.append(w)
        image.append(base_rays.index(w))
    if qdim:
        cones: list[frozenset[int]] = []
        for c in fan.max_cones:
            img = frozenset(image[i] for i in c if image[i] is not None)
            if rank([base_rays[i] for i in img]) == qdim and img not in cones:
                cones.append(img)
        cones = [c for c in cones if not any(c < o for o in cones)]
        base = Fan(qdim, base_rays, cones)
        report = validate(base)
        assert report.ok, report.problems
    else:
        base = Fan(0, [], [frozenset()])
    basis = integer_kernel(transpose(proj), fan.dim) if qdim else [
        tuple(int(i == j) for j in range(fan.dim)) for i in range(fan.dim)]
    cols = [[b[k] for b in basis] for k in range(fan.dim)]
    fiber_rays = []
    for u in gens:
        x = solve_exact(cols, list(u))
        assert x is not None and all(t.denominator == 1 for t in x)
        fiber_rays.append(tuple(int(t) for t in x))
    fiber_cones = [frozenset(k for k in range(len(gens)) if k != j) for j in range(len(gens))]
    fiber = Fan(r, fiber_rays, fiber_cones)
    assert validate(fiber).ok
    return FiberingContraction(fan, base, tuple(tuple(row) for row in proj), frozenset(j_plus), fiber, tuple(image))


def contract(fan: Fan, ray: ExtremalRay) -> Union[BirationalStep, FiberingContraction]:
    if ray not in extremal_rays(fan):
        raise ValueError("ray is not extremal")
    if ray.kind == DIVISORIAL:
        return _divisorial(fan, ray)
    if ray.kind == FLIPPING:
        return flip(fan, ray)
    return _fibering(fan, ray)


def push_divisor(step: BirationalStep, d: Sequence) -> tuple[Fraction, ...]:
    d = as_divisor(d)
    if len(d) != step.source.n_rays:
        raise ValueError("divisor does not live on the source fan")
    return tuple(d[i] for i in step.keep)


def pull_divisor(step: BirationalStep, d: Sequence) -> tuple[Fraction, ...]:
    """Pullback of a Q-Cartier class: zero pairing with the contracted class."""
    d = as_divisor(d)
    if len(d) != step.target.n_rays:
        raise ValueError("divisor does not live on the target fan")
    out = [Fraction(0)] * step.source.n_rays
    for k, i in enumerate(step.keep):
        out[i] = d[k]
    if step.kind == DIVISORIAL:
        out[step.rho0] = pair(step.contracted, out)
        assert pair(step.contracted, out) == 0
    return tuple(out)


def pull_curve(step: BirationalStep, c: CurveClass) -> CurveClass:
    """Numerical pullback: same degrees on surviving rays, 0 on rho0."""
    if len(c.degrees) != step.target.n_rays:
        raise ValueError("curve class does not live on the target fan")
    out = [Fraction(0)] * step.source.n_rays
    for k, i in enumerate(step.keep):
        out[i] = c.degrees[k]
    return curve_class(step.source, out)


def push_curve(step: BirationalStep, c: CurveClass) -> CurveClass:
    """Pushforward of curve classes: kills the contracted class, section of pull_curve."""
    if len(c.degrees) != step.source.n_rays:
        raise ValueError("curve class does not live on the source fan")
    if step.kind == DIVISORIAL:
        b0 = c.degrees[step.rho0]
        lifted = [x + b0 * y for x, y in zip(c.degrees, step.contracted.degrees)]
        assert lifted[step.rho0] == 0
    else:
        lifted = list(c.degrees)
    return curve_class(step.target, [lifted[i] for i in step.keep])


def transport(step: BirationalStep, obj):
    """Divisors are pushed forward, curve classes pulled back numerically."""
    if isinstance(obj, CurveClass):
        back = pull_curve(step, obj)
        assert back.support == frozenset(step.keep[i] for i in obj.support)
        return back
    return push_divisor(step, obj)


def picard_one_subvarieties(fan: Fan) -> list[tuple[frozenset[int], object]]:
    """Cones gamma whose star is a complete fan of Picard number one (dim >= 1)."""
    out = []
    for gamma in sorted(fan.cones, key=lambda c: (len(c), sorted(c))):
        g = fan.cone_dim(gamma)
        if g >= fan.dim:
            continue
        adjacent = sum(1 for f in fan.cones if gamma < f and fan.cone_dim(f) == g + 1)
        if adjacent != fan.dim - g + 1:
            continue
        out.append((gamma, star(fan, gamma)))
    return out


@dataclass(frozen=True)
class MMPState:
    """State of the relative MMP: current fan with original ray labels.

    ``gf`` is the divisor fan of the initial divisor, in original labels;
    it stays fixed in N_R through every step.
    """

    fan: Fan
    labels: tuple[int, ...]
    d: tuple[Fraction, ...]
    c: CurveClass
    i_set: frozenset[int]
    gf: GeneralizedFan
    steps: tuple[BirationalStep, ...] = ()

    @property
    def boundary(self) -> frozenset[int]:
        return frozenset(range(self.fan.n_rays)) - self.i_set

    def k_plus_b(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(-1) if i in self.i_set else Fraction(0) for i in range(self.fan.n_rays))

    def condition_a(self) -> bool:
        cd = pair(self.c, self.d)
        return 0 < cd < sum((self.c.degrees[i] for i in self.i_set), Fraction(0))

    def condition_b(self) -> Optional[frozenset[int]]:
        """The cone of the divisor fan (original labels) witnessing (b), if any."""
        hull = self.gf.hull(self.labels[i] for i in self.c.j_minus)
        if hull is None or any(self.labels[i] in hull for i in self.i_set):
            return None
        return hull

    def check(self) -> None:
        assert self.i_set <= self.c.j_plus, "I must lie in J_C+"
        assert self.condition_a(), "condition (a) violated"
        assert self.condition_b() is not None, "condition (b) violated"

    def snapshot(self) -> dict:
        return {
            "rays": [self.labels[i] for i in range(self.fan.n_rays)],
            "c": self.c.to_json(),
            "d": [format_rational(x) for x in self.d],
            "i_set": sorted(self.labels[i] for i in self.i_set),
            "fan_digest": fan_digest(self.fan),
        }


def fan_digest(fan: Fan) -> str:
    data = {"dim": fan.dim, "rays": [list(r) for r in fan.rays], "max_cones": sorted(sorted(c) for c in fan.max_cones)}
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()[:16]


def initial_state(fan: Fan, d: Sequence, c: CurveClass, i_set: Iterable[int], gf: GeneralizedFan) -> MMPState:
    state = MMPState(fan, tuple(range(fan.n_rays)), as_divisor(d), c, frozenset(i_set), gf)
    state.check()
    return state


@dataclass(frozen=True)
class DescentWitness:
    """An extremal class on the final fan with 0 < C.D < sum over I of C.D_rho."""

    ray: ExtremalRay
    coefficient: Fraction
    degree: Fraction
    i_sum: Fraction
    j_plus_sum: Fraction

    def to_json(self) -> dict:
        return {
            "ray": self.ray.to_json(),
            "coefficient": format_rational(self.coefficient),
            "degree": format_rational(self.degree),
            "i_sum": format_rational(self.i_sum),
            "j_plus_sum": format_rational(self.j_plus_sum),
        }


@dataclass
class MMPTrace:
    initial: dict
    steps: list[dict] = field(default_factory=list)
    final_witness: Optional[DescentWitness] = None

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "steps": self.steps,
            "final_witness": self.final_witness.to_json() if self.final_witness else None,
        }


def _selection_key(state: MMPState, ray: ExtremalRay):
    value = pair(ray.generator, state.k_plus_b())
    scale = sum((abs(x) for x in ray.generator.degrees), Fraction(0))
    return (value / scale, min(ray.walls))


def _apply(state: MMPState, step: BirationalStep) -> MMPState:
    labels = tuple(state.labels[i] for i in step.keep)
    index = {i: k for k, i in enumerate(step.keep)}
    c = push_curve(step, state.c)
    d = push_divisor(step, state.d)
    i_set = frozenset(index[i] for i in state.i_set if i in index)
    return MMPState(step.target, labels, d, c, i_set, state.gf, state.steps + (step,))


def run_descent(initial: MMPState, cap: Optional[int] = None) -> tuple[MMPState, MMPTrace]:
    initial.check()
    cap = 10 * len(initial.fan.walls) if cap is None else cap
    state = initial
    trace = MMPTrace(initial.snapshot())
    for iteration in range(cap + 1):
        kb = state.k_plus_b()
        relative = [r for r in extremal_rays(state.fan) if pair(r.generator, state.d) == 0]
        negative = [r for r in relative if pair(r.generator, kb) < 0]
        for r in relative:
            if r.kind == FIBERING:
                assert pair(r.generator, kb) == 0, "fibering relative ray must be (K+B)-trivial"
        if not negative:
            trace.final_witness = final_witness(state)
            return state, trace
        if iteration == cap:
            raise CapExceeded(f"descent did not terminate within {cap} steps; this is a bug")
        ray = min(negative, key=lambda r: _selection_key(state, r))
        step = contract(state.fan, ray)
        assert isinstance(step, BirationalStep)
        if step.kind == DIVISORIAL:
            assert step.rho0 not in state.c.j_minus, "an exceptional divisor in J_C- must be (K+B)-trivial"
            d_back = pull_divisor(step, push_divisor(step, state.d))
            assert all(pair(w, d_back) == pair(w, state.d) for w in wall_curves(state.fan))
        rho0_label = None if step.rho0 is None else state.labels[step.rho0]
        state = _apply(state, step)
        state.check()
        trace.steps.append({"kind": step.kind, "ray": ray.to_json(), "rho0": rho0_label, "state": state.snapshot()})
    raise AssertionError("unreachable")


def final_witness(state: MMPState) -> DescentWitness:
    """Decompose C into extremal classes and expose one with low degree."""
    rays = extremal_rays(state.fan)
    gens = [_project(state.fan, r.generator.degrees) for r in rays]
    res = cone_member(gens, _project(state.fan, state.c.degrees))
    assert res.member, "C must be effective once J_C- lies in a cone"
    for lam, r in zip(res.coefficients, rays):
        if lam <= 0:
            continue
        deg = pair(r.generator, state.d)
        i_sum = sum((r.generator.degrees[i] for i in state.i_set), Fraction(0))
        if 0 < deg < i_sum:
            j_sum = sum((r.generator.degrees[i] for i in r.j_plus), Fraction(0))
            assert i_sum <= j_sum
            return DescentWitness(r, lam, deg, i_sum, j_sum)
    raise AssertionError("no extremal component with low degree")


def replay(fan: Fan, steps: Sequence[dict]) -> Fan:
    """Re-apply the recorded extremal contractions to ``fan``."""
    current = fan
    for s in steps:
        target = CurveClass(tuple(Fraction(x) for x in s["ray"]["generator"]))
        ray = next((r for r in extremal_rays(current) if r.generator == target), None)
        if ray is None:
            raise ValueError("recorded ray is not extremal on the replayed fan")
        step = contract(current, ray)
        current = step.target
        if fan_digest(current) != s["state"]["fan_digest"]:
            raise ValueError("replayed fan differs from the recorded one")
    return current

