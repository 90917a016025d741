"""Seeded random corpus of complete simplicial fans with nef Cartier divisors."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import atan2, lcm
from typing import Iterator, Optional

from .fan import Fan, mult, star_subdivision, validate
from .intersection import as_divisor, is_cartier, is_nef, pair, wall_curves
from .linalg import primitive
from .lowdeg import pullback_to_refinement
from .points import HomogeneousPoly
from .polytopes import lattice_points


@dataclass(frozen=True)
class Instance:
    name: str
    fan: Fan
    divisor: tuple[Fraction, ...]


def _primitive_vector(rng: random.Random, dim: int, bound: int) -> tuple[int, ...]:
    while True:
        v = tuple(rng.randint(-bound, bound) for _ in range(dim))
        if any(v):
            return primitive(v)


def random_fan_2d(rng: random.Random, max_rays: int = 8, bound: int = 3, max_index: int = 12) -> Fan:
    """Rays sorted by angle; rejected until consecutive rays are less than pi apart.

    Fans whose multiplicities have lcm above ``max_index`` are rejected too:
    their Cartier divisors have polytopes with far too many lattice points.
    """
    while True:
        k = rng.randint(3, max_rays)
        rays = sorted({_primitive_vector(rng, 2, bound) for _ in range(k)}, key=lambda v: atan2(v[1], v[0]))
        if len(rays) < 3:
            continue
        ok = True
        for i in range(len(rays)):
            a, b = rays[i], rays[(i + 1) % len(rays)]
            if a[0] * b[1] - a[1] * b[0] <= 0:
                ok = False
                break
        if ok:
            fan = Fan(2, rays, [{i, (i + 1) % len(rays)} for i in range(len(rays))])
            if _cartier_multiplier(fan) <= max_index:
                return fan


def _base_fan_3d(rng: random.Random) -> Fan:
    kind = rng.choice(("weighted", "weighted", "p1xp2", "p1p1p1"))
    e = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    if kind == "weighted":
        last = tuple(-rng.randint(1, 2) for _ in range(3))
        rays = e + [primitive(last)]
        return Fan(3, rays, [frozenset(c) for c in combinations(range(4), 3)])
    if kind == "p1xp2":
        rays = [(1, 0, 0), (-1, rng.randint(0, 1), 0), (0, 1, 0), (0, 0, 1), (0, -1, -1)]
        cones = [{a, b, c} for a in (0, 1) for b, c in combinations((2, 3, 4), 2)]
        return Fan(3, rays, cones)
    rays = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    cones = [{a, b, c} for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    return Fan(3, rays, cones)


def random_fan_3d(rng: random.Random, max_rays: int = 8) -> tuple[Fan, Optional[Fan]]:
    """A small base fan refined by random star subdivisions.

    Also returns the fan before the last subdivision (None if there was none).
    """
    fan, previous = _base_fan_3d(rng), None
    extra = rng.randint(0, max_rays - fan.n_rays)
    for _ in range(extra):
        cone = sorted(rng.choice(sorted(fan.cones, key=sorted)))
        if len(cone) < 2:
            continue
        v = [0, 0, 0]
        for i in cone:
            w = rng.randint(1, 2)
            v = [x + w * y for x, y in zip(v, fan.rays[i])]
        fan, previous = star_subdivision(fan, primitive(v)), fan
    return fan, previous


def _cartier_multiplier(fan: Fan) -> int:
    out = 1
    for c in fan.max_cones:
        out = lcm(out, mult(fan, c))
    return out


def _nontrivial(fan: Fan, d) -> bool:
    return any(pair(c, d) > 0 for c in wall_curves(fan))


def _smallest_cartier_multiple(fan: Fan, d: tuple[Fraction, ...], bound: int) -> tuple[Fraction, ...]:
    for k in range(1, bound + 1):
        if bound % k == 0 and is_cartier(fan, tuple(k * x for x in d)) is not None:
            return tuple(k * x for x in d)
    raise AssertionError("the lcm of the multiplicities always clears denominators")


def random_nef_cartier(rng: random.Random, fan: Fan, tries: int = 200) -> Optional[tuple[Fraction, ...]]:
    """Rejection sampling on small coefficient vectors, scaled to the least Cartier multiple."""
    bound = _cartier_multiplier(fan)
    for _ in range(tries):
        d = as_divisor(rng.randint(-1, 2) for _ in range(fan.n_rays))
        if not is_nef(fan, d) or not _nontrivial(fan, d):
            continue
        return _smallest_cartier_multiple(fan, d, bound)
    return None


def generate(seed: int = 0, count: int = 200, max_rays: int = 8) -> Iterator[Instance]:
    """Yield ``count`` valid instances, alternating dimensions 2 and 3.

    About a third of the 3-dimensional divisors are pulled back from the fan
    before the last star subdivision, so that non-ample nef divisors occur often.
    """
    rng = random.Random(seed)
    made = 0
    while made < count:
        dim = 2 if made % 2 == 0 else 3
        if dim == 2:
            fan = random_fan_2d(rng, max_rays)
            d = random_nef_cartier(rng, fan)
        else:
            fan, previous = random_fan_3d(rng, max_rays)
            d = None
            if previous is not None and rng.random() < 1 / 3:
                d0 = random_nef_cartier(rng, previous)
                if d0 is not None:
                    d = pullback_to_refinement(previous, d0, fan)
            if d is None:
                d = random_nef_cartier(rng, fan)
        if d is None or not validate(fan).ok:
            continue
        assert is_cartier(fan, d) is not None and is_nef(fan, d)
        yield Instance(f"seed{seed}-{made:03d}-dim{dim}", fan, d)
        made += 1


def random_poly(rng: random.Random, fan: Fan, d, p: int, keep_vertices: bool = False) -> HomogeneousPoly:
    """Random coefficients in F_p on the monomials of class [D].

    With ``keep_vertices`` every vertex monomial gets a nonzero coefficient,
    so that no trivial point is available and the searches are exercised.
    """
    pts = lattice_points(fan, d)
    vertices = set(pts.vertices.values()) if keep_vertices and pts.vertices else set()
    while True:
        terms = []
        for a in pts.points:
            c = rng.randrange(1, p) if a in vertices else rng.randrange(p)
            if c:
                terms.append((a, c))
        if terms:
            return HomogeneousPoly.build(fan, d, p, terms)
