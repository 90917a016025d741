"""Class groups, curve classes, the intersection pairing and divisor positivity."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, prod
from typing import Iterable, Optional, Sequence

from .fan import Fan, StarFan, Wall, mult, star
from .linalg import cone_member, dot, nullspace, smith_normal_form, solve_exact


def as_divisor(coeffs: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in coeffs)


def format_rational(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def divisor_from_json(data: dict, fan: Optional[Fan] = None) -> tuple[Fraction, ...]:
    try:
        coeffs = as_divisor(data["coeffs"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed divisor data: {exc}") from exc
    if fan is not None and len(coeffs) != fan.n_rays:
        raise ValueError(f"divisor has {len(coeffs)} coefficients, fan has {fan.n_rays} rays")
    return coeffs


def divisor_to_json(d: Sequence) -> dict:
    return {"coeffs": [format_rational(x) for x in d]}


def principal(fan: Fan, m: Sequence) -> tuple:
    """div(chi^m) = (<m, u_rho>)_rho."""
    return tuple(dot(m, u) for u in fan.rays)


@dataclass(frozen=True)
class ClassGroup:
    """Cl = Z^rays / div(M) as Z^free_rank + sum Z/d_i.

    ``quotient_map`` sends a coefficient vector to its coordinates: the first
    len(torsion) entries are residues mod the torsion invariants, the rest
    are the free coordinates.
    """

    free_rank: int
    torsion: tuple[int, ...]
    quotient_map: tuple[tuple[int, ...], ...]

    @property
    def torsion_order(self) -> int:
        return prod(self.torsion)

    def h3_ok(self, p: int) -> bool:
        return gcd(p, self.torsion_order) == 1

    def coordinates(self, d: Sequence[int]) -> tuple[int, ...]:
        img = [dot(row, d) for row in self.quotient_map]
        k = len(self.torsion)
        return tuple(x % t for x, t in zip(img[:k], self.torsion)) + tuple(img[k:])


def class_group(fan: Fan) -> ClassGroup:
    a = [list(u) for u in fan.rays]
    if fan.n_rays < fan.dim:
        raise ValueError("rays do not span N")
    s, u, _ = smith_normal_form(a)
    diag = [s[i][i] for i in range(fan.dim)]
    if len(diag) < fan.dim or any(x == 0 for x in diag):
        raise ValueError("rays do not span N")
    torsion_rows = [i for i, x in enumerate(diag) if x > 1]
    free_rows = list(range(fan.dim, fan.n_rays))
    qmap = tuple(tuple(u[i]) for i in torsion_rows + free_rows)
    return ClassGroup(fan.n_rays - fan.dim, tuple(diag[i] for i in torsion_rows), qmap)


@dataclass(frozen=True)
class CurveClass:
    """A numerical curve class given by its degrees (C.D_rho)_rho."""

    degrees: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(Fraction(x) for x in self.degrees))

    @property
    def j_plus(self) -> frozenset[int]:
        return frozenset(i for i, x in enumerate(self.degrees) if x > 0)

    @property
    def j_minus(self) -> frozenset[int]:
        return frozenset(i for i, x in enumerate(self.degrees) if x < 0)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(i for i, x in enumerate(self.degrees) if x != 0)

    def scaled(self, t) -> "CurveClass":
        return CurveClass(tuple(Fraction(t) * x for x in self.degrees))

    def __neg__(self) -> "CurveClass":
        return self.scaled(-1)

    def to_json(self) -> list[str]:
        return [format_rational(x) for x in self.degrees]


def relation_holds(fan: Fan, degrees: Sequence) -> bool:
    return all(sum((Fraction(c) * u[k] for c, u in zip(degrees, fan.rays)), Fraction(0)) == 0 for k in range(fan.dim))


def curve_class(fan: Fan, degrees: Sequence) -> CurveClass:
    c = CurveClass(tuple(degrees))
    if len(c.degrees) != fan.n_rays:
        raise ValueError("curve class length does not match the fan")
    assert relation_holds(fan, c.degrees), "degrees do not satisfy the ray relation"
    return c


def j_sets(c: CurveClass) -> tuple[frozenset[int], frozenset[int]]:
    return c.j_plus, c.j_minus


def wall_curve(fan: Fan, w: Wall) -> CurveClass:
    """Degrees of the torus-invariant curve V(tau) of a wall."""
    if len(fan.max_cones_containing(w.tau)) != 2:
        raise ValueError("degenerate wall")
    if len(w.sigma1 - w.tau) != 1 or len(w.sigma2 - w.tau) != 1:
        raise ValueError("wall curves are defined here for simplicial maximal cones")
    deg = [Fraction(0)] * fan.n_rays
    mt = mult(fan, w.tau)
    r1, r2 = w.off_rays
    deg[r1] = Fraction(mt, mult(fan, w.sigma1))
    deg[r2] = Fraction(mt, mult(fan, w.sigma2))
    tau = sorted(w.tau)
    rhs = [-(deg[r1] * fan.rays[r1][k] + deg[r2] * fan.rays[r2][k]) for k in range(fan.dim)]
    cols = [[fan.rays[i][k] for i in tau] for k in range(fan.dim)]
    x = solve_exact(cols, rhs)
    assert x is not None
    for i, v in zip(tau, x):
        deg[i] = v
    return curve_class(fan, deg)


@lru_cache(maxsize=512)
def wall_curves(fan: Fan) -> tuple[CurveClass, ...]:
    return tuple(wall_curve(fan, w) for w in fan.walls)


def intersection_table(fan: Fan) -> list[list[Fraction]]:
    """For surfaces: row i lists D_i . D_j (the wall curve of ray i is D_i)."""
    if fan.dim != 2:
        raise ValueError("intersection tables of divisors are only defined here for surfaces")
    return [list(wall_curve(fan, fan.wall_of([i])).degrees) for i in range(fan.n_rays)]


def pair(c: CurveClass, d: Sequence) -> Fraction:
    if len(c.degrees) != len(d):
        raise ValueError("length mismatch between curve class and divisor")
    return sum((x * Fraction(a) for x, a in zip(c.degrees, d)), Fraction(0))


def canonical(fan: Fan) -> tuple[Fraction, ...]:
    return tuple(Fraction(-1) for _ in fan.rays)


@lru_cache(maxsize=512)
def _cartier_data(fan: Fan, d: tuple) -> Optional[dict]:
    out = {}
    for c in fan.max_cones:
        idx = sorted(c)
        m = solve_exact([fan.rays[i] for i in idx], [-d[i] for i in idx])
        if m is None:
            return None
        out[c] = m
    return out


def cartier_data(fan: Fan, d: Sequence) -> dict[frozenset[int], tuple[Fraction, ...]]:
    """Rational m_sigma with <m_sigma, u_rho> = -a_rho on sigma, per maximal cone."""
    data = _cartier_data(fan, as_divisor(d))
    if data is None:
        raise ValueError("divisor is not Q-Cartier")
    return data


def is_cartier(fan: Fan, d: Sequence) -> Optional[dict[frozenset[int], tuple[int, ...]]]:
    data = _cartier_data(fan, as_divisor(d))
    if data is None:
        return None
    if any(x.denominator != 1 for m in data.values() for x in m):
        return None
    return {c: tuple(int(x) for x in m) for c, m in data.items()}


def non_cartier_cone(fan: Fan, d: Sequence) -> Optional[frozenset[int]]:
    data = _cartier_data(fan, as_divisor(d))
    if data is None:
        return fan.max_cones[0]
    for c in fan.max_cones:
        if any(x.denominator != 1 for x in data[c]):
            return c
    return None


def is_nef(fan: Fan, d: Sequence) -> bool:
    return all(pair(c, d) >= 0 for c in wall_curves(fan))


def negative_wall(fan: Fan, d: Sequence) -> Optional[Wall]:
    for w, c in zip(fan.walls, wall_curves(fan)):
        if pair(c, d) < 0:
            return w
    return None


def is_ample(fan: Fan, d: Sequence) -> bool:
    return is_cartier(fan, d) is not None and all(pair(c, d) > 0 for c in wall_curves(fan))


def local_representative(fan: Fan, d: Sequence, sigma: Iterable[int]) -> tuple[Fraction, ...]:
    """d + div(chi^{m_sigma}); vanishes on the rays of sigma."""
    sigma = frozenset(sigma)
    m = cartier_data(fan, d)[sigma]
    rep = tuple(Fraction(a) + x for a, x in zip(d, principal(fan, m)))
    assert all(rep[i] == 0 for i in sigma)
    return rep


def linear_equivalence(fan: Fan, d1: Sequence, d2: Sequence) -> Optional[tuple[int, ...]]:
    """A character m with d1 - d2 = div(m), or None."""
    diff = [Fraction(a) - Fraction(b) for a, b in zip(d1, d2)]
    m = solve_exact([list(u) for u in fan.rays], diff)
    if m is None or any(x.denominator != 1 for x in m):
        return None
    return tuple(int(x) for x in m)


@lru_cache(maxsize=256)
def class_matrix(fan: Fan) -> tuple[tuple[Fraction, ...], ...]:
    """Rows spanning the relations of Cl (x) Q: G with G.div(m) = 0 for all m."""
    return tuple(nullspace([[u[k] for u in fan.rays] for k in range(fan.dim)], fan.n_rays))


def class_vector(fan: Fan, d: Sequence) -> tuple[Fraction, ...]:
    return tuple(dot(row, [Fraction(x) for x in d]) for row in class_matrix(fan))


def is_effective_class(fan: Fan, d: Sequence):
    """Membership of [d] in the cone generated by the [D_rho] in Cl (x) Q."""
    g = class_matrix(fan)
    gens = [tuple(row[i] for row in g) for i in range(fan.n_rays)]
    return cone_member(gens, class_vector(fan, d))


@dataclass(frozen=True)
class Restriction:
    """D restricted to V(gamma), written on the rays of Star(gamma).

    ``ambient`` holds the local-representative coefficients on the adjacent
    rays, ``coeffs`` the same divided by the scale factors m_rho.
    """

    gamma: frozenset[int]
    star: StarFan
    sigma: frozenset[int]
    ambient: tuple[Fraction, ...]
    coeffs: tuple[Fraction, ...]

    def comparisons(self) -> list[tuple[CurveClass, Fraction, Fraction]]:
        """(curve, C.D|_W, C.(-K_W)) for every wall curve of W."""
        out = []
        for c in wall_curves(self.star.fan):
            out.append((c, pair(c, self.coeffs), sum(c.degrees, Fraction(0))))
        return out


def restriction_data(fan: Fan, d: Sequence, gamma: Iterable[int]) -> Restriction:
    gamma = frozenset(gamma)
    st = star(fan, gamma)
    sigma = next(c for c in fan.max_cones if gamma <= c)
    rep = local_representative(fan, d, sigma)
    ambient = tuple(rep[rho] for rho in st.adjacent)
    coeffs = tuple(a / m for a, m in zip(ambient, st.scale))
    return Restriction(gamma, st, sigma, ambient, coeffs)
