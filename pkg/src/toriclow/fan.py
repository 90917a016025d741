"""Fans, star fans, star subdivisions and toric resolution."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations, product
from math import gcd
from typing import Iterable, Optional, Sequence

from .linalg import (
    cone_member,
    dot,
    lattice_index,
    matmul,
    nullspace,
    primitive,
    rank,
    smith_normal_form,
    solve_exact,
)

Cone = frozenset


def _cone(c: Iterable[int]) -> frozenset[int]:
    return frozenset(int(i) for i in c)


@dataclass(frozen=True)
class Fan:
    """A rational polyhedral fan given by primitive rays and maximal cones.

    Cones are stored as frozensets of ray indices. Simplicial fans are the
    main use case, but faces of non-simplicial cones are handled too so that
    quotient fans of degenerate divisors can be analysed.
    """

    dim: int
    rays: tuple[tuple[int, ...], ...]
    max_cones: tuple[frozenset[int], ...]

    def __post_init__(self):
        rays = tuple(tuple(int(x) for x in r) for r in self.rays)
        cones = tuple(_cone(c) for c in self.max_cones)
        for r in rays:
            if len(r) != self.dim:
                raise ValueError(f"ray {r} does not have dimension {self.dim}")
        for c in cones:
            for i in c:
                if not 0 <= i < len(rays):
                    raise ValueError(f"cone {sorted(c)} refers to missing ray {i}")
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "max_cones", cones)

    @classmethod
    def from_json(cls, data: dict) -> "Fan":
        try:
            return cls(int(data["dim"]), data["rays"], data["max_cones"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed fan data: {exc}") from exc

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "rays": [list(r) for r in self.rays],
            "max_cones": [sorted(c) for c in self.max_cones],
        }

    @property
    def n_rays(self) -> int:
        return len(self.rays)

    def generators(self, c: Iterable[int]) -> list[tuple[int, ...]]:
        return [self.rays[i] for i in sorted(c)]

    def cone_rank(self, c: Iterable[int]) -> int:
        return rank(self.generators(c))

    @cached_property
    def is_simplicial(self) -> bool:
        return all(self.cone_rank(c) == len(c) for c in self.max_cones)

    @cached_property
    def max_cone_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << i for i in c) for c in self.max_cones)

    def in_some_max_cone(self, c: Iterable[int]) -> bool:
        """Is the ray set c contained in a single maximal cone?"""
        m = sum(1 << i for i in set(c))
        return any(m & ~mc == 0 for mc in self.max_cone_masks)

    @cached_property
    def cones(self) -> frozenset[frozenset[int]]:
        """All cones of the fan (including the zero cone) as ray sets."""
        out: set[frozenset[int]] = set()
        for c in self.max_cones:
            out |= self._faces(c)
        out.add(frozenset())
        return frozenset(out)

    @cached_property
    def _dims(self) -> dict:
        return {c: self.cone_rank(c) for c in self.cones}

    def cone_dim(self, c: frozenset[int]) -> int:
        return self._dims[c]

    def cones_of_dim(self, k: int) -> list[frozenset[int]]:
        return sorted((c for c, d in self._dims.items() if d == k), key=sorted)

    def is_cone(self, c: Iterable[int]) -> bool:
        return _cone(c) in self.cones

    def max_cones_containing(self, c: Iterable[int]) -> list[int]:
        c = _cone(c)
        return [i for i, m in enumerate(self.max_cones) if c <= m]

    def _faces(self, cone: frozenset[int]) -> set[frozenset[int]]:
        idx = sorted(cone)
        r = self.cone_rank(idx)
        if r == len(idx):
            return {frozenset(s) for k in range(len(idx) + 1) for s in combinations(idx, k)}
        out = {cone}
        for facet in self._facets(idx, r):
            out |= self._faces(facet)
        return out

    def _facets(self, idx: list[int], r: int) -> set[frozenset[int]]:
        vecs = {i: self.rays[i] for i in idx}
        facets = set()
        for s in combinations(idx, r - 1):
            if rank([vecs[i] for i in s]) != r - 1:
                continue
            normals = nullspace([vecs[i] for i in s], self.dim) if s else nullspace([], self.dim)
            values = None
            for h in normals:
                vals = [dot(h, vecs[i]) for i in idx]
                if any(vals):
                    values = vals
                    break
            if values is None:
                continue
            if all(x >= 0 for x in values) or all(x <= 0 for x in values):
                facets.add(frozenset(i for i, x in zip(idx, values) if x == 0))
        return facets

    @cached_property
    def walls(self) -> tuple["Wall", ...]:
        """Codimension-one cones lying in exactly two maximal cones."""
        out = []
        for tau in self.cones_of_dim(self.dim - 1) if self.dim > 0 else []:
            containing = self.max_cones_containing(tau)
            if len(containing) == 2:
                s1, s2 = (self.max_cones[i] for i in containing)
                out.append(Wall(len(out), tau, s1, s2))
        return tuple(out)

    def wall_of(self, tau: Iterable[int]) -> "Wall":
        tau = _cone(tau)
        for w in self.walls:
            if w.tau == tau:
                return w
        raise ValueError(f"{sorted(tau)} is not a wall")


@dataclass(frozen=True)
class Wall:
    """A codimension-one cone tau = sigma1 & sigma2."""

    index: int
    tau: frozenset[int]
    sigma1: frozenset[int]
    sigma2: frozenset[int]

    @property
    def off_rays(self) -> tuple[int, int]:
        (a,) = self.sigma1 - self.tau
        (b,) = self.sigma2 - self.tau
        return a, b

    @property
    def support(self) -> frozenset[int]:
        return self.sigma1 | self.sigma2


@dataclass(frozen=True)
class FanReport:
    simplicial: bool
    primitive: bool
    distinct: bool
    every_ray_used: bool
    fan_axiom: bool
    complete: bool
    smooth: bool
    problems: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return (
            self.simplicial and self.primitive and self.distinct and self.every_ray_used
            and self.fan_axiom and self.complete
        )

    def to_json(self) -> dict:
        return {
            "simplicial": self.simplicial,
            "primitive": self.primitive,
            "distinct": self.distinct,
            "every_ray_used": self.every_ray_used,
            "fan_axiom": self.fan_axiom,
            "complete": self.complete,
            "smooth": self.smooth,
            "problems": list(self.problems),
            "ok": self.ok,
        }


def _dual_separator(fan: Fan, s1: frozenset[int], s2: frozenset[int]) -> bool:
    """Try h = sum of the dual basis vectors of s1 off the common rays.

    h vanishes on the common rays and is positive on the other rays of s1, so
    h <= 0 on s2 certifies that the two cones meet in cone(common).
    """
    idx = sorted(s1)
    if len(idx) != fan.dim or fan.cone_rank(idx) != fan.dim:
        return False
    common = s1 & s2
    target = [0 if i in common else 1 for i in idx]
    h = solve_exact(fan.generators(idx), target)
    return h is not None and all(dot(h, fan.rays[j]) <= 0 for j in s2 - common)


def _proper_intersection(fan: Fan, s1: frozenset[int], s2: frozenset[int]) -> bool:
    # s1 & s2 meet in cone(common) iff no point of both has weight on s1 - common
    common = s1 & s2
    only1 = sorted(s1 - common)
    if not only1:
        return True
    if _dual_separator(fan, s1, s2):
        return True
    gens = [fan.rays[i] + (1,) for i in only1]
    gens += [fan.rays[i] + (0,) for i in sorted(common)]
    gens += [tuple(-x for x in fan.rays[j]) + (0,) for j in sorted(s2)]
    target = (0,) * fan.dim + (1,)
    return not cone_member(gens, target).member


def validate(fan: Fan) -> FanReport:
    problems = []
    prim = True
    for i, r in enumerate(fan.rays):
        if all(x == 0 for x in r) or primitive(r) != r:
            prim = False
            problems.append(f"ray {i} {list(r)} is not primitive")
    distinct = len(set(fan.rays)) == len(fan.rays)
    if not distinct:
        problems.append("rays are not pairwise distinct")
    used = set().union(*fan.max_cones) if fan.max_cones else set()
    every_ray_used = used == set(range(fan.n_rays))
    if not every_ray_used:
        problems.append(f"rays {sorted(set(range(fan.n_rays)) - used)} lie in no maximal cone")
    simplicial = fan.is_simplicial
    if not simplicial:
        problems.append("some maximal cone is not simplicial")

    axiom = True
    for a, b in combinations(range(len(fan.max_cones)), 2):
        s1, s2 = fan.max_cones[a], fan.max_cones[b]
        if not (_proper_intersection(fan, s1, s2) and _proper_intersection(fan, s2, s1)):
            axiom = False
            problems.append(f"cones {sorted(s1)} and {sorted(s2)} do not meet in a common face")

    complete = True
    if fan.dim > 0:
        if any(fan.cone_rank(c) != fan.dim for c in fan.max_cones):
            complete = False
            problems.append("not complete: fan is not pure of full dimension")
        else:
            for tau in fan.cones_of_dim(fan.dim - 1):
                k = len(fan.max_cones_containing(tau))
                if k != 2:
                    complete = False
                    problems.append(f"not complete: facet {sorted(tau)} lies in {k} maximal cone(s)")
                    break
    smooth = simplicial and all(mult(fan, c) == 1 for c in fan.max_cones)
    return FanReport(simplicial, prim, distinct, every_ray_used, axiom, complete, smooth, tuple(problems))


def mult(fan: Fan, c: Iterable[int]) -> int:
    """Index of the lattice generated by the rays of c in its saturation."""
    c = _cone(c)
    if not fan.is_cone(c):
        raise ValueError(f"{sorted(c)} is not a cone of the fan")
    return lattice_index(fan.generators(c))


def quotient_projection(dim: int, generators: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], int]:
    """Integer matrices for N -> N / (N & span(generators)).

    Returns (P, L, r): P is dim x (dim-r) with u -> u.P surjective onto
    Z^(dim-r) with kernel the saturated span; L is (dim-r) x dim with
    L-rows lifting the standard basis (so w.L.P == w).
    """
    if not generators:
        eye = [[int(i == j) for j in range(dim)] for i in range(dim)]
        return eye, eye, 0
    s, _, v = smith_normal_form([list(g) for g in generators])
    r = sum(1 for i in range(min(len(s), dim)) if s[i][i] != 0)
    proj = [row[r:] for row in v]
    vinv = _unimodular_inverse(v)
    lift = vinv[r:]
    return proj, lift, r


def _unimodular_inverse(v: list[list[int]]) -> list[list[int]]:
    n = len(v)
    cols = []
    for j in range(n):
        e = [int(i == j) for i in range(n)]
        cols.append(solve_exact(v, e))
    inv = [[cols[j][i] for j in range(n)] for i in range(n)]
    assert all(x.denominator == 1 for r in inv for x in r)
    return [[int(x) for x in r] for r in inv]


@dataclass(frozen=True)
class StarFan:
    """The fan Star(gamma) in N(gamma) = N / N_gamma.

    ``faces[i]`` is the cone of the ambient fan that maps onto star ray i,
    ``adjacent[i]`` a representative ambient ray in it, and
    ``scale[i]`` the integer m with image(u_adjacent) = m * (star ray i).
    """

    gamma: frozenset[int]
    fan: Fan
    projection: tuple[tuple[int, ...], ...]
    adjacent: tuple[int, ...]
    faces: tuple[frozenset[int], ...]
    scale: tuple[int, ...]

    def project(self, u: Sequence[int]) -> tuple[int, ...]:
        if self.fan.dim == 0:
            return ()
        return tuple(matmul([list(u)], self.projection)[0])


def star(fan: Fan, gamma: Iterable[int]) -> StarFan:
    gamma = _cone(gamma)
    if not fan.is_cone(gamma):
        raise ValueError(f"{sorted(gamma)} is not a cone of the fan")
    proj, _, r = quotient_projection(fan.dim, fan.generators(gamma))
    qdim = fan.dim - r
    target_rank = fan.cone_dim(gamma) + 1
    faces = sorted(
        (f for f in fan.cones if gamma < f and fan.cone_dim(f) == target_rank),
        key=lambda f: min(f - gamma),
    )
    rays, adjacent, scale = [], [], []
    for f in faces:
        rho = min(f - gamma)
        image = matmul([list(fan.rays[rho])], proj)[0] if qdim else []
        m = 0
        for x in image:
            m = gcd(m, x)
        rays.append(tuple(x // m for x in image))
        adjacent.append(rho)
        scale.append(m)
    cones = []
    for c in fan.max_cones:
        if gamma <= c:
            cones.append(frozenset(i for i, f in enumerate(faces) if f <= c))
    star_fan = Fan(qdim, rays, cones)
    if fan.is_simplicial:
        base = mult(fan, gamma)
        for rho, f, m in zip(adjacent, faces, scale):
            assert mult(fan, f) == m * base
    return StarFan(gamma, star_fan, tuple(tuple(r) for r in proj), tuple(adjacent), tuple(faces), tuple(scale))


def cone_coordinates(fan: Fan, c: Iterable[int], v: Sequence) -> Optional[dict[int, Fraction]]:
    """Coordinates of v in the rays of the simplicial cone c (None if outside span)."""
    idx = sorted(c)
    if not idx:
        return {} if all(x == 0 for x in v) else None
    cols = [[fan.rays[i][k] for i in idx] for k in range(fan.dim)]
    x = solve_exact(cols, list(v))
    if x is None:
        return None
    return dict(zip(idx, x))


def locate(fan: Fan, v: Sequence) -> tuple[Optional[frozenset[int]], list[int]]:
    """Smallest cone containing v, and the maximal cones containing it."""
    tau = None
    containing = []
    for k, c in enumerate(fan.max_cones):
        coords = cone_coordinates(fan, c, v)
        if coords is None or any(x < 0 for x in coords.values()):
            continue
        containing.append(k)
        tau = frozenset(i for i, x in coords.items() if x > 0)
    return tau, containing


def star_subdivision(fan: Fan, v: Sequence[int]) -> Fan:
    """Star subdivision of a simplicial fan at the primitive vector v."""
    v = tuple(int(x) for x in v)
    if primitive(v) != v:
        raise ValueError(f"{v} is not primitive")
    if v in fan.rays:
        return fan
    tau, containing = locate(fan, v)
    if tau is None:
        raise ValueError(f"{v} lies outside the support of the fan")
    new = fan.n_rays
    cones = []
    for c in fan.max_cones:
        if tau <= c:
            for rho in sorted(tau):
                cones.append((c - {rho}) | {new})
        else:
            cones.append(c)
    return Fan(fan.dim, fan.rays + (v,), cones)


def parallelepiped_points(generators: Sequence[Sequence[int]]) -> list[tuple[tuple[Fraction, ...], tuple[int, ...]]]:
    """Lattice points sum(l_i g_i), 0 <= l_i < 1, of a full-dimensional simplicial cone.

    Returned as (coordinates, point) pairs, including the origin.
    """
    g = [list(x) for x in generators]
    n = len(g)
    s, _, v = smith_normal_form(g)
    vinv = _unimodular_inverse(v)
    # lam = p . G^-1; column j of G^-1 solves G x = e_j
    ginv_cols = [solve_exact(g, [int(k == j) for k in range(n)]) for j in range(n)]
    out = []
    for q in product(*(range(s[i][i]) for i in range(n))):
        p = [sum(q[i] * vinv[i][k] for i in range(n)) for k in range(n)]
        lam = [sum((p[k] * ginv_cols[j][k] for k in range(n)), Fraction(0)) for j in range(n)]
        lam = [x - (x.numerator // x.denominator) for x in lam]
        point = tuple(int(sum(lam[i] * g[i][k] for i in range(n))) for k in range(n))
        out.append((tuple(lam), point))
    return out


@dataclass(frozen=True)
class ResolutionStep:
    cone: frozenset[int]
    vector: tuple[int, ...]


def resolve(fan: Fan, cap: int = 1000) -> tuple[Fan, list[ResolutionStep]]:
    """Smooth refinement by repeated star subdivisions.

    Each step picks the first maximal cone of multiplicity > 1 and subdivides
    at its fundamental-parallelepiped point of least coordinate sum (ties by
    the point itself, lexicographically).
    """
    if not fan.is_simplicial:
        raise ValueError("resolve expects a simplicial fan")
    steps: list[ResolutionStep] = []
    current = fan
    for _ in range(cap):
        bad = next((c for c in current.max_cones if mult(current, c) > 1), None)
        if bad is None:
            return current, steps
        pts = [(sum(lam), p) for lam, p in parallelepiped_points(current.generators(bad)) if any(p)]
        _, v = min(pts)
        steps.append(ResolutionStep(bad, v))
        current = star_subdivision(current, v)
    raise RuntimeError(f"resolution did not finish within {cap} subdivisions")
