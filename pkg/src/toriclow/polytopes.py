"""Divisor polytopes, their lattice points, the fan of a nef divisor and its ample model."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, product
from math import ceil, floor
from typing import Iterable, Optional, Sequence

from .fan import Fan, quotient_projection
from .intersection import (
    CurveClass,
    as_divisor,
    cartier_data,
    is_cartier,
    is_nef,
    linear_equivalence,
    pair,
    wall_curves,
)
from .linalg import CapExceeded, cone_member, dot, integer_kernel, matmul, primitive, rank, solve_exact

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class HPolytope:
    """P_D = {m : <m, u_rho> >= -a_rho for all rho}."""

    normals: tuple[tuple[int, ...], ...]
    offsets: tuple[Fraction, ...]
    vertices: Optional[tuple[tuple[Fraction, ...], ...]] = None

    @property
    def halfspaces(self) -> list[tuple[tuple[int, ...], Fraction]]:
        return list(zip(self.normals, self.offsets))

    def contains(self, m: Sequence) -> bool:
        return all(dot(m, u) >= -a for u, a in zip(self.normals, self.offsets))


@lru_cache(maxsize=256)
def positively_spanning(fan: Fan) -> bool:
    """Do the rays positively span N_R (equivalently, is every P_D bounded)?"""
    n = fan.dim
    for k in range(n):
        for s in (1, -1):
            e = tuple(s * int(i == k) for i in range(n))
            if not cone_member(fan.rays, e).member:
                return False
    return True


def _vertices(fan: Fan, d: Sequence[Fraction]) -> list[tuple[Fraction, ...]]:
    n = fan.dim
    found = set()
    for idx in combinations(range(fan.n_rays), n):
        gens = [fan.rays[i] for i in idx]
        if rank(gens) < n:
            continue
        m = solve_exact(gens, [-d[i] for i in idx])
        if all(dot(m, u) >= -a for u, a in zip(fan.rays, d)):
            found.add(m)
    return sorted(found)


def polytope_of(fan: Fan, d: Sequence) -> HPolytope:
    d = as_divisor(d)
    if len(d) != fan.n_rays:
        raise ValueError("divisor length does not match the fan")
    if fan.dim == 0:
        return HPolytope((), d, ((),))
    if is_cartier(fan, d) is not None and is_nef(fan, d):
        verts = tuple(sorted(set(cartier_data(fan, d).values())))
    else:
        verts = tuple(_vertices(fan, d))
    return HPolytope(fan.rays, d, verts)


def homogenize(fan: Fan, d: Sequence, m: Sequence) -> tuple:
    """h_D(m)_rho = <m, u_rho> + a_rho."""
    return tuple(dot(m, u) + Fraction(a) for u, a in zip(fan.rays, d))


def _as_int_vector(v: Sequence) -> tuple[int, ...]:
    assert all(Fraction(x).denominator == 1 for x in v)
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class LatticePointSet:
    """A_[D]: exponent vectors of the monomials of class [D].

    ``characters[i]`` is the m with points[i] = h_D(m). ``vertices`` maps
    each maximal cone of Sigma to a^sigma (nef Cartier input only).
    """

    points: tuple[tuple[int, ...], ...]
    characters: tuple[tuple[int, ...], ...]
    vertices: Optional[dict] = None

    def __len__(self) -> int:
        return len(self.points)

    def filter_zero_on(self, c: Iterable[int]) -> tuple[tuple[int, ...], ...]:
        c = list(c)
        return tuple(a for a in self.points if all(a[i] == 0 for i in c))


def lattice_points(fan: Fan, d: Sequence, cap: int = DEFAULT_CAP) -> LatticePointSet:
    d = as_divisor(d)
    if not positively_spanning(fan):
        raise ValueError("P_D is unbounded: the fan is not complete")
    poly = polytope_of(fan, d)
    vertex_map = None
    if is_cartier(fan, d) is not None and is_nef(fan, d):
        vertex_map = {c: _as_int_vector(homogenize(fan, d, m)) for c, m in cartier_data(fan, d).items()}
    if not poly.vertices:
        return LatticePointSet((), (), vertex_map)
    n = fan.dim
    lo = [floor(min(v[k] for v in poly.vertices)) for k in range(n)]
    hi = [ceil(max(v[k] for v in poly.vertices)) for k in range(n)]
    total = 1
    for a, b in zip(lo, hi):
        total *= b - a + 1
    if total > cap:
        raise CapExceeded(f"bounding box has {total} candidates (cap {cap})")
    points, chars = [], []
    for m in product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        h = homogenize(fan, d, m)
        if all(x >= 0 for x in h):
            if any(x.denominator != 1 for x in h):
                continue
            points.append(tuple(int(x) for x in h))
            chars.append(m)
    order = sorted(range(len(points)), key=lambda i: points[i])
    return LatticePointSet(tuple(points[i] for i in order), tuple(chars[i] for i in order), vertex_map)


@dataclass(frozen=True)
class GeneralizedFan:
    """Sigma_[D]: the normal fan of P_D, as ray sets of Sigma.

    Max cone k is the set of rays of Sigma on which the vertex
    ``vertex_points[k]`` vanishes; it is the union of the Sigma cones in
    ``merged_from[k]``. ``u0_basis`` spans the minimal cone U_0.
    """

    fan: Fan
    divisor: tuple[Fraction, ...]
    vertices: tuple[tuple[int, ...], ...]
    vertex_points: tuple[tuple[int, ...], ...]
    cones: tuple[frozenset[int], ...]
    merged_from: tuple[frozenset[int], ...]
    u0_basis: tuple[tuple[int, ...], ...]

    @cached_property
    def masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << i for i in c) for c in self.cones)

    @cached_property
    def minimal_cone(self) -> frozenset[int]:
        out = frozenset(range(self.fan.n_rays))
        for c in self.cones:
            out &= c
        return out

    def cones_containing(self, c: Iterable[int]) -> list[int]:
        m = sum(1 << i for i in set(c))
        return [k for k, mc in enumerate(self.masks) if m & ~mc == 0]

    def containing(self, c: Iterable[int]) -> Optional[int]:
        m = sum(1 << i for i in set(c))
        return next((k for k, mc in enumerate(self.masks) if m & ~mc == 0), None)

    def hull(self, c: Iterable[int]) -> Optional[frozenset[int]]:
        """Rays inside the smallest cone containing c, or None without one."""
        ks = self.cones_containing(c)
        if not ks:
            return None
        out = self.cones[ks[0]]
        for k in ks[1:]:
            out &= self.cones[k]
        return out

    def to_json(self) -> dict:
        return {
            "cones": [sorted(c) for c in self.cones],
            "merged_from": [sorted(c) for c in self.merged_from],
            "vertices": [list(v) for v in self.vertices],
            "u0_basis": [list(b) for b in self.u0_basis],
        }


def sigma_d(fan: Fan, d: Sequence) -> GeneralizedFan:
    d = as_divisor(d)
    data = is_cartier(fan, d)
    if data is None or not is_nef(fan, d):
        raise ValueError("sigma_d needs a nef Cartier divisor")
    groups: dict[tuple[int, ...], list[int]] = {}
    for k, c in enumerate(fan.max_cones):
        groups.setdefault(data[c], []).append(k)
    vertices = tuple(groups)
    points, cones, merged = [], [], []
    for v in vertices:
        a = _as_int_vector(homogenize(fan, d, v))
        zero = frozenset(i for i, x in enumerate(a) if x == 0)
        union = frozenset().union(*(fan.max_cones[k] for k in groups[v]))
        assert zero == union, "vertex must vanish exactly on the rays of its merged cone"
        points.append(a)
        cones.append(zero)
        merged.append(frozenset(groups[v]))
    diffs = [[x - y for x, y in zip(v, vertices[0])] for v in vertices[1:]]
    u0 = integer_kernel(diffs, fan.dim) if diffs else [tuple(int(i == j) for j in range(fan.dim)) for i in range(fan.dim)]
    return GeneralizedFan(fan, d, vertices, tuple(points), tuple(cones), tuple(merged), tuple(u0))


def phi_hull(gf: GeneralizedFan, c: Iterable[int]) -> Optional[frozenset[int]]:
    return gf.hull(c)


def face_q(fan: Fan, d: Sequence, c: Iterable[int], points: Optional[LatticePointSet] = None,
           gf: Optional[GeneralizedFan] = None) -> tuple[tuple[int, ...], ...]:
    """{a in A_[D] : a_rho = 0 on c}; checked against the filter by the hull of c."""
    c = frozenset(c)
    gf = gf or sigma_d(fan, d)
    hull = gf.hull(c)
    if hull is None:
        raise ValueError(f"{sorted(c)} lies in no cone of the divisor fan")
    points = points or lattice_points(fan, d)
    direct = points.filter_zero_on(c)
    assert direct == points.filter_zero_on(hull)
    return direct


def curve_contracted(gf: GeneralizedFan, c: CurveClass) -> bool:
    return gf.hull(c.support) is not None


@dataclass(frozen=True)
class AmpleModel:
    """Quotient fan Sigma-bar of a nef divisor with the ample divisor D-bar on it.

    ``projection`` is the n x k matrix of N -> N/N_0 (u -> u.P),
    ``translation`` the lattice point subtracted from P_D, ``ray_lift[j]``
    the lowest Sigma ray mapping onto ray j and ``vertex_of_cone[j]`` the
    Sigma_[D] max cone (vertex) belonging to max cone j.
    """

    fan: Fan
    projection: tuple[tuple[int, ...], ...]
    dbar: tuple[Fraction, ...]
    ray_lift: tuple[int, ...]
    vertex_of_cone: tuple[int, ...]
    translation: tuple[int, ...]
    characters: tuple[tuple[int, ...], ...]

    def project(self, u: Sequence[int]) -> tuple[int, ...]:
        if self.fan.dim == 0:
            return ()
        return tuple(matmul([list(u)], self.projection)[0])

    def cartier(self, j: int) -> tuple[Fraction, ...]:
        """Solve for the Cartier datum of D-bar on max cone j."""
        idx = sorted(self.fan.max_cones[j])
        m = solve_exact([self.fan.rays[i] for i in idx], [-self.dbar[i] for i in idx]) if idx else ()
        if m is None:
            raise ValueError("D-bar is not Q-Cartier")
        if not idx:
            m = tuple(Fraction(0) for _ in range(self.fan.dim))
        return m

    def pullback(self, source: Fan, gf: GeneralizedFan) -> tuple[Fraction, ...]:
        """phi^* D-bar on Sigma, through the Cartier data of D-bar."""
        out = []
        for rho, u in enumerate(source.rays):
            k = next(k for k, c in enumerate(gf.cones) if rho in c)
            m = self.cartier(self.vertex_of_cone.index(k))
            out.append(-dot(m, self.project(u)))
        return tuple(Fraction(x) for x in out)


def _affine_rank(points: Sequence[Sequence]) -> int:
    if not points:
        return -1
    return rank([[x - y for x, y in zip(p, points[0])] for p in points[1:]]) if len(points) > 1 else 0


def ample_model(fan: Fan, d: Sequence, gf: Optional[GeneralizedFan] = None) -> AmpleModel:
    d = as_divisor(d)
    gf = gf or sigma_d(fan, d)
    proj, _, r = quotient_projection(fan.dim, gf.u0_basis)
    qdim = fan.dim - r
    v0 = gf.vertices[0]
    on_span = all(dot(v0, b) == 0 for b in gf.u0_basis)
    t = tuple(0 for _ in v0) if on_span else v0
    chars = []
    for v in gf.vertices:
        w = [x - y for x, y in zip(v, t)]
        mbar = solve_exact(proj, w) if qdim else ()
        assert mbar is not None and all(x.denominator == 1 for x in mbar)
        chars.append(tuple(int(x) for x in mbar))
    assert _affine_rank(chars) == qdim

    facets: dict[frozenset[int], int] = {}
    for rho in range(fan.n_rays):
        verts = frozenset(k for k, c in enumerate(gf.cones) if rho in c)
        if len(verts) == len(gf.cones):
            continue
        if _affine_rank([chars[k] for k in sorted(verts)]) == qdim - 1:
            facets.setdefault(verts, rho)
    order = sorted(facets, key=lambda f: facets[f])
    rays, lifts, dbar = [], [], []
    for f in order:
        rho = facets[f]
        image = matmul([list(fan.rays[rho])], proj)[0]
        ubar = primitive(image)
        rays.append(ubar)
        lifts.append(rho)
        dbar.append(-min(Fraction(dot(m, ubar)) for m in chars))
    cones = [frozenset(j for j, f in enumerate(order) if k in f) for k in range(len(gf.cones))]
    qfan = Fan(qdim, rays, cones if qdim else [frozenset()])
    model = AmpleModel(
        qfan, tuple(tuple(row) for row in proj), tuple(dbar), tuple(lifts),
        tuple(range(len(gf.cones))), t, tuple(chars),
    )
    _check_model(fan, d, gf, model)
    return model


def _check_model(fan: Fan, d, gf: GeneralizedFan, model: AmpleModel) -> None:
    qfan = model.fan
    # the Cartier datum of D-bar on each max cone is the corresponding vertex
    for j in range(len(qfan.max_cones)):
        if qfan.dim:
            assert model.cartier(j) == tuple(Fraction(x) for x in model.characters[j])
    if qfan.dim:
        distinct = len(set(model.characters)) == len(model.characters)
        assert distinct, "D-bar must be ample"
    back = model.pullback(fan, gf)
    for c in wall_curves(fan):
        assert pair(c, back) == pair(c, d)
    assert linear_equivalence(fan, back, d) is not None
