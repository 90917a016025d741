"""Low toric degree: trivial points, restricted and global criteria, and the decision procedure."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import gcd
from typing import Iterable, Optional, Sequence

from .fan import Fan, StarFan, locate, resolve
from .intersection import (
    CurveClass,
    as_divisor,
    cartier_data,
    class_matrix,
    curve_class,
    format_rational,
    is_cartier,
    is_effective_class,
    is_nef,
    local_representative,
    negative_wall,
    non_cartier_cone,
    pair,
    restriction_data,
    wall_curves,
)
from .linalg import dot, int_det, integer_kernel, rank, transpose
from .mori import FIBERING, ExtremalRay, extremal_rays, normalized, picard_one_subvarieties
from .polytopes import AmpleModel, GeneralizedFan, ample_model, sigma_d

TRIVIAL_POINT = "TrivialPoint"
LOW = "LowToricDegree"
NOT_LOW = "NotLowToricDegree"


def _sum(xs: Iterable) -> Fraction:
    return sum((Fraction(x) for x in xs), Fraction(0))


def _rays_json(c: Iterable[int]) -> list[int]:
    return sorted(c)


# ---------------------------------------------------------------- trivial points


@dataclass(frozen=True)
class TrivialPoint:
    """A torus-fixed point V(sigma) lying on every hypersurface of class [D]."""

    cone: frozenset[int]
    reason: str

    def to_json(self) -> dict:
        return {"cone": _rays_json(self.cone), "reason": self.reason}


def trivial_point(fan: Fan, d: Sequence, support: Optional[Iterable[Sequence[int]]] = None) -> Optional[TrivialPoint]:
    d = as_divisor(d)
    w = negative_wall(fan, d)
    if w is not None:
        return TrivialPoint(w.sigma1, "not nef")
    c = non_cartier_cone(fan, d)
    if c is not None:
        return TrivialPoint(c, "not Cartier")
    if support is not None:
        present = {tuple(int(x) for x in a) for a in support}
        for sigma in fan.max_cones:
            vertex = tuple(int(x) for x in local_representative(fan, d, sigma))
            if vertex not in present:
                return TrivialPoint(sigma, "vertex monomial missing")
    return None


# ---------------------------------------------------------------- restricted low toric degree


@dataclass(frozen=True)
class RestrictedCandidate:
    gamma: frozenset[int]
    curve: CurveClass
    degree: Fraction
    anticanonical: Fraction

    @property
    def holds(self) -> bool:
        return 0 < self.degree < self.anticanonical

    def text(self) -> str:
        rel = "<" if self.degree < self.anticanonical else ">" if self.degree > self.anticanonical else "="
        return f"V({_rays_json(self.gamma)}): C·D|W = {format_rational(self.degree)} {rel} {format_rational(self.anticanonical)} = C·(-K_W)"

    def to_json(self) -> dict:
        return {
            "gamma": _rays_json(self.gamma),
            "curve": self.curve.to_json(),
            "degree": format_rational(self.degree),
            "anticanonical": format_rational(self.anticanonical),
            "holds": self.holds,
            "text": self.text(),
        }


@dataclass(frozen=True)
class RestrictedWitness:
    """W = V(gamma) of Picard number one with 0 < C.D|W < C.(-K_W)."""

    gamma: frozenset[int]
    star: StarFan
    restricted: tuple[Fraction, ...]
    curve: CurveClass
    degree: Fraction
    anticanonical: Fraction
    via: str

    def to_json(self) -> dict:
        return {
            "gamma": _rays_json(self.gamma),
            "star_rays": [list(r) for r in self.star.fan.rays],
            "restricted_divisor": [format_rational(x) for x in self.restricted],
            "curve": self.curve.to_json(),
            "degree": format_rational(self.degree),
            "anticanonical": format_rational(self.anticanonical),
            "via": self.via,
        }


@dataclass
class RestrictedScan:
    witness: Optional[RestrictedWitness]
    candidates: list[RestrictedCandidate] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "witness": self.witness.to_json() if self.witness else None,
            "candidates": [c.to_json() for c in self.candidates],
        }


def _restricted_candidate(fan: Fan, d, gamma) -> tuple[RestrictedCandidate, object]:
    r = restriction_data(fan, d, gamma)
    c, deg, k = r.comparisons()[0]
    # every wall curve of a Picard-one star spans the same ray
    return RestrictedCandidate(frozenset(gamma), c, deg, k), r


def _witness(cand: RestrictedCandidate, r, via: str) -> RestrictedWitness:
    return RestrictedWitness(cand.gamma, r.star, r.coeffs, cand.curve, cand.degree, cand.anticanonical, via)


def extremal_fiber_cone(fan: Fan, ray: ExtremalRay) -> frozenset[int]:
    """gamma = rays of sigma1 u sigma2 outside J+: V(gamma) is a fiber of the contraction."""
    return fan.walls[ray.walls[0]].support - ray.j_plus


def extremal_shortcut(fan: Fan, d: Sequence) -> Optional[RestrictedWitness]:
    """An extremal class with 0 < C.D < sum over J+ of C.D_rho, turned into a witness."""
    if not fan.is_simplicial:
        return None
    for ray in extremal_rays(fan):
        cd = pair(ray.generator, d)
        if 0 < cd < _sum(ray.generator.degrees[i] for i in ray.j_plus):
            gamma = extremal_fiber_cone(fan, ray)
            cand, r = _restricted_candidate(fan, d, gamma)
            assert cand.holds, "an extremal low-degree class must give a low-degree fiber"
            return _witness(cand, r, "extremal")
    return None


def restricted_scan(fan: Fan, d: Sequence, shortcut: bool = True) -> RestrictedScan:
    d = as_divisor(d)
    if is_cartier(fan, d) is None:
        raise ValueError("restricted low toric degree needs a Cartier divisor")
    scan = RestrictedScan(None)
    if shortcut:
        scan.witness = extremal_shortcut(fan, d)
    for gamma, _ in picard_one_subvarieties(fan):
        cand, r = _restricted_candidate(fan, d, gamma)
        scan.candidates.append(cand)
        if scan.witness is None and cand.holds:
            scan.witness = _witness(cand, r, "scan")
    return scan


def restricted_ltd(fan: Fan, d: Sequence) -> Optional[RestrictedWitness]:
    return restricted_scan(fan, d).witness


def restricted_candidate(fan: Fan, d: Sequence, gamma: Iterable[int]) -> RestrictedCandidate:
    """Recompute the degree comparison on V(gamma), which must have Picard number one."""
    gamma = frozenset(gamma)
    if gamma not in {g for g, _ in picard_one_subvarieties(fan)}:
        raise ValueError(f"V({sorted(gamma)}) does not have Picard number one")
    return _restricted_candidate(fan, as_divisor(d), gamma)[0]


def verify_restricted(fan: Fan, d: Sequence, w: RestrictedWitness) -> bool:
    cand = restricted_candidate(fan, d, w.gamma)
    return cand.holds and (cand.degree, cand.anticanonical) == (w.degree, w.anticanonical)


# ---------------------------------------------------------------- circuits and global low toric degree


@dataclass(frozen=True)
class Circuit:
    """A minimally dependent ray set with its primitive relation (first entry positive)."""

    support: frozenset[int]
    relation: tuple[int, ...]

    def orientations(self) -> tuple[CurveClass, CurveClass]:
        c = CurveClass(self.relation)
        return c, -c


def _is_circuit_relation(lam: Sequence[int]) -> bool:
    return all(x != 0 for x in lam)


@lru_cache(maxsize=256)
def circuits(fan: Fan) -> tuple[Circuit, ...]:
    n, rays = fan.dim, fan.rays
    out = []
    for k in range(2, n + 2):
        for s in combinations(range(fan.n_rays), k):
            gens = [rays[i] for i in s]
            if k == n + 1:
                # Cramer: lam_i = (-1)^i det(all but i)
                lam = [(-1) ** i * int_det([list(g) for j, g in enumerate(gens) if j != i]) for i in range(k)]
                if not _is_circuit_relation(lam):
                    continue
            else:
                if rank(gens) != k - 1:
                    continue
                ker = integer_kernel(transpose([list(g) for g in gens]), k)
                if len(ker) != 1 or not _is_circuit_relation(ker[0]):
                    continue
                lam = list(ker[0])
            g = 0
            for x in lam:
                g = gcd(g, x)
            sign = 1 if lam[0] > 0 else -1
            rel = [0] * fan.n_rays
            for i, x in zip(s, lam):
                rel[i] = sign * x // g
            assert all(sum(rel[i] * rays[i][t] for i in s) == 0 for t in range(n))
            out.append(Circuit(frozenset(s), tuple(rel)))
    return tuple(out)


@dataclass(frozen=True)
class GlobalCandidate:
    """One oriented circuit class tested against conditions (A) and (B).

    ``i_set`` is the largest I in J+ satisfying (B); since (A) only improves
    when I grows, it is the only set that needs testing.
    """

    curve: CurveClass
    wall: Optional[frozenset[int]]
    degree: Fraction
    j_plus_sum: Fraction
    i_set: frozenset[int]
    i_sum: Fraction
    status: str

    def name(self, fan: Fan) -> str:
        if self.wall is None:
            return "C"
        if fan.dim == 2:
            (rho,) = self.wall
            return f"D_{rho + 1}"
        return f"C_{_rays_json(self.wall)}"

    def text(self, fan: Fan) -> str:
        head = f"{self.name(fan)}·D = {format_rational(self.degree)}"
        if self.status in ("J- not in a cone", "C.D <= 0"):
            return f"{head} ({self.status})"
        rel = "<" if self.degree < self.j_plus_sum else ">" if self.degree > self.j_plus_sum else "="
        out = f"{head} {rel} {format_rational(self.j_plus_sum)}"
        if self.status == "|I| < 2":
            out += " (|I| < 2)"
        elif self.status == "(A) fails" and self.degree < self.j_plus_sum:
            out += f" (over I = {_rays_json(self.i_set)}: {format_rational(self.degree)} >= {format_rational(self.i_sum)})"
        return out

    def to_json(self, fan: Fan) -> dict:
        return {
            "curve": self.curve.to_json(),
            "wall": None if self.wall is None else _rays_json(self.wall),
            "degree": format_rational(self.degree),
            "j_plus_sum": format_rational(self.j_plus_sum),
            "i_set": _rays_json(self.i_set),
            "i_sum": format_rational(self.i_sum),
            "status": self.status,
            "text": self.text(fan),
        }


@dataclass(frozen=True)
class GlobalWitness:
    """(C, I) with (A) 0 < C.D < sum_I C.D_rho and (B) J_C - {rho} in a cone of the divisor fan."""

    c: CurveClass
    i_set: frozenset[int]
    hulls: tuple[tuple[int, frozenset[int]], ...]
    degree: Fraction
    i_sum: Fraction

    def to_json(self) -> dict:
        return {
            "curve": self.c.to_json(),
            "i_set": _rays_json(self.i_set),
            "hulls": {str(rho): _rays_json(s) for rho, s in self.hulls},
            "degree": format_rational(self.degree),
            "i_sum": format_rational(self.i_sum),
        }


@dataclass
class GlobalScan:
    fan: Fan
    witness: Optional[GlobalWitness]
    candidates: list[GlobalCandidate] = field(default_factory=list)

    def texts(self) -> list[str]:
        return [c.text(self.fan) for c in self.candidates]

    def to_json(self) -> dict:
        return {
            "witness": self.witness.to_json() if self.witness else None,
            "candidates": [c.to_json(self.fan) for c in self.candidates],
        }


def _require_nef_cartier(fan: Fan, d) -> None:
    if is_cartier(fan, d) is None or not is_nef(fan, d):
        raise ValueError("a nef Cartier divisor is required")


def oriented_circuit_classes(fan: Fan) -> list[tuple[CurveClass, Optional[frozenset[int]]]]:
    """Circuit classes in both orientations, wall curves kept at their own scale."""
    walls = {}
    for w, c in zip(fan.walls, wall_curves(fan)):
        walls.setdefault(normalized(c), (w.tau, c))
    out = []
    for circ in circuits(fan):
        for c in circ.orientations():
            tau, wc = walls.get(c, (None, c))
            out.append((wc, tau))
    return out


def global_scan(fan: Fan, d: Sequence, gf: Optional[GeneralizedFan] = None, stop: bool = True) -> GlobalScan:
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    gf = gf or sigma_d(fan, d)
    scan = GlobalScan(fan, None)
    for c, tau in oriented_circuit_classes(fan):
        cd = pair(c, d)
        jp = c.j_plus
        jsum = _sum(c.degrees[i] for i in jp)
        if not fan.in_some_max_cone(c.j_minus):
            scan.candidates.append(GlobalCandidate(c, tau, cd, jsum, frozenset(), Fraction(0), "J- not in a cone"))
            continue
        if cd <= 0:
            scan.candidates.append(GlobalCandidate(c, tau, cd, jsum, frozenset(), Fraction(0), "C.D <= 0"))
            continue
        support = c.support
        hulls = []
        for rho in sorted(jp):
            k = gf.containing(support - {rho})
            if k is not None:
                hulls.append((rho, gf.cones[k]))
        i_set = frozenset(rho for rho, _ in hulls)
        isum = _sum(c.degrees[i] for i in i_set)
        if len(i_set) < 2:
            status = "|I| < 2"
        elif cd < isum:
            status = "witness"
        else:
            status = "(A) fails"
        scan.candidates.append(GlobalCandidate(c, tau, cd, jsum, i_set, isum, status))
        if status == "witness" and scan.witness is None:
            scan.witness = GlobalWitness(c, i_set, tuple(hulls), cd, isum)
            if stop:
                break
    return scan


def global_ltd(fan: Fan, d: Sequence, gf: Optional[GeneralizedFan] = None) -> Optional[GlobalWitness]:
    return global_scan(fan, d, gf).witness


def verify_global(fan: Fan, d: Sequence, w: GlobalWitness) -> bool:
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    gf = sigma_d(fan, d)
    c = curve_class(fan, w.c.degrees)
    if len(w.i_set) < 2 or not w.i_set <= c.j_plus:
        return False
    if not 0 < pair(c, d) < _sum(c.degrees[i] for i in w.i_set):
        return False
    return all(gf.containing(c.support - {rho}) is not None for rho in w.i_set)


# ---------------------------------------------------------------- decision procedure


@dataclass
class Verdict:
    outcome: str
    trivial: Optional[TrivialPoint] = None
    witness: Optional[RestrictedWitness] = None
    path: str = ""
    model: Optional[AmpleModel] = None
    report: list[RestrictedCandidate] = field(default_factory=list)

    @property
    def is_low(self) -> bool:
        return self.outcome != NOT_LOW

    def to_json(self) -> dict:
        out: dict = {"outcome": self.outcome, "low": self.is_low}
        if self.trivial:
            out["trivial_point"] = self.trivial.to_json()
        if self.witness:
            out["witness"] = self.witness.to_json()
            out["path"] = self.path
        if self.model is not None:
            out["ample_model"] = {
                "fan": self.model.fan.to_json(),
                "divisor": [format_rational(x) for x in self.model.dbar],
            }
        if self.outcome == NOT_LOW:
            out["exhaustion"] = [c.to_json() for c in self.report]
        return out


def low_toric_degree(fan: Fan, d: Sequence, support: Optional[Iterable[Sequence[int]]] = None) -> Verdict:
    d = as_divisor(d)
    if not fan.is_simplicial:
        raise ValueError("low toric degree is decided on simplicial fans")
    t = trivial_point(fan, d, support)
    if t is not None:
        return Verdict(TRIVIAL_POINT, trivial=t)
    w = restricted_ltd(fan, d)
    if w is not None:
        return Verdict(LOW, witness=w, path="restricted on the fan")
    gf = sigma_d(fan, d)
    model = ample_model(fan, d, gf)
    scan = restricted_scan(model.fan, model.dbar)
    if scan.witness is not None:
        return Verdict(LOW, witness=scan.witness, path="ample model", model=model)
    return Verdict(NOT_LOW, model=model, report=scan.candidates)


def pullback_to_refinement(fan: Fan, d: Sequence, refined: Fan) -> tuple[Fraction, ...]:
    """Pullback of a Q-Cartier divisor to a refinement whose rays extend those of fan."""
    d = as_divisor(d)
    data = cartier_data(fan, d)
    out = []
    for i, u in enumerate(refined.rays):
        if i < fan.n_rays:
            assert u == fan.rays[i]
            out.append(d[i])
            continue
        _, containing = locate(fan, u)
        m = data[fan.max_cones[containing[0]]]
        out.append(-dot(m, u))
    return tuple(Fraction(x) for x in out)


def cross_check_iii(fan: Fan, d: Sequence) -> bool:
    """Global low toric degree of the pullback to a resolution."""
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    smooth, _ = resolve(fan)
    back = pullback_to_refinement(fan, d, smooth)
    assert is_cartier(smooth, back) is not None and is_nef(smooth, back)
    return global_ltd(smooth, back) is not None


# ---------------------------------------------------------------- further criteria


@dataclass(frozen=True)
class EasiestWitness:
    """(C, I) with (a) 0 < C.D < sum_I C.D_rho and (b) J_C- in a cone sigma avoiding I."""

    c: CurveClass
    i_set: frozenset[int]
    sigma: frozenset[int]
    degree: Fraction
    i_sum: Fraction

    def to_json(self) -> dict:
        return {
            "curve": self.c.to_json(),
            "i_set": _rays_json(self.i_set),
            "sigma": _rays_json(self.sigma),
            "degree": format_rational(self.degree),
            "i_sum": format_rational(self.i_sum),
        }


def easiest_scan(fan: Fan, d: Sequence, gf: Optional[GeneralizedFan] = None) -> Optional[EasiestWitness]:
    """Conditions (a)/(b) over circuit classes, with sigma the hull of J_C-."""
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    gf = gf or sigma_d(fan, d)
    for c, _ in oriented_circuit_classes(fan):
        if not fan.in_some_max_cone(c.j_minus):
            continue
        cd = pair(c, d)
        if cd <= 0:
            continue
        sigma = gf.hull(c.j_minus)
        if sigma is None:
            continue
        i_set = c.j_plus - sigma
        isum = _sum(c.degrees[i] for i in i_set)
        if cd < isum:
            return EasiestWitness(c, i_set, sigma, cd, isum)
    return None


@dataclass(frozen=True)
class MobileWitness:
    """[D - sum_I D_rho] outside Eff, with the mobile curve separating it."""

    i_set: frozenset[int]
    circuit: CurveClass
    separating_curve: CurveClass
    degree: Fraction
    i_sum: Fraction

    def to_json(self) -> dict:
        return {
            "i_set": _rays_json(self.i_set),
            "circuit": self.circuit.to_json(),
            "separating_curve": self.separating_curve.to_json(),
            "degree": format_rational(self.degree),
            "i_sum": format_rational(self.i_sum),
        }


def is_big(fan: Fan, d: Sequence) -> bool:
    """A nef divisor is big exactly when its divisor fan has trivial minimal cone."""
    return not sigma_d(fan, d).u0_basis


def mobile_criterion(fan: Fan, d: Sequence) -> Optional[MobileWitness]:
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    if not is_big(fan, d):
        raise ValueError("the effective-cone criterion needs a big divisor")
    g = class_matrix(fan)
    for circ in circuits(fan):
        for c in circ.orientations():
            if c.j_minus:
                continue
            i_set = c.support
            rest = [x - (1 if i in i_set else 0) for i, x in enumerate(d)]
            res = is_effective_class(fan, rest)
            if res.member:
                continue
            # the separator pairs nonnegatively with every D_rho: a mobile class
            degrees = [sum((h * row[i] for h, row in zip(res.separator, g)), Fraction(0)) for i in range(fan.n_rays)]
            mob = curve_class(fan, degrees)
            assert not mob.j_minus
            cd = pair(mob, d)
            isum = _sum(mob.degrees[i] for i in i_set)
            assert 0 < cd < isum
            return MobileWitness(i_set, c, mob, cd, isum)
    return None


@dataclass
class CriteriaReport:
    nef_test: Optional[list[dict]] = None
    nef_fires: Optional[bool] = None
    mobile: Optional[MobileWitness] = None
    mobile_applies: bool = False
    easiest: Optional[EasiestWitness] = None

    def to_json(self) -> dict:
        return {
            "extremal_nef_test": None if self.nef_test is None else {"fires": self.nef_fires, "rays": self.nef_test},
            "effective_cone_test": {
                "applies": self.mobile_applies,
                "witness": self.mobile.to_json() if self.mobile else None,
            },
            "descent_conditions": self.easiest.to_json() if self.easiest else None,
        }

    @property
    def any_fires(self) -> bool:
        return bool(self.nef_fires) or self.mobile is not None or self.easiest is not None


def positivity_criteria(fan: Fan, d: Sequence) -> CriteriaReport:
    d = as_divisor(d)
    _require_nef_cartier(fan, d)
    report = CriteriaReport()
    gf = sigma_d(fan, d)
    if all(pair(c, d) > 0 for c in wall_curves(fan)):
        rows = []
        for ray in extremal_rays(fan):
            cd = pair(ray.generator, d)
            jsum = _sum(ray.generator.degrees[i] for i in ray.j_plus)
            rows.append({"generator": ray.generator.to_json(), "degree": format_rational(cd),
                         "j_plus_sum": format_rational(jsum), "fires": cd < jsum})
        report.nef_test = rows
        report.nef_fires = any(r["fires"] for r in rows)
    if is_big(fan, d):
        report.mobile_applies = True
        report.mobile = mobile_criterion(fan, d)
    report.easiest = easiest_scan(fan, d, gf)
    return report


@dataclass(frozen=True)
class RccWitness:
    """A mobile extremal class with 0 < C.D < C.(-K)."""

    ray: ExtremalRay
    degree: Fraction
    anticanonical: Fraction

    def to_json(self) -> dict:
        return {
            "ray": self.ray.to_json(),
            "degree": format_rational(self.degree),
            "anticanonical": format_rational(self.anticanonical),
        }


def rcc_flag(fan: Fan, d: Sequence) -> Optional[RccWitness]:
    d = as_divisor(d)
    for ray in extremal_rays(fan):
        if ray.kind != FIBERING:
            continue
        cd = pair(ray.generator, d)
        k = _sum(ray.generator.degrees)
        if 0 < cd < k:
            return RccWitness(ray, cd, k)
    return None

