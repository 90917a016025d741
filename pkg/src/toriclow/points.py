"""Cox-homogeneous polynomials over prime fields and the construction of relevant roots."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence

from sympy import isprime

from .fan import Fan
from .intersection import as_divisor, class_group, is_cartier, is_nef, linear_equivalence
from .linalg import CapExceeded
from .lowdeg import GlobalWitness, global_ltd, trivial_point
from .polytopes import DEFAULT_CAP, GeneralizedFan, sigma_d


@dataclass(frozen=True)
class HomogeneousPoly:
    """f = sum coeff * x^exps over F_p, homogeneous of class [divisor]."""

    p: int
    terms: tuple[tuple[tuple[int, ...], int], ...]
    divisor: tuple[Fraction, ...]

    @classmethod
    def build(cls, fan: Fan, d: Sequence, p: int, terms: Iterable[tuple[Sequence[int], int]]) -> "HomogeneousPoly":
        if not isinstance(p, int) or not isprime(p):
            raise ValueError(f"{p} is not a prime")
        d = as_divisor(d)
        merged: dict[tuple[int, ...], int] = {}
        for exps, coeff in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != fan.n_rays or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent vector {list(exps)}")
            merged[exps] = (merged.get(exps, 0) + int(coeff)) % p
        kept = tuple(sorted((e, c) for e, c in merged.items() if c))
        if not kept:
            raise ValueError("the polynomial is zero")
        for e, _ in kept:
            if linear_equivalence(fan, e, d) is None:
                raise ValueError(f"monomial {list(e)} is not of class [D]")
        return cls(p, kept, d)

    @classmethod
    def from_json(cls, data: dict, fan: Fan, d: Sequence, p: Optional[int] = None) -> "HomogeneousPoly":
        try:
            prime = int(data["p"]) if p is None else p
            terms = [(t["exps"], t["coeff"]) for t in data["terms"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed polynomial data: {exc}") from exc
        return cls.build(fan, d, prime, terms)

    def to_json(self) -> dict:
        return {"p": self.p, "terms": [{"exps": list(e), "coeff": c} for e, c in self.terms]}

    @property
    def support(self) -> list[tuple[int, ...]]:
        return [e for e, _ in self.terms]

    def __call__(self, x: Sequence[int]) -> int:
        p = self.p
        total = 0
        for exps, c in self.terms:
            term = c
            for xi, e in zip(x, exps):
                if e:
                    term = term * pow(xi, e, p) % p
                    if not term:
                        break
            total += term
        return total % p

    def specialize(self, values: dict[int, int]) -> "HomogeneousPoly":
        """Substitute fixed values for some variables (the class is no longer tracked)."""
        out: dict[tuple[int, ...], int] = {}
        for exps, c in self.terms:
            coeff = c
            for i, v in values.items():
                coeff = coeff * pow(v, exps[i], self.p) % self.p
            if coeff:
                e = tuple(0 if i in values else x for i, x in enumerate(exps))
                out[e] = (out.get(e, 0) + coeff) % self.p
        return HomogeneousPoly(self.p, tuple(sorted((e, c) for e, c in out.items() if c)), self.divisor)


def zero_set(x: Sequence[int]) -> frozenset[int]:
    return frozenset(i for i, v in enumerate(x) if v == 0)


def is_relevant(fan: Fan, x: Sequence[int]) -> bool:
    """The zero coordinates lie in one cone, i.e. x is outside the exceptional set."""
    return fan.in_some_max_cone(zero_set(x))


def massage_root(fan: Fan, gf: GeneralizedFan, f: HomogeneousPoly, alpha: Sequence[int]) -> tuple[int, ...]:
    """Turn a root whose zeros lie in a cone of the divisor fan into a relevant root."""
    if f(alpha):
        raise ValueError("alpha is not a root")
    c = zero_set(alpha)
    hull = gf.hull(c)
    if hull is None:
        raise ValueError("the zeros of alpha lie in no cone of the divisor fan")
    target = fan.cone_rank(hull)
    choices = sorted((s for s in fan.cones if s <= hull and fan.cone_dim(s) == target), key=sorted)
    sigma = choices[0]
    assert gf.hull(sigma) == hull
    beta = tuple(0 if i in sigma else 1 if i in hull else alpha[i] for i in range(fan.n_rays))
    assert f(beta) == 0, "massaging must preserve the root"
    assert zero_set(beta) == sigma and is_relevant(fan, beta)
    return beta


def structured_search(fan: Fan, f: HomogeneousPoly, w: GlobalWitness, gf: Optional[GeneralizedFan] = None,
                      cap: int = DEFAULT_CAP) -> Optional[tuple[int, ...]]:
    """Search a root of f restricted to the coordinates of I, then make it relevant.

    Variables outside J_C are set to 1 and those of J_C - I to 0.
    """
    if len(w.i_set) < 2:
        raise ValueError("structured search needs |I| >= 2")
    gf = gf or sigma_d(fan, f.divisor)
    j_c = w.c.support
    fixed = {i: 1 for i in range(fan.n_rays) if i not in j_c}
    fixed.update({i: 0 for i in j_c - w.i_set})
    g = f.specialize(fixed)
    free = sorted(w.i_set)
    evaluations = 0
    for values in product(range(f.p), repeat=len(free)):
        if not any(values):
            continue
        evaluations += 1
        if evaluations > cap:
            raise CapExceeded(f"structured search exceeded {cap} evaluations")
        alpha = [fixed.get(i, 0) for i in range(fan.n_rays)]
        for i, v in zip(free, values):
            alpha[i] = v
        if g(alpha) == 0:
            assert f(alpha) == 0
            return massage_root(fan, gf, f, alpha)
    return None


def _scan_chunk(args) -> tuple[Optional[tuple[int, ...]], int]:
    fan, f, lead, cap = args
    n = fan.n_rays
    count = 0
    for rest in product(range(f.p), repeat=n - 1):
        x = (lead,) + rest
        if not is_relevant(fan, x):
            continue
        count += 1
        if count > cap:
            raise CapExceeded(f"exhaustive search exceeded {cap} evaluations")
        if f(x) == 0:
            return x, count
    return None, count


def exhaustive_search(fan: Fan, f: HomogeneousPoly, cap: int = DEFAULT_CAP, jobs: int = 1) -> tuple[Optional[tuple[int, ...]], int]:
    """First relevant root in lexicographic order, partitioned by the leading coordinate."""
    chunks = [(fan, f, lead, cap) for lead in range(f.p)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_scan_chunk, chunks))
    else:
        results = []
        for chunk in chunks:
            results.append(_scan_chunk(chunk))
            if results[-1][0] is not None:
                break
    total = 0
    for point, count in results:
        total += count
        if total > cap:
            raise CapExceeded(f"exhaustive search exceeded {cap} evaluations")
        if point is not None:
            return point, total
    return None, total


@dataclass
class PointReport:
    found: bool
    point: Optional[tuple[int, ...]]
    method: str
    p: int
    zero_cone: Optional[frozenset[int]] = None
    evaluations: int = 0

    def to_json(self) -> dict:
        out = {"found": self.found, "method": self.method, "p": self.p, "evaluations": self.evaluations}
        if self.found:
            out["point"] = list(self.point)
            out["zero_cone"] = sorted(self.zero_cone)
            out["nonzero"] = {str(i): v for i, v in enumerate(self.point) if v}
        else:
            out["statement"] = f"no relevant root over F_{self.p} among {self.evaluations} relevant points"
        return out


def _certify(fan: Fan, f: HomogeneousPoly, x: tuple[int, ...], method: str, evaluations: int = 0) -> PointReport:
    assert f(x) == 0 and is_relevant(fan, x), "reported points are re-verified"
    cone = next(c for c in fan.max_cones if zero_set(x) <= c)
    return PointReport(True, x, method, f.p, cone, evaluations)


def rational_point(fan: Fan, f: HomogeneousPoly, cap: int = DEFAULT_CAP, jobs: int = 1) -> PointReport:
    d = f.divisor
    if not class_group(fan).h3_ok(f.p):
        raise ValueError(f"p = {f.p} divides the order of the torsion of the class group")
    t = trivial_point(fan, d, f.support)
    if t is not None:
        x = tuple(0 if i in t.cone else 1 for i in range(fan.n_rays))
        if f(x) == 0:
            return _certify(fan, f, x, f"trivial point ({t.reason})")
    if is_cartier(fan, d) is not None and is_nef(fan, d):
        gf = sigma_d(fan, d)
        w = global_ltd(fan, d, gf)
        if w is not None:
            x = structured_search(fan, f, w, gf, cap)
            if x is not None:
                return _certify(fan, f, x, "structured search")
    x, count = exhaustive_search(fan, f, cap, jobs)
    if x is not None:
        return _certify(fan, f, x, "exhaustive search", count)
    return PointReport(False, None, "exhaustive search", f.p, None, count)


def describe(report: PointReport) -> str:
    if not report.found:
        return report.to_json()["statement"]
    coords = ", ".join(str(v) for v in report.point)
    return f"root ({coords}) over F_{report.p}, zero set in cone {sorted(report.zero_cone)} [{report.method}]"

