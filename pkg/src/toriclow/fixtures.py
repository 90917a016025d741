"""Standard example fans and divisors, shipped as JSON data files."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from itertools import combinations

from .fan import Fan
from .intersection import as_divisor

NAMES = ("p2", "p3", "p4", "p121", "hexagon", "quadrilateral", "torsion", "p1xp1")


def projective_space(n: int) -> Fan:
    rays = [tuple(int(i == j) for j in range(n)) for i in range(n)] + [tuple(-1 for _ in range(n))]
    cones = [frozenset(c) for c in combinations(range(n + 1), n)]
    return Fan(n, rays, cones)


def hyperplane(n: int, degree: int) -> tuple[Fraction, ...]:
    """degree * H on P^n, supported on the last ray."""
    return as_divisor([0] * n + [degree])


def weighted_p121() -> Fan:
    return Fan(2, [(1, 0), (0, 1), (-1, -2)], [{0, 1}, {1, 2}, {0, 2}])


def p121_divisor(degree: int) -> tuple[Fraction, ...]:
    """A divisor of weighted degree ``degree``: D_1 has degree 2, D_0 and D_2 degree 1."""
    return as_divisor([0, degree // 2, degree % 2])


def hexagon() -> Fan:
    """P^2 blown up at the three torus-fixed points.

    Rays in the order D1, D12, D2, D23, D3, D13.
    """
    rays = [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]
    return Fan(2, rays, [{i, (i + 1) % 6} for i in range(6)])


def hexagon_conic() -> tuple[Fraction, ...]:
    """Pullback of 2L: twice a line through no blown-up point, moved to D1+D13+D12 form."""
    return as_divisor([2, 2, 0, 0, 0, 2])


def hexagon_line() -> tuple[Fraction, ...]:
    """Degrees of the pullback of a general line."""
    return as_divisor([1, 0, 1, 0, 1, 0])


def quadrilateral() -> Fan:
    """Four rays with cones of multiplicity 2, 4, 1, 1: restricted but not global low degree."""
    return Fan(2, [(1, 0), (1, 2), (-1, 2), (0, -1)], [{0, 1}, {1, 2}, {2, 3}, {3, 0}])


def quadrilateral_divisor() -> tuple[Fraction, ...]:
    return as_divisor([0, 0, 4, 2])


def torsion_fan() -> Fan:
    """P^2 / (Z/3) with all three cones of multiplicity 3."""
    return Fan(2, [(2, -1), (-1, 2), (-1, -1)], [{0, 1}, {1, 2}, {0, 2}])


def p1xp1() -> Fan:
    return Fan(2, [(1, 0), (0, 1), (-1, 0), (0, -1)], [{0, 1}, {1, 2}, {2, 3}, {3, 0}])


def blowup_linear(n: int, k: int) -> Fan:
    """Blow-up of P^n along the coordinate subspace P^k cut out by x_1 = ... = x_{n-k} = 0.

    Rays e_1..e_n, -sum(e_i), then the exceptional ray e_1 + ... + e_{n-k}.
    """
    if not 0 <= k <= n - 2:
        raise ValueError("need 0 <= k <= n - 2")
    base = projective_space(n)
    c = n - k
    v = tuple(1 if i < c else 0 for i in range(n))
    center = frozenset(range(c))
    new = n + 1
    cones = []
    for cone in base.max_cones:
        if center <= cone:
            for rho in sorted(center):
                cones.append((cone - {rho}) | {new})
        else:
            cones.append(cone)
    return Fan(n, list(base.rays) + [v], cones)


def blowup_divisor(n: int, k: int, d: int, m: int) -> tuple[Fraction, ...]:
    """d * H - m * E on the blow-up, with H carried by the ray -sum(e_i)."""
    coeffs = [0] * (n + 2)
    coeffs[n] = d
    coeffs[n + 1] = -m
    return as_divisor(coeffs)


def blowup_curves(n: int, k: int) -> dict[str, tuple[int, ...]]:
    """Degree vectors of the three reference curve classes.

    C1: a line in a fiber of E over the center, C2: the strict transform of
    a line meeting the center, C3: a general line.
    """
    c = n - k
    c1 = [1 if i < c else 0 for i in range(n)] + [0, -1]
    c2 = [0] * c + [1] * k + [1, 1]
    c3 = [1] * n + [1, 0]
    return {"C1": tuple(c1), "C2": tuple(c2), "C3": tuple(c3)}


def load(name: str) -> dict:
    """Fan and divisor data of a named fixture from the package data."""
    path = resources.files("toriclow") / "data" / f"{name}.json"
    return json.loads(path.read_text())


def builtin(name: str) -> tuple[Fan, tuple[Fraction, ...]]:
    data = load(name)
    return Fan.from_json(data["fan"]), as_divisor(data["divisor"]["coeffs"])
