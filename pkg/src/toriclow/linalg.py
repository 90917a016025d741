"""Exact integer and rational linear algebra.

Vectors are tuples of ``int`` or ``Fraction``; matrices are sequences of rows.
Nothing in here touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import gcd, lcm
from typing import Optional, Sequence

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp

Vector = tuple
Matrix = Sequence[Sequence]

FM_MAX_DIM = 6
FM_MAX_ROWS = 4000


class CapExceeded(RuntimeError):
    """An enumeration or iteration hit its configured limit."""


def dot(u: Sequence, v: Sequence):
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
    return sum((a * b for a, b in zip(u, v)), 0)


def matmul(a: Matrix, b: Matrix) -> list[list]:
    cols = list(zip(*b)) if b else []
    return [[dot(row, col) for col in cols] for row in a]


def transpose(a: Matrix) -> list[list]:
    return [list(col) for col in zip(*a)]


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def is_integral(x) -> bool:
    return Fraction(x).denominator == 1


def primitive(v: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries, keeping signs."""
    g = 0
    for x in v:
        if Fraction(x).denominator != 1:
            raise ValueError(f"not an integer vector: {v}")
        g = gcd(g, int(x))
    if g == 0:
        raise ValueError("zero vector has no primitive generator")
    return tuple(int(x) // g for x in v)


def clear_denominators(v: Sequence) -> tuple[tuple[int, ...], int]:
    """Return (w, s) with w = s*v integral and s a positive integer."""
    s = lcm(1, *(Fraction(x).denominator for x in v))
    return tuple(int(Fraction(x) * s) for x in v), s


def smith_normal_form(m: Matrix) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Smith normal form of an integer matrix.

    Returns (S, U, V) with U*m*V == S, U and V unimodular and the diagonal of
    S a nonnegative divisibility chain.
    """
    rows = len(m)
    cols = len(m[0]) if rows else 0
    if rows == 0 or cols == 0:
        return [[0] * cols for _ in range(rows)], identity(rows), identity(cols)
    for r in m:
        if len(r) != cols:
            raise ValueError("ragged matrix")
    dm = DomainMatrix([[ZZ(int(x)) for x in r] for r in m], (rows, cols), ZZ)
    s, u, v = smith_normal_decomp(dm)
    s, u, v = (x.to_Matrix().tolist() for x in (s, u, v))
    s = [[int(x) for x in r] for r in s]
    u = [[int(x) for x in r] for r in u]
    v = [[int(x) for x in r] for r in v]
    # normalise signs so the invariants are nonnegative
    for i in range(min(rows, cols)):
        if s[i][i] < 0:
            s[i][i] = -s[i][i]
            u[i] = [-x for x in u[i]]
    return s, u, v


def smith_invariants(m: Matrix) -> list[int]:
    s, _, _ = smith_normal_form(m)
    return [s[i][i] for i in range(min(len(s), len(s[0]) if s else 0)) if s[i][i] != 0]


def int_det(a: Matrix) -> int:
    """Determinant of a square integer matrix (fraction-free Bareiss)."""
    m = [list(map(int, r)) for r in a]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            p = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if p is None:
                return 0
            m[k], m[p] = m[p], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def lattice_index(generators: Matrix) -> int:
    """Index of the lattice spanned by independent integer rows in its saturation.

    Equals the product of the nonzero Smith invariants, i.e. the gcd of the
    maximal minors.
    """
    k = len(generators)
    if k == 0:
        return 1
    n = len(generators[0])
    g = 0
    for cols in combinations(range(n), k):
        g = gcd(g, int_det([[r[c] for c in cols] for r in generators]))
        if g == 1:
            return 1
    if g == 0:
        raise ValueError("generators are linearly dependent")
    return abs(g)


def rref(a: Matrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q. Returns (rows, pivot columns)."""
    rows = [[Fraction(x) for x in r] for r in a]
    ncols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def rank(a: Matrix) -> int:
    if not a:
        return 0
    return len(rref(a)[1])


def det(a: Matrix) -> Fraction:
    n = len(a)
    rows = [[Fraction(x) for x in r] for r in a]
    result = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            rows[c], rows[p] = rows[p], rows[c]
            result = -result
        result *= rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[c][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return result


def nullspace(a: Matrix, ncols: Optional[int] = None) -> list[tuple[Fraction, ...]]:
    """Basis of {x : a x = 0} over Q."""
    if ncols is None:
        ncols = len(a[0])
    if not a:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    red, pivots = rref(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(red, pivots):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def integer_kernel(a: Matrix, ncols: Optional[int] = None) -> list[tuple[int, ...]]:
    """Lattice basis of {x in Z^ncols : a x = 0} (saturated)."""
    if ncols is None:
        ncols = len(a[0])
    if not a or all(all(x == 0 for x in r) for r in a):
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    ints = [clear_denominators(r)[0] for r in a]
    s, _, v = smith_normal_form(ints)
    r = sum(1 for i in range(min(len(s), ncols)) if s[i][i] != 0)
    return [tuple(v[i][j] for i in range(ncols)) for j in range(r, ncols)]


def solve_exact(a: Matrix, b: Sequence) -> Optional[tuple[Fraction, ...]]:
    """Solve a x = b over Q; None when inconsistent.

    Free variables are set to zero, so a square nonsingular system gets its
    unique solution.
    """
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} rows vs {len(b)} entries")
    if not a:
        return ()
    ncols = len(a[0])
    aug = [list(r) + [b_i] for r, b_i in zip(a, b)]
    red, pivots = rref(aug)
    if pivots and pivots[-1] == ncols:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(red, pivots):
        x[p] = row[ncols]
    return tuple(x)


@dataclass(frozen=True)
class ConeMembership:
    """Outcome of a cone membership test with its certificate.

    ``coefficients`` (when member) are nonnegative with sum(l*g) == v;
    ``separator`` (when not) is h with h.g >= 0 for all g and h.v < 0.
    """

    member: bool
    coefficients: Optional[tuple[Fraction, ...]] = None
    separator: Optional[tuple[Fraction, ...]] = None
    method: str = ""

    def __bool__(self) -> bool:
        return self.member


def cone_member(generators: Sequence[Sequence], v: Sequence, method: Optional[str] = None) -> ConeMembership:
    """Decide whether v lies in the cone spanned by ``generators``.

    ``method`` is "fm" (Fourier-Motzkin on the dual system) or "simplex";
    by default FM is used up to dimension 6 and the simplex beyond.
    """
    v = tuple(Fraction(x) for x in v)
    dim = len(v)
    gens = [tuple(Fraction(x) for x in g) for g in generators]
    for g in gens:
        if len(g) != dim:
            raise ValueError("generators and v must have the same dimension")
    if all(x == 0 for x in v):
        return ConeMembership(True, tuple(Fraction(0) for _ in gens), None, "trivial")
    if not gens:
        return _checked(gens, v, ConeMembership(False, None, tuple(-x for x in v), "trivial"))
    if method is None:
        method = "fm" if dim <= FM_MAX_DIM else "simplex"
    if method == "fm":
        result = _fourier_motzkin(gens, v)
        if result is None:
            result = _simplex(gens, v)
    elif method == "simplex":
        result = _simplex(gens, v)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _checked(gens, v, result)


def _checked(gens, v, result: ConeMembership) -> ConeMembership:
    if result.member:
        lam = result.coefficients
        assert all(x >= 0 for x in lam)
        assert all(sum((l * g[i] for l, g in zip(lam, gens)), Fraction(0)) == v[i] for i in range(len(v)))
    else:
        h = result.separator
        assert all(dot(h, g) >= 0 for g in gens)
        assert dot(h, v) < 0
    return result


def _fourier_motzkin(gens, v) -> Optional[ConeMembership]:
    """Look for h with h.g >= 0 and h.v <= -1 by eliminating h's coordinates.

    Every derived inequality carries its nonnegative multipliers over the
    original ones, so a contradiction yields the coefficients of v directly.
    Returns None when the system grows past FM_MAX_ROWS.
    """
    dim = len(v)
    m = len(gens)
    # a row is (coefs over h, constant, multipliers) meaning coefs.h + constant >= 0
    system = []
    for i, g in enumerate(gens):
        mult = [Fraction(0)] * (m + 1)
        mult[i] = Fraction(1)
        system.append((list(g), Fraction(0), mult))
    mult = [Fraction(0)] * (m + 1)
    mult[m] = Fraction(1)
    system.append(([-x for x in v], Fraction(-1), mult))

    stages = []
    for k in range(dim):
        stages.append(system)
        pos = [r for r in system if r[0][k] > 0]
        neg = [r for r in system if r[0][k] < 0]
        new = [r for r in system if r[0][k] == 0]
        for p in pos:
            for q in neg:
                a, b = p[0][k], -q[0][k]
                coefs = [b * x + a * y for x, y in zip(p[0], q[0])]
                const = b * p[1] + a * q[1]
                mult = [b * x + a * y for x, y in zip(p[2], q[2])]
                # Chernikov: after k+1 eliminations a useful row combines at most k+2 originals
                if sum(1 for x in mult if x != 0) > k + 2:
                    continue
                new.append((coefs, const, mult))
        system = _dedupe_rows(new)
        for coefs, const, mult in system:
            if const < 0 and all(x == 0 for x in coefs):
                mu0 = mult[m]
                lam = tuple(x / mu0 for x in mult[:m])
                return ConeMembership(True, lam, None, "fm")
        if len(system) > FM_MAX_ROWS:
            return None

    h = [Fraction(0)] * dim
    for k in reversed(range(dim)):
        lo, hi = None, None
        for coefs, const, _ in stages[k]:
            a = coefs[k]
            rest = const + sum((coefs[j] * h[j] for j in range(k + 1, dim)), Fraction(0))
            if a > 0:
                bound = -rest / a
                lo = bound if lo is None else max(lo, bound)
            elif a < 0:
                bound = -rest / a
                hi = bound if hi is None else min(hi, bound)
        if lo is not None:
            h[k] = lo
        elif hi is not None:
            h[k] = hi
        assert lo is None or hi is None or lo <= hi
    return ConeMembership(False, None, tuple(h), "fm")


def _dedupe_rows(rows):
    # keep the representative with the smallest multiplier support so the
    # Chernikov pruning stays valid
    seen = {}
    for coefs, const, mult in rows:
        scale = max((abs(x) for x in coefs), default=0) or abs(const) or 1
        key = (tuple(x / scale for x in coefs), const / scale)
        support = sum(1 for x in mult if x != 0)
        if key not in seen or support < seen[key][0]:
            seen[key] = (support, (coefs, const, mult))
    return [row for _, row in seen.values()]


def _simplex(gens, v) -> ConeMembership:
    """Phase-one simplex (Bland's rule) for {lambda >= 0 : G lambda = v}."""
    d, m = len(v), len(gens)
    signs = [1 if x >= 0 else -1 for x in v]
    # tableau rows: [lambda_1..lambda_m, s_1..s_d | rhs]
    rows = []
    for i in range(d):
        row = [signs[i] * gens[j][i] for j in range(m)]
        row += [Fraction(int(i == k)) for k in range(d)]
        row.append(signs[i] * v[i])
        rows.append(row)
    basis = [m + i for i in range(d)]
    ncol = m + d
    cost = [-sum((rows[i][j] for i in range(d)), Fraction(0)) for j in range(m)] + [Fraction(0)] * d
    while True:
        enter = next((j for j in range(ncol) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(d):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][ncol] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        assert best is not None, "phase-one objective is bounded below"
        r = best[1]
        piv = rows[r][enter]
        rows[r] = [x / piv for x in rows[r]]
        for i in range(d):
            if i != r and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        f = cost[enter]
        cost = [c - f * y for c, y in zip(cost, rows[r][:ncol])]
        basis[r] = enter
    infeasibility = sum((rows[i][ncol] for i in range(d) if basis[i] >= m), Fraction(0))
    if infeasibility == 0:
        lam = [Fraction(0)] * m
        for i, b in enumerate(basis):
            if b < m:
                lam[b] = rows[i][ncol]
        return ConeMembership(True, tuple(lam), None, "simplex")
    # reduced cost of artificial i is 1 - y_i
    y = [1 - cost[m + i] for i in range(d)]
    h = tuple(-signs[i] * y[i] for i in range(d))
    return ConeMembership(False, None, h, "simplex")
