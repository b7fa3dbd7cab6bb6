"""Prime-field arithmetic and degree-t polynomials over GF(p).

Process ``i`` is evaluated at the field element ``i``; callers keep ``p > n``.
Polynomial helpers work on plain ints for speed; :class:`FieldElement` is a
thin checked wrapper for code that wants operator syntax.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from random import Random
from typing import Iterable, Sequence

DEFAULT_PRIME = 2_147_483_647


class FieldError(ValueError):
    pass


class Fit(enum.Enum):
    """Sentinel results of interpolation."""

    INCONSISTENT = "inconsistent"
    UNDERDETERMINED = "underdetermined"


INCONSISTENT = Fit.INCONSISTENT
UNDERDETERMINED = Fit.UNDERDETERMINED


def check_prime(p: int) -> None:
    from sympy import isprime

    if not isprime(p):
        raise FieldError(f"modulus {p} is not prime")


def inv(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise FieldError("division by zero in field")
    return pow(a, p - 2, p)


@dataclass(frozen=True)
class FieldElement:
    value: int
    p: int

    def __post_init__(self):
        if not 0 <= self.value < self.p:
            raise FieldError(f"{self.value} not in [0, {self.p})")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise FieldError("mixed moduli")
            return other.value
        return other % self.p

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.p, self.p)

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.p, self.p)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.p, self.p)

    def __truediv__(self, other):
        return self * inv(self._coerce(other), self.p)

    def __neg__(self):
        return FieldElement(-self.value % self.p, self.p)

    __radd__ = __add__
    __rmul__ = __mul__

    def __int__(self):
        return self.value


def field_inv(a: FieldElement) -> FieldElement:
    return FieldElement(inv(a.value, a.p), a.p)


@dataclass(frozen=True)
class UniPoly:
    """Coefficients in ascending powers; length is t+1."""

    coeffs: tuple[int, ...]
    p: int

    @property
    def t(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int) -> int:
        acc = 0
        p = self.p
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc

    eval = __call__


@dataclass(frozen=True)
class BiPoly:
    """``coeffs[a][b]`` multiplies x**a * y**b."""

    coeffs: tuple[tuple[int, ...], ...]
    p: int

    def __post_init__(self):
        size = len(self.coeffs)
        if any(len(row) != size for row in self.coeffs):
            raise FieldError("bivariate coefficient matrix must be square")

    @property
    def t(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x: int, y: int) -> int:
        p = self.p
        acc = 0
        for row in reversed(self.coeffs):
            inner = 0
            for c in reversed(row):
                inner = (inner * y + c) % p
            acc = (acc * x + inner) % p
        return acc

    eval = __call__


def random_unipoly(secret: int, t: int, p: int, rng: Random) -> UniPoly:
    return UniPoly((secret % p,) + tuple(rng.randrange(p) for _ in range(t)), p)


def random_bipoly(secret: int, t: int, p: int, rng: Random) -> BiPoly:
    rows = []
    for a in range(t + 1):
        row = [rng.randrange(p) for _ in range(t + 1)]
        if a == 0:
            row[0] = secret % p
        rows.append(tuple(row))
    return BiPoly(tuple(rows), p)


def _check_index(j: int, n: int) -> None:
    if not 1 <= j <= n:
        raise FieldError(f"index {j} outside [1, {n}]")


def bipoly_row(f: BiPoly, j: int, n: int) -> UniPoly:
    """g_j(y) = f(j, y)."""
    _check_index(j, n)
    p = f.p
    out = [0] * (f.t + 1)
    power = 1
    for row in f.coeffs:
        for b, c in enumerate(row):
            out[b] = (out[b] + c * power) % p
        power = power * j % p
    return UniPoly(tuple(out), p)


def bipoly_col(f: BiPoly, j: int, n: int) -> UniPoly:
    """h_j(x) = f(x, j)."""
    _check_index(j, n)
    p = f.p
    out = []
    for row in f.coeffs:
        acc = 0
        for c in reversed(row):
            acc = (acc * j + c) % p
        out.append(acc)
    return UniPoly(tuple(out), p)


@lru_cache(maxsize=4096)
def _lagrange_basis(xs: tuple[int, ...], p: int) -> tuple[tuple[int, ...], ...]:
    """Coefficient vectors of the Lagrange basis polynomials for ``xs``."""
    basis = []
    for i, xi in enumerate(xs):
        poly = [1]
        denom = 1
        for m, xm in enumerate(xs):
            if m == i:
                continue
            # multiply by (x - xm)
            nxt = [0] * (len(poly) + 1)
            for d, c in enumerate(poly):
                nxt[d] = (nxt[d] - c * xm) % p
                nxt[d + 1] = (nxt[d + 1] + c) % p
            poly = nxt
            denom = denom * (xi - xm) % p
        scale = inv(denom, p)
        basis.append(tuple(c * scale % p for c in poly))
    return tuple(basis)


def interpolate_unipoly(points: Iterable[tuple[int, int]], t: int, p: int) -> UniPoly | Fit:
    """Degree-t fit of ``points``; extra points must agree or the result is INCONSISTENT.

    The fit uses the t+1 smallest x-coordinates, so the answer does not depend on
    the order in which points are supplied.
    """
    pts = sorted((x % p, y % p) for x, y in points)
    for a, b in zip(pts, pts[1:]):
        if a[0] == b[0]:
            raise FieldError(f"duplicate x-coordinate {a[0]}")
    if len(pts) < t + 1:
        raise FieldError("underdetermined")
    head = pts[: t + 1]
    basis = _lagrange_basis(tuple(x for x, _ in head), p)
    coeffs = [0] * (t + 1)
    for (_, y), vec in zip(head, basis):
        if y:
            for d, c in enumerate(vec):
                coeffs[d] += y * c
    poly = UniPoly(tuple(c % p for c in coeffs), p)
    for x, y in pts[t + 1:]:
        if poly(x) != y:
            return INCONSISTENT
    return poly


def value_at_zero(points: Iterable[tuple[int, int]], p: int) -> int:
    """f(0) for the unique polynomial of degree len(points)-1 through ``points``."""
    pts = sorted(points)
    basis = _lagrange_basis(tuple(x for x, _ in pts), p)
    return sum(y * vec[0] for (_, y), vec in zip(pts, basis)) % p


def solve_mod(rows: Sequence[Sequence[int]], rhs: Sequence[int], unknowns: int, p: int):
    """Gaussian elimination over GF(p).

    Returns a solution vector, INCONSISTENT, or UNDERDETERMINED.
    """
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(unknowns):
        piv = next((i for i in range(r, len(m)) if m[i][col] % p), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        scale = inv(m[r][col], p)
        m[r] = [v * scale % p for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] % p:
                factor = m[i][col]
                m[i] = [(a - factor * b) % p for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    for i in range(r, len(m)):
        if m[i][unknowns] % p:
            return INCONSISTENT
    if r < unknowns:
        return UNDERDETERMINED
    sol = [0] * unknowns
    for i, col in enumerate(pivots):
        sol[col] = m[i][unknowns] % p
    return sol


def interpolate_bipoly(constraints: Iterable[tuple[int, int, int]], t: int, p: int) -> BiPoly | Fit:
    """Unique degree-t bivariate fit of ``{(x, y, value)}`` constraints."""
    cons = sorted((k % p, l % p, v % p) for k, l, v in constraints)
    for a, b in zip(cons, cons[1:]):
        if a[:2] == b[:2]:
            raise FieldError(f"duplicate constraint key {a[:2]}")
    size = t + 1
    rows, rhs = [], []
    for k, l, v in cons:
        kp = [pow(k, a, p) for a in range(size)]
        lp = [pow(l, b, p) for b in range(size)]
        rows.append([kp[a] * lp[b] % p for a in range(size) for b in range(size)])
        rhs.append(v)
    sol = solve_mod(rows, rhs, size * size, p)
    if isinstance(sol, Fit):
        return sol
    return BiPoly(tuple(tuple(sol[a * size:(a + 1) * size]) for a in range(size)), p)
