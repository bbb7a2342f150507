"""Exact p-adic scalar arithmetic for odd primes.

Everything here works on Python integers and ``fractions.Fraction``; there is
no floating point.  A :class:`PAdicContext` carries the prime, the working
precision used when a unit has to be reduced to a residue, and the fixed
non-square unit ``delta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

DEFAULT_PRECISION = 20
GUARD_DIGITS = 6


class PAdicError(ValueError):
    """Raised for inputs outside the domain of a p-adic operation."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def least_nonresidue(p: int) -> int:
    for a in range(2, p):
        if pow(a, (p - 1) // 2, p) == p - 1:
            return a
    raise PAdicError(f"no quadratic non-residue mod {p}")


@dataclass(frozen=True)
class PAdicContext:
    p: int
    precision_N: int = DEFAULT_PRECISION
    delta: int = field(default=0)

    def __post_init__(self):
        if not is_prime(self.p) or self.p < 3:
            raise PAdicError(f"p must be an odd prime, got {self.p}")
        if self.precision_N < 1:
            raise PAdicError("precision must be positive")
        if self.delta == 0:
            object.__setattr__(self, "delta", least_nonresidue(self.p))
        elif self.delta % self.p == 0 or legendre(self.delta, self.p) != -1:
            raise PAdicError(f"delta={self.delta} is not a non-square unit mod {self.p}")

    @property
    def modulus(self) -> int:
        return self.p ** self.precision_N

    def with_precision_for(self, max_valuation: int) -> "PAdicContext":
        """Context whose precision covers ``max_valuation`` plus the guard digits."""
        need = max(max_valuation, 0) + GUARD_DIGITS
        if need <= self.precision_N:
            return self
        return PAdicContext(self.p, need, self.delta)

    def class_rep(self, cls: int) -> int:
        """Unit representative of a square class: 1 for +1, delta for -1."""
        if cls == 1:
            return 1
        if cls == -1:
            return self.delta
        raise PAdicError(f"square class must be +1 or -1, got {cls}")


@dataclass(frozen=True)
class UnitValuation:
    valuation: int
    unit_class: int
    unit_rep: int


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p; 0 when p divides a."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def vp_int(n: int, p: int) -> int:
    if n == 0:
        raise PAdicError("zero has no valuation")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = _as_fraction(x)
    if x == 0:
        raise PAdicError("zero has no valuation")
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


def unit_part(x, p: int) -> Fraction:
    """x / p^vp(x), a rational whose numerator and denominator are prime to p."""
    x = _as_fraction(x)
    return x / Fraction(p) ** vp(x, p)


def valuate(x, ctx: PAdicContext) -> UnitValuation:
    x = _as_fraction(x)
    if x == 0:
        raise PAdicError("zero has no valuation")
    v = vp(x, ctx.p)
    u = unit_part(x, ctx.p)
    mod = ctx.modulus
    rep = u.numerator * pow(u.denominator, -1, mod) % mod
    return UnitValuation(v, legendre(rep, ctx.p), rep)


def chi(u, ctx: PAdicContext) -> int:
    """Quadratic residue character of a p-adic unit (integer or rational)."""
    u = _as_fraction(u)
    if u == 0 or u.numerator % ctx.p == 0:
        raise PAdicError(f"{u} is not a unit at p={ctx.p}")
    if u.denominator % ctx.p == 0:
        raise PAdicError(f"{u} is not a unit at p={ctx.p}")
    return legendre(u.numerator * u.denominator, ctx.p)


def is_square(x, ctx: PAdicContext) -> bool:
    """Whether a nonzero rational is a square in Q_p."""
    uv = valuate(x, ctx)
    return uv.valuation % 2 == 0 and uv.unit_class == 1


def hilbert_symbol(a, b, ctx: PAdicContext) -> int:
    """Local Hilbert symbol (a, b)_p for odd p.

    With a = p^s u and b = p^t v this is
    (-1)^(s t (p-1)/2) * chi(u)^t * chi(v)^s.
    """
    a, b = _as_fraction(a), _as_fraction(b)
    if a == 0 or b == 0:
        raise PAdicError("Hilbert symbol of zero is undefined")
    ua, ub = valuate(a, ctx), valuate(b, ctx)
    s, t = ua.valuation, ub.valuation
    sign = -1 if (s * t * ((ctx.p - 1) // 2)) % 2 else 1
    if t % 2:
        sign *= ua.unit_class
    if s % 2:
        sign *= ub.unit_class
    return sign
