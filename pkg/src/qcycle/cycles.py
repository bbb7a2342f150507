"""Intersection numbers of antispecial cycles and degenerate HZ triple products."""

from __future__ import annotations

from dataclasses import dataclass

from .padic import PAdicContext
from .quadform import FormError, JordanInvariants, SymmetricForm, invariants


class DomainError(ValueError):
    """Parameters outside the range where the closed formula is proven."""


def _sign(x: int, name: str) -> int:
    if x not in (1, -1):
        raise ValueError(f"{name} must be +1 or -1, got {x!r}")
    return x


def geometric_sum(p: int, k: int) -> int:
    """(p^k - 1) / (p - 1) as an exact integer."""
    num = p ** k - 1
    q, r = divmod(num, p - 1)
    assert r == 0
    return q


@dataclass(frozen=True)
class AntispecialPair:
    alpha1: int
    alpha2: int
    eps1_class: int
    eps2_class: int
    eta_star_class: int
    p: int

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise DomainError("alphas must be nonnegative")
        if self.alpha1 > self.alpha2:
            raise DomainError("alpha1 must not exceed alpha2; use AntispecialPair.sorted")
        for name in ("eps1_class", "eps2_class", "eta_star_class"):
            _sign(getattr(self, name), name)
        if self.p < 3 or self.p % 2 == 0:
            raise DomainError("p must be an odd prime")

    @classmethod
    def sorted(cls, alpha_a, alpha_b, eps_a, eps_b, eta_star_class, p) -> "AntispecialPair":
        (a1, e1), (a2, e2) = sorted([(alpha_a, eps_a), (alpha_b, eps_b)], key=lambda t: t[0])
        return cls(a1, a2, e1, e2, eta_star_class, p)

    def check_domain(self):
        if self.p == 3 and self.alpha1 < 1:
            raise DomainError("outside proven range: p = 3 requires alpha1 >= 1")


def invariants_from_gram(T: SymmetricForm, eta_star_class: int) -> AntispecialPair:
    """Translate the q-normalized 2x2 Gram matrix into (alpha_i, chi(eps_i)).

    eta_* eta_i p^(beta_i - 1) = eps_i p^alpha_i, so alpha_i = beta_i - 1 and
    chi(eps_i) = chi(eta_*) chi(eta_i).
    """
    _sign(eta_star_class, "eta_star_class")
    if T.n != 2:
        raise FormError("expected a rank-2 Gram matrix")
    inv = invariants(T)
    if inv.betas[0] < 1:
        raise DomainError("valuation below theorem range: need beta_1 >= 1")
    a = [b - 1 for b in inv.betas]
    e = [eta_star_class * c for c in inv.eps_classes]
    return AntispecialPair(a[0], a[1], e[0], e[1], eta_star_class, T.ctx.p)


def case_term(pair: AntispecialPair, branch: int | None = None) -> int:
    """The subtracted term; ``branch`` forces the odd-case chi value (for tests)."""
    p, a1, a2 = pair.p, pair.alpha1, pair.alpha2
    if a1 % 2 == 0:
        return 2 * geometric_sum(p, a1 // 2 + 1)
    h = (a1 + 1) // 2
    c = pair.eta_star_class * pair.eps1_class if branch is None else branch
    if c == -1:
        return p ** h + 2 * geometric_sum(p, h)
    return (a2 - a1 + 1) * p ** h + 2 * geometric_sum(p, h)


def intersection_number(pair: AntispecialPair) -> int:
    pair.check_domain()
    return pair.alpha1 + pair.alpha2 + 3 - case_term(pair)


@dataclass(frozen=True)
class HZTriple:
    """Q(j_1) = eps_1 p and j_2, j_3 spanning diag(eps_2 p^beta_2, eps_3 p^beta_3)."""

    eps1_class: int
    T23: JordanInvariants
    p: int
    delta_class: int = -1

    def __post_init__(self):
        _sign(self.eps1_class, "eps1_class")
        if self.T23.n != 2:
            raise FormError("T23 must have rank 2")
        b2, b3 = self.T23.betas
        if b2 < 1 or b2 > b3:
            raise DomainError("need 1 <= beta_2 <= beta_3")
        if self.T23.ctx.p != self.p:
            raise ValueError("prime mismatch")

    @classmethod
    def from_classes(cls, p, beta2, beta3, eps1, eps2, eps3, ctx: PAdicContext | None = None):
        ctx = ctx or PAdicContext(p)
        (b2, e2), (b3, e3) = sorted([(beta2, eps2), (beta3, eps3)], key=lambda t: t[0])
        return cls(eps1, JordanInvariants.from_classes((b2, b3), (e2, e3), ctx), p)

    def antispecial_pair(self) -> AntispecialPair:
        # eta_* = -Delta eps_1, so chi(eta_*) = -chi(-1) chi(eps_1)
        ctx = self.T23.ctx
        chi_m1 = 1 if (ctx.p - 1) % 4 == 0 else -1
        eta_star = self.delta_class * chi_m1 * self.eps1_class
        (b2, b3), (c2, c3) = self.T23.betas, self.T23.eps_classes
        return AntispecialPair(b2, b3, c2, c3, eta_star, self.p)


def hz_triple_product(t: HZTriple, strict_p3_intro: bool = False) -> int:
    """(Z(j_1), Z(j_2), Z(j_3)) via the reduction to two antispecial cycles.

    At p = 3 the reduced pair has alpha_1 = beta_2 >= 1, which is inside the
    proven range.  ``strict_p3_intro`` instead demands beta_2 > 1 at p = 3.
    """
    if strict_p3_intro and t.p == 3 and t.T23.betas[0] <= 1:
        raise DomainError("outside strict range: p = 3 requires beta_2 > 1")
    return intersection_number(t.antispecial_pair())


def intersect_report(pair: AntispecialPair) -> dict:
    value = intersection_number(pair)
    return {
        "value": value,
        "negative": value < 0,
        "p": pair.p,
        "alpha": [pair.alpha1, pair.alpha2],
        "chi_eps": [pair.eps1_class, pair.eps2_class],
        "chi_eta_star": pair.eta_star_class,
        "chi_eta_star_eps1": pair.eta_star_class * pair.eps1_class,
    }
