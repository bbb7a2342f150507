"""Closed-form local representation densities for diag(eps1 p, eps2 p^b2, eps3 p^b3).

The density of the ternary form by S(1)_r = diag(1,-1,1,-1) + r hyperbolic
planes is f_T(p^-r) with f_T = gamma~ * F~.  Twisting the last entry of S by
a non-square flips X to -X, which gives A_{S,T}(X) = f_T(-X) for
S = diag(1,-1,1,-Delta).  All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .cycles import DomainError, HZTriple, geometric_sum, hz_triple_product, intersection_number
from .padic import PAdicContext, chi
from .quadform import FormError, JordanInvariants, is_isotropic_ternary, is_represented_by_Vprime


@dataclass(frozen=True)
class DensityPolynomial:
    """Polynomial in X with Fraction coefficients, ascending degree, no trailing zeros."""

    coefficients: tuple[Fraction, ...]

    def __init__(self, coefficients: Iterable = ()):
        c = [Fraction(x) for x in coefficients]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coefficients", tuple(c))

    @classmethod
    def monomial(cls, coeff, degree: int) -> "DensityPolynomial":
        return cls([0] * degree + [coeff])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __add__(self, other: "DensityPolynomial") -> "DensityPolynomial":
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        return DensityPolynomial([x + (b[i] if i < len(b) else 0) for i, x in enumerate(a)])

    def __mul__(self, other):
        if not isinstance(other, DensityPolynomial):
            return DensityPolynomial([x * Fraction(other) for x in self.coefficients])
        if not self.coefficients or not other.coefficients:
            return DensityPolynomial()
        out = [Fraction(0)] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, x in enumerate(self.coefficients):
            for j, y in enumerate(other.coefficients):
                out[i + j] += x * y
        return DensityPolynomial(out)

    __rmul__ = __mul__

    def __call__(self, x) -> Fraction:
        acc = Fraction(0)
        x = Fraction(x)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> "DensityPolynomial":
        return DensityPolynomial([i * c for i, c in enumerate(self.coefficients)][1:])

    def scale_variable(self, c) -> "DensityPolynomial":
        """P(c X)."""
        c = Fraction(c)
        return DensityPolynomial([x * c ** i for i, x in enumerate(self.coefficients)])

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self.coefficients]

    def __repr__(self):
        terms = [f"{c}*X^{i}" for i, c in enumerate(self.coefficients) if c]
        return "DensityPolynomial(" + (" + ".join(terms) or "0") + ")"


@dataclass(frozen=True)
class DensityInvariants:
    xi_tilde: int
    sigma: int
    eta: int


@dataclass(frozen=True)
class TernaryT:
    """diag(eps1 p, eps2 p^beta2, eps3 p^beta3) given by valuations and unit classes."""

    inv: JordanInvariants
    representable: bool = field(init=False)

    def __post_init__(self):
        if self.inv.n != 3 or self.inv.betas[0] != 1:
            raise FormError("out of theorem shape: need rank 3 with beta_1 = 1")
        b = self.inv.betas
        if not b[0] <= b[1] <= b[2]:
            raise FormError("valuations must be sorted")
        object.__setattr__(self, "representable", is_represented_by_Vprime(self.inv))

    @classmethod
    def from_classes(cls, p, beta2, beta3, eps1, eps2, eps3, ctx: PAdicContext | None = None):
        ctx = ctx or PAdicContext(p)
        return cls(JordanInvariants.from_classes((1, beta2, beta3), (eps1, eps2, eps3), ctx))

    @property
    def p(self) -> int:
        return self.inv.ctx.p

    @property
    def beta2(self) -> int:
        return self.inv.betas[1]

    @property
    def beta3(self) -> int:
        return self.inv.betas[2]


def density_invariants(T: TernaryT) -> DensityInvariants:
    c1, c2, _ = T.inv.eps_classes
    if T.beta2 % 2:
        xi, sigma = chi(-1, T.inv.ctx) * c1 * c2, 2
    else:
        xi, sigma = 0, 1
    eta = 1 if is_isotropic_ternary(T.inv) else -1
    return DensityInvariants(xi, sigma, eta)


def f_tilde(T: TernaryT) -> DensityPolynomial:
    """The triple sum F~_p(T; X), evaluated literally; empty ranges contribute 0."""
    p, b2, b3 = T.p, T.beta2, T.beta3
    d = density_invariants(T)
    xi, sigma, eta = d.xi_tilde, d.sigma, d.eta
    top = (1 + b2 - sigma) // 2
    poly = DensityPolynomial()
    for i in range(2):
        for j in range(top - i + 1):
            poly += DensityPolynomial.monomial(p ** (i + j), i + 2 * j)
    for i in range(2):
        for j in range(top - i + 1):
            poly += DensityPolynomial.monomial(eta * p ** (top - j), b3 + sigma + i + 2 * j)
    lead = xi * xi * p ** ((1 + b2 - sigma + 2) // 2)
    if lead:
        for i in range(2):
            for j in range(b3 - b2 + 2 * sigma - 4 + 1):
                poly += DensityPolynomial.monomial(lead * xi ** j, b2 - sigma + 2 + i + j)
    return poly


def gamma_tilde(ctx: PAdicContext) -> DensityPolynomial:
    """(1 - p^-2 X)(1 - p^-2 X^2)."""
    q = Fraction(1, ctx.p ** 2)
    return DensityPolynomial([1, -q]) * DensityPolynomial([1, 0, -q])


def katsurada_f(T: TernaryT) -> DensityPolynomial:
    return gamma_tilde(T.inv.ctx) * f_tilde(T)


def A_ST(T: TernaryT) -> DensityPolynomial:
    """Interpolating polynomial for S = diag(1,-1,1,-Delta): f_T(-X)."""
    return katsurada_f(T).scale_variable(-1)


def density_for_twist(T: TernaryT, eta_class: int, r: int = 0) -> Fraction:
    """alpha_p(S(eta)_r, T) with S(eta) = diag(1,-1,1,-eta): f_T(chi(eta) p^-r)."""
    return katsurada_f(T)(Fraction(eta_class, T.p ** r))


def alpha_prime(T: TernaryT) -> Fraction:
    """d/dX A_{S,T}(X) at X = 1."""
    return A_ST(T).derivative()(1)


def f_tilde_neg_derivative(T: TernaryT) -> Fraction:
    """d/dX F~(T; -X) at X = 1, via the formal derivative."""
    return f_tilde(T).scale_variable(-1).derivative()(1)


def case_label(T: TernaryT) -> str:
    if T.beta2 % 2 == 0:
        return "third"
    c1, c2, _ = T.inv.eps_classes
    return "first" if chi(-1, T.inv.ctx) * c1 * c2 == 1 else "second"


def case_derivative_closed_form(T: TernaryT) -> int:
    """The displayed value of d/dX F~(T; -X) at 1 for each of the three cases.

    The second case is written with a bare beta in the source display; it is
    read as beta_2 here.
    """
    p, b2, b3 = T.p, T.beta2, T.beta3
    label = case_label(T)
    if label == "first":
        h = (b2 + 1) // 2
        return -b2 - b3 - 3 + p ** h + 2 * geometric_sum(p, h)
    if label == "second":
        h = (b2 + 1) // 2
        return -b2 - b3 - 3 + (b3 - b2 + 1) * p ** h + 2 * geometric_sum(p, h)
    return -b2 - b3 - 3 + 2 * geometric_sum(p, b2 // 2 + 1)


def thmc_scale(p: int) -> Fraction:
    """-p^4 / ((p^2 + 1)(p^2 - 1))."""
    return Fraction(-p ** 4, (p ** 2 + 1) * (p ** 2 - 1))


@dataclass
class ThmCRow:
    p: int
    beta2: int
    beta3: int
    classes: tuple[int, int, int]
    status: str  # "pass" | "fail" | "skip"
    reason: str = ""
    triple_product: int | None = None
    scaled_derivative: Fraction | None = None
    alpha_prime: Fraction | None = None
    intermediate_ok: bool | None = None
    case: str = ""
    typo_reading: bool = False

    def to_json(self) -> dict:
        def fs(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"
        return {
            "p": self.p, "beta2": self.beta2, "beta3": self.beta3,
            "classes": list(self.classes), "status": self.status, "reason": self.reason,
            "case": self.case,
            "triple_product": self.triple_product,
            "scaled_derivative": fs(self.scaled_derivative),
            "alpha_prime": fs(self.alpha_prime),
            "intermediate_ok": self.intermediate_ok,
            "typo_reading": self.typo_reading,
        }


def verify_theorem_c(p: int, beta2: int, beta3: int, classes, strict_p3_intro=False,
                     ctx: PAdicContext | None = None) -> ThmCRow:
    """Compare the triple product with -p^4/((p^2+1)(p^2-1)) alpha'_p(S,T)."""
    ctx = ctx or PAdicContext(p)
    c1, c2, c3 = classes
    row = ThmCRow(p, beta2, beta3, (c1, c2, c3), "skip")
    T = TernaryT.from_classes(p, beta2, beta3, c1, c2, c3, ctx)
    if not T.representable:
        row.reason = "T not represented by V'"
        return row
    hz = HZTriple(c1, JordanInvariants.from_classes((beta2, beta3), (c2, c3), ctx), p)
    try:
        lhs = hz_triple_product(hz, strict_p3_intro=strict_p3_intro)
    except DomainError as e:
        row.reason = str(e)
        return row
    ap = alpha_prime(T)
    rhs = thmc_scale(p) * ap
    pair = hz.antispecial_pair()
    expr = intersection_number(pair)
    g = Fraction((p ** 2 + 1) * (p ** 2 - 1), p ** 4)
    row.triple_product = lhs
    row.scaled_derivative = rhs
    row.alpha_prime = ap
    row.intermediate_ok = ap == -g * expr
    row.case = case_label(T)
    row.typo_reading = row.case == "second"
    row.status = "pass" if (rhs == lhs and row.intermediate_ok) else "fail"
    return row


def thmc_grid(primes=(3, 5, 7, 11, 13), beta_max=9):
    for p in primes:
        for b2 in range(1, beta_max + 1):
            for b3 in range(b2, beta_max + 1):
                for c1 in (1, -1):
                    for c2 in (1, -1):
                        for c3 in (1, -1):
                            yield p, b2, b3, (c1, c2, c3)


def verify_theorem_c_sweep(primes=(3, 5, 7, 11, 13), beta_max=9, strict_p3_intro=False) -> list[ThmCRow]:
    ctxs = {p: PAdicContext(p) for p in primes}
    return [verify_theorem_c(p, b2, b3, cl, strict_p3_intro, ctxs[p])
            for p, b2, b3, cl in thmc_grid(primes, beta_max)]
