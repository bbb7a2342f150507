"""Symmetric forms over Z_p (p odd): Jordan splitting and local invariants."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .padic import PAdicContext, chi, hilbert_symbol, valuate, vp

Matrix = list[list[Fraction]]


class FormError(ValueError):
    pass


def _frac_matrix(rows) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant by fraction-valued Gaussian elimination."""
    a = [list(map(Fraction, row)) for row in m]
    n = len(a)
    d = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            d = -d
        d *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                for k in range(c, n):
                    a[r][k] -= f * a[c][k]
    return d


def matmul(a, b) -> Matrix:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
             for j in range(len(b[0]))] for i in range(len(a))]


def transpose(a) -> Matrix:
    return [list(col) for col in zip(*a)]


def congruent(gram, u) -> Matrix:
    """u^T * gram * u."""
    return matmul(matmul(transpose(u), gram), u)


@dataclass(frozen=True)
class SymmetricForm:
    gram: tuple[tuple[Fraction, ...], ...]
    ctx: PAdicContext

    def __init__(self, gram, ctx: PAdicContext):
        g = tuple(tuple(Fraction(x) for x in row) for row in gram)
        n = len(g)
        if any(len(row) != n for row in g):
            raise FormError("gram matrix must be square")
        for i in range(n):
            for j in range(i):
                if g[i][j] != g[j][i]:
                    raise FormError("gram matrix must be symmetric")
        for row in g:
            for x in row:
                if x.denominator % ctx.p == 0:
                    raise FormError(f"entry {x} is not p-integral at p={ctx.p}")
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "ctx", ctx)

    @property
    def n(self) -> int:
        return len(self.gram)

    @classmethod
    def diagonal(cls, entries, ctx: PAdicContext) -> "SymmetricForm":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)], ctx)

    def det(self) -> Fraction:
        return det(self.gram)

    def to_json(self) -> dict:
        return {"p": self.ctx.p, "gram": [[str(x) for x in row] for row in self.gram]}

    @classmethod
    def from_json(cls, data, ctx: PAdicContext | None = None) -> "SymmetricForm":
        if isinstance(data, str):
            data = json.loads(data)
        if ctx is None:
            ctx = PAdicContext(int(data["p"]))
        return cls([[Fraction(x) for x in row] for row in data["gram"]], ctx)


@dataclass(frozen=True)
class JordanInvariants:
    """Sorted valuations and unit square classes of a diagonalized form."""

    betas: tuple[int, ...]
    eps_classes: tuple[int, ...]
    eps_reps: tuple[int, ...]
    ctx: PAdicContext

    @property
    def n(self) -> int:
        return len(self.betas)

    @classmethod
    def from_classes(cls, betas, classes, ctx: PAdicContext) -> "JordanInvariants":
        """Invariants of diag(rep(c_i) p^b_i), keeping the given order."""
        if len(betas) != len(classes):
            raise FormError("betas and classes differ in length")
        reps = tuple(ctx.class_rep(c) for c in classes)
        return cls(tuple(betas), tuple(classes), reps, ctx)

    def blocks(self) -> dict[int, int]:
        """Map each valuation to the product of unit classes in its block."""
        out: dict[int, int] = {}
        for b, c in zip(self.betas, self.eps_classes):
            out[b] = out.get(b, 1) * c
        return out

    def diagonal_entries(self) -> list[Fraction]:
        p = self.ctx.p
        return [Fraction(r) * Fraction(p) ** b for b, r in zip(self.betas, self.eps_reps)]

    def to_json(self) -> dict:
        return {"betas": list(self.betas), "classes": list(self.eps_classes)}


def jordan_diagonalize(f: SymmetricForm) -> tuple[Matrix, JordanInvariants]:
    """Diagonalize ``f`` by a unimodular congruence.

    Returns ``(U, inv)`` with ``U^T gram U = diag(eps_i p^beta_i)`` exactly and
    betas ascending.  Pivot rule: minimal valuation, diagonal entries first,
    lowest index on ties; an off-diagonal pivot (i, j) is first moved to the
    diagonal by replacing basis vector i with i + j.
    """
    ctx = f.ctx
    p = ctx.p
    n = f.n
    if f.det() == 0:
        raise FormError("degenerate form")
    a = [list(row) for row in f.gram]
    u = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]

    def add_col(dst, src, c):
        # basis vector dst += c * basis vector src
        for r in range(n):
            u[r][dst] += c * u[r][src]
        for k in range(n):
            a[k][dst] += c * a[k][src]
        for k in range(n):
            a[dst][k] += c * a[src][k]

    def swap(i, j):
        for row in u:
            row[i], row[j] = row[j], row[i]
        a[i], a[j] = a[j], a[i]
        for row in a:
            row[i], row[j] = row[j], row[i]

    for k in range(n):
        best = None
        for i in range(k, n):
            if a[i][i] != 0:
                v = vp(a[i][i], p)
                if best is None or v < best[0]:
                    best = (v, i, i)
        for i in range(k, n):
            for j in range(i + 1, n):
                if a[i][j] != 0:
                    v = vp(a[i][j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
        if best is None:
            raise FormError("degenerate form")
        _, i, j = best
        if i != j:
            add_col(i, j, Fraction(1))
        if i != k:
            swap(i, k)
        piv = a[k][k]
        for l in range(k + 1, n):
            if a[k][l] != 0:
                add_col(l, k, -a[k][l] / piv)

    diag = [a[i][i] for i in range(n)]
    wctx = ctx.with_precision_for(max(vp(d, p) for d in diag))
    vals = [valuate(d, wctx) for d in diag]
    order = sorted(range(n), key=lambda i: vals[i].valuation)
    u = [[row[i] for i in order] for row in u]
    vals = [vals[i] for i in order]
    inv = JordanInvariants(tuple(v.valuation for v in vals),
                           tuple(v.unit_class for v in vals),
                           tuple(v.unit_rep for v in vals), ctx)
    return u, inv


def invariants(f: SymmetricForm) -> JordanInvariants:
    return jordan_diagonalize(f)[1]


def is_equivalent(f: SymmetricForm, g: SymmetricForm) -> bool:
    """GL_n(Z_p)-equivalence: same valuations and same block determinant classes."""
    if f.n != g.n:
        raise FormError("forms have different dimensions")
    fi, gi = invariants(f), invariants(g)
    return fi.betas == gi.betas and fi.blocks() == gi.blocks()


def _isotropic_by_pair(d: JordanInvariants, i: int, j: int) -> bool:
    k = 3 - i - j
    b, c = d.betas, d.eps_classes
    neg_ij = chi(-1, d.ctx) * c[i] * c[j]
    return neg_ij == 1 or (b[k] - b[j]) % 2 == 0


def isotropy_pairs(d: JordanInvariants) -> list[tuple[int, int]]:
    return [(i, j) for i, j in itertools.combinations(range(3), 2)
            if (d.betas[i] - d.betas[j]) % 2 == 0]


def is_isotropic_ternary(d: JordanInvariants) -> bool:
    """Isotropy of diag(eps_i p^beta_i), rank 3.

    Pick i != j with beta_i = beta_j mod 2 and let k be the third index; the
    form is isotropic iff chi(-eps_i eps_j) = 1 or beta_k = beta_j mod 2.
    """
    if d.n != 3:
        raise FormError("isotropy criterion needs a ternary form")
    pairs = isotropy_pairs(d)
    return _isotropic_by_pair(d, *pairs[0])


def hasse_invariant(entries, ctx: PAdicContext) -> int:
    """prod_{i<j} (a_i, a_j)_p of a diagonal form."""
    h = 1
    for x, y in itertools.combinations(entries, 2):
        h *= hilbert_symbol(x, y, ctx)
    return h


def is_isotropic_hasse(entries, ctx: PAdicContext) -> bool:
    """Ternary isotropy via the Hasse invariant: c(q) = (-1, -det q)_p."""
    if len(entries) != 3:
        raise FormError("needs three diagonal entries")
    d = entries[0] * entries[1] * entries[2]
    return hasse_invariant(entries, ctx) == hilbert_symbol(-1, -d, ctx)


def representability_sign(d: JordanInvariants) -> int:
    """Right-hand side of the local sign identity for diag(e1 p, e2 p^b2, e3 p^b3).

    (-1)^(1+b2+b3) chi(-1)^(1+b2+b3+b2+b3+b2*b3)
      * chi(e1)^(b2+b3) chi(e2)^(1+b3) chi(e3)^(1+b2)
    """
    if d.n != 3 or d.betas[0] != 1:
        raise FormError("out of theorem shape: need rank 3 with beta_1 = 1")
    _, b2, b3 = d.betas
    c1, c2, c3 = d.eps_classes
    m1 = chi(-1, d.ctx)

    def pw(x, e):
        return x if e % 2 else 1

    return (pw(-1, 1 + b2 + b3) * pw(m1, 1 + b2 + b3 + b2 + b3 + b2 * b3)
            * pw(c1, b2 + b3) * pw(c2, 1 + b3) * pw(c3, 1 + b2))


def is_represented_by_Vprime(d: JordanInvariants) -> bool:
    """Whether the ternary form is represented by the 4-dim space of special endomorphisms."""
    return representability_sign(d) == -1
