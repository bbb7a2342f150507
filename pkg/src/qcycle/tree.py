"""Finite balls in the Bruhat-Tits tree of PGL_2(Q_p) and cycle point sets on them.

A vertex is a homothety class of Z_p-lattices in Q_p^2.  Its canonical basis
is [[p^a, b], [0, 1]] (columns span the lattice) with a an integer and b a
rational with p-power denominator, 0 <= b < p^a.  An edge joins two classes
with representatives A0 > A1 > p A0, each inclusion of index p.

The distance between classes L, L' is v(det C) - 2 min v(C_ij) for
C = B_L^-1 B_L'.  A traceless s has s^2 scalar, so it acts as an involution and
d(L, sL) is twice the distance from L to the fixed set of s (a fixed edge
midpoint sits at distance 1/2 from both ends).  The local-equation classifier
uses this exact quantity rather than a search inside the ball.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .cycles import DomainError
from .padic import is_prime, vp

Mat2 = tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]
INF = float("inf")


class TreeError(ValueError):
    pass


def _m(rows) -> Mat2:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)  # type: ignore[return-value]


def _mul(a: Mat2, b: Mat2) -> Mat2:
    return ((a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
            (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]))


def _det(a: Mat2) -> Fraction:
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def _inv(a: Mat2) -> Mat2:
    d = _det(a)
    if d == 0:
        raise TreeError("singular matrix")
    return ((a[1][1] / d, -a[0][1] / d), (-a[1][0] / d, a[0][0] / d))


def _scale(a: Mat2, c) -> Mat2:
    c = Fraction(c)
    return ((a[0][0] * c, a[0][1] * c), (a[1][0] * c, a[1][1] * c))


def _val(x: Fraction, p: int):
    return INF if x == 0 else vp(x, p)


def _minval(a: Mat2, p: int):
    return min(_val(x, p) for row in a for x in row)


def is_integral(a: Mat2, p: int) -> bool:
    return all(x.denominator % p != 0 for row in a for x in row)


def _reduce_mod_power(b: Fraction, a: int, p: int) -> Fraction:
    """The representative of b mod p^a Z_p in [0, p^a) with p-power denominator."""
    if b == 0:
        return Fraction(0)
    k = max(0, -vp(b, p))
    top = a + k
    if top <= 0:
        return Fraction(0)
    mod = p ** top
    scaled = b * p ** k
    r = scaled.numerator * pow(scaled.denominator, -1, mod) % mod
    return Fraction(r, p ** k)


@dataclass(frozen=True, order=True)
class LatticeClass:
    p: int
    a: int
    b: Fraction

    def basis(self) -> Mat2:
        return _m([[Fraction(self.p) ** self.a, self.b], [0, 1]])

    def label(self) -> str:
        return f"a={self.a},b={self.b}"

    def to_json(self) -> dict:
        return {"a": self.a, "b": f"{self.b.numerator}/{self.b.denominator}"}


def lattice_class(basis, p: int) -> LatticeClass:
    """Canonical class of the lattice spanned by the columns of ``basis``."""
    B = _m(basis)
    if _det(B) == 0:
        raise TreeError("basis is singular")
    c1 = [B[0][0], B[1][0]]
    c2 = [B[0][1], B[1][1]]
    if c2[1] == 0 or (c1[1] != 0 and vp(c1[1], p) < vp(c2[1], p)):
        c1, c2 = c2, c1
    f = c1[1] / c2[1]
    y = c1[0] - f * c2[0]
    d = vp(c2[1], p)
    unit = c2[1] / Fraction(p) ** d
    a = vp(y, p) - d
    b = c2[0] / unit / Fraction(p) ** d
    return LatticeClass(p, a, _reduce_mod_power(b, a, p))


def base_vertex(p: int) -> LatticeClass:
    return LatticeClass(p, 0, Fraction(0))


def neighbors(v: LatticeClass) -> list[LatticeClass]:
    p = v.p
    (f1x, f2x), (f1y, f2y) = v.basis()
    f1, f2 = (f1x, f1y), (f2x, f2y)
    out = [lattice_class([[f1[0], p * f2[0]], [f1[1], p * f2[1]]], p)]
    for i in range(p):
        g = (f2[0] + i * f1[0], f2[1] + i * f1[1])
        out.append(lattice_class([[p * f1[0], g[0]], [p * f1[1], g[1]]], p))
    return out


def distance(u: LatticeClass, v: LatticeClass) -> int:
    C = _mul(_inv(u.basis()), v.basis())
    return vp(_det(C), u.p) - 2 * _minval(C, u.p)


@dataclass(frozen=True, order=True)
class TreeEdge:
    """Unordered edge; ``u`` < ``v`` in the canonical order."""

    u: LatticeClass
    v: LatticeClass

    @classmethod
    def of(cls, x: LatticeClass, y: LatticeClass) -> "TreeEdge":
        if distance(x, y) != 1:
            raise TreeError("classes are not adjacent")
        return cls(*sorted((x, y)))

    @property
    def p(self) -> int:
        return self.u.p

    def lattices(self, big: LatticeClass | None = None) -> tuple[Mat2, Mat2]:
        """Bases of (A0, A1) with p A0 < A1 < A0; A0 is the class ``big`` (default u)."""
        big = self.u if big is None else big
        if big not in (self.u, self.v):
            raise TreeError("vertex not on edge")
        small = self.v if big == self.u else self.u
        k2 = big.a + 1 - small.a
        assert k2 % 2 == 0
        A0 = big.basis()
        A1 = _scale(small.basis(), Fraction(self.p) ** (k2 // 2))
        assert is_integral(_mul(_inv(A0), A1), self.p)
        return A0, A1

    def to_json(self) -> dict:
        return {"u": self.u.to_json(), "v": self.v.to_json()}


@dataclass(frozen=True)
class SpecialEndo:
    matrix: Mat2
    p: int

    def __init__(self, matrix, p: int):
        if not is_prime(p) or p < 3:
            raise TreeError("p must be an odd prime")
        M = _m(matrix)
        if M[0][0] + M[1][1] != 0:
            raise TreeError("special endomorphism must be traceless")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "p", p)

    @property
    def det(self) -> Fraction:
        return _det(self.matrix)

    def det_valuation(self):
        return _val(self.det, self.p)

    def scaled(self, c) -> "SpecialEndo":
        return SpecialEndo(_scale(self.matrix, c), self.p)

    def conjugate(self, h) -> "SpecialEndo":
        H = _m(h)
        return SpecialEndo(_mul(_mul(H, self.matrix), _inv(H)), self.p)


@lru_cache(maxsize=32)
def ball(p: int, radius: int) -> tuple[LatticeClass, ...]:
    """Vertices within ``radius`` of the standard lattice, in BFS order."""
    start = base_vertex(p)
    seen = {start: 0}
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        if seen[v] == radius:
            continue
        for w in neighbors(v):
            if w not in seen:
                seen[w] = seen[v] + 1
                order.append(w)
                queue.append(w)
    return tuple(order)


@lru_cache(maxsize=32)
def edges_within(p: int, radius: int) -> tuple[TreeEdge, ...]:
    verts = set(ball(p, radius))
    out = set()
    for v in verts:
        for w in neighbors(v):
            if w in verts:
                out.add(TreeEdge(*sorted((v, w))))
    return tuple(sorted(out))


def stabilizes(g, L) -> bool:
    """g L within L, for L a LatticeClass or a basis matrix."""
    B = L.basis() if isinstance(L, LatticeClass) else _m(L)
    G = _m(g)
    p = L.p if isinstance(L, LatticeClass) else None
    if p is None:
        raise TreeError("pass a LatticeClass, or use stabilizes_basis with an explicit p")
    return is_integral(_mul(_mul(_inv(B), G), B), p)


def stabilizes_basis(g, B, p: int) -> bool:
    return is_integral(_mul(_mul(_inv(_m(B)), _m(g)), _m(B)), p)


def _maps_into(g: Mat2, src: Mat2, dst: Mat2, p: int) -> bool:
    return is_integral(_mul(_inv(dst), _mul(g, src)), p)


def antispecial_condition(s: SpecialEndo, edge: TreeEdge, big: LatticeClass | None = None) -> bool:
    """p s A0 in A1 and s A1 in A0 for the orientation with A0 = ``big``."""
    A0, A1 = edge.lattices(big)
    S = s.matrix
    return _maps_into(_scale(S, s.p), A0, A1, s.p) and _maps_into(S, A1, A0, s.p)


def special_condition(g: SpecialEndo, edge: TreeEdge) -> bool:
    return stabilizes(g.matrix, edge.u) and stabilizes(g.matrix, edge.v)


def antispecial_superspecial_points(s: SpecialEndo, radius: int) -> set[TreeEdge]:
    return {e for e in edges_within(s.p, radius)
            if antispecial_condition(s, e, e.u) or antispecial_condition(s, e, e.v)}


def special_superspecial_points(g: SpecialEndo, radius: int) -> set[TreeEdge]:
    return {e for e in edges_within(g.p, radius) if special_condition(g, e)}


def translate(h, v: LatticeClass) -> LatticeClass:
    return lattice_class(_mul(_m(h), v.basis()), v.p)


def translate_edge(h, e: TreeEdge) -> TreeEdge:
    return TreeEdge(*sorted((translate(h, e.u), translate(h, e.v))))


def is_fixed_vertex(g, v: LatticeClass) -> bool:
    """g L = c L for a scalar c."""
    C = _mul(_mul(_inv(v.basis()), _m(g)), v.basis())
    k = _minval(C, v.p)
    return k != INF and vp(_det(C), v.p) == 2 * k


@dataclass(frozen=True, order=True)
class Midpoint:
    edge: TreeEdge


def fixed_set(g, p: int, radius: int) -> set:
    """Fixed vertices and swapped edges (as :class:`Midpoint`) within ``radius``."""
    G = g.matrix if isinstance(g, SpecialEndo) else _m(g)
    if _det(G) == 0:
        raise TreeError("g must be invertible")
    out: set = {v for v in ball(p, radius) if is_fixed_vertex(G, v)}
    for e in edges_within(p, radius):
        if translate(G, e.u) == e.v and translate(G, e.v) == e.u:
            out.add(Midpoint(e))
    return out


def doubled_fixed_distance(s: SpecialEndo, v: LatticeClass) -> int:
    """Twice the distance from v to the fixed set of s, i.e. d(v, s v)."""
    return distance(v, translate(s.matrix, v))


# --------------------------------------------------------------------------
# local equations

TEMPLATES = {
    "i": "T0*p^(m-1)=0",
    "ii": "p^m*(b0*T0-2*abar-cbar*T1)=0",
    "iii": "p^m=0",
}


def _fs(x: Fraction | None):
    return None if x is None else f"{x.numerator}/{x.denominator}"


@dataclass
class LocalEquationReport:
    case: str
    m: int
    abar: Fraction
    bbar: Fraction
    cbar: Fraction
    b0: Fraction | None
    big: LatticeClass
    small: LatticeClass
    distances: tuple[int, int]
    equation: str
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        coeffs = {"abar": _fs(self.abar), "bbar": _fs(self.bbar), "cbar": _fs(self.cbar)}
        if self.b0 is not None:
            coeffs["b0"] = _fs(self.b0)
        return {"case": self.case, "m": self.m,
                "equation": {"template": self.equation, "coefficients": coeffs},
                "big": self.big.to_json(), "small": self.small.to_json(),
                "doubled_distances": list(self.distances),
                "violations": list(self.violations)}


def adapted_basis(A0: Mat2, A1: Mat2, p: int) -> Mat2:
    """Basis (f1, f2) of A0 such that (p f1, f2) is a basis of A1."""
    C = _mul(_inv(A0), A1)
    for j in range(2):
        x, y = C[0][j], C[1][j]
        if x.denominator % p == 0 or y.denominator % p == 0:
            raise TreeError("A1 is not inside A0")
        if x.numerator % p or y.numerator % p:
            # f2 = this column of A1; complete with a standard vector of A0
            f2 = (A1[0][j], A1[1][j])
            f1 = (A0[0][1], A0[1][1]) if x.numerator % p else (A0[0][0], A0[1][0])
            F = _m([[f1[0], f2[0]], [f1[1], f2[1]]])
            assert vp(_det(_mul(_inv(A0), F)), p) == 0
            return F
    raise TreeError("A1 lies in p A0")


def split_power(M: Mat2, p: int) -> tuple[int, Fraction, Fraction, Fraction]:
    """M = p^m [[a, b], [c, -a]] with (a, b, c) not all divisible by p."""
    m = _minval(M, p)
    if m == INF:
        raise TreeError("zero matrix")
    q = Fraction(p) ** m
    return m, M[0][0] / q, M[0][1] / q, M[1][0] / q


def _is_unit(x: Fraction, p: int) -> bool:
    return x != 0 and vp(x, p) == 0


def _divisible(x: Fraction, p: int) -> bool:
    return x == 0 or vp(x, p) >= 1


def classify_local_equation(s: SpecialEndo, edge: TreeEdge) -> LocalEquationReport:
    p = s.p
    if s.det == 0:
        raise TreeError("s must be invertible")
    if s.det_valuation() < -1:
        raise TreeError("v_p(det s) < -1: the cycle is empty")
    if not (antispecial_condition(s, edge, edge.u) or antispecial_condition(s, edge, edge.v)):
        raise TreeError("edge not on the cycle")
    du, dv = doubled_fixed_distance(s, edge.u), doubled_fixed_distance(s, edge.v)
    violations: list[str] = []
    if du != dv:
        case = "i"
        big = edge.u if du < dv else edge.v
    elif du == 0:
        case, big = "iii", edge.u
    elif du == 1:
        case, big = "ii", edge.u
    else:
        raise TreeError(f"inconsistent distances to the fixed set: {du}, {dv}")
    small = edge.v if big == edge.u else edge.u
    A0, A1 = edge.lattices(big)
    F = adapted_basis(A0, A1, p)
    M = _mul(_mul(_inv(F), _scale(s.matrix, p)), F)
    m, a, b, c = split_power(M, p)
    b0 = None
    if case == "ii":
        if m == 0 and p == 3:
            raise DomainError("outside proven range: p = 3 midpoint case with m = 0")
        if not _divisible(a, p):
            violations.append("abar not divisible by p")
        if not _divisible(b, p):
            violations.append("bbar not divisible by p")
        else:
            b0 = b / p
            if not _is_unit(b0, p):
                violations.append("b0 not a unit")
        if not _is_unit(c, p):
            violations.append("cbar not a unit")
    else:
        if m < 1:
            violations.append("m < 1")
        if case == "iii":
            if not _is_unit(a, p):
                violations.append("abar not a unit")
            if not _divisible(b, p):
                violations.append("bbar not divisible by p")
    return LocalEquationReport(case, m, a, b, c, b0, big, small,
                               (du, dv) if big == edge.u else (dv, du),
                               TEMPLATES[case], violations)


def vertex_chart_equation(s: SpecialEndo, v: LatticeClass) -> tuple[int, list[Fraction]]:
    """(m, [-cbar, -2 abar, bbar]): p^m (bbar T^2 - 2 abar T - cbar) in the chart at v.

    T parametrizes the line spanned by f1 - T f2 for the canonical basis (f1, f2).
    """
    B = v.basis()
    M = _mul(_mul(_inv(B), _scale(s.matrix, s.p)), B)
    m, a, b, c = split_power(M, s.p)
    return m, [-c, -2 * a, b]


def to_dot(edges, highlight=()) -> str:
    """Graphviz rendering of an edge set; ``highlight`` edges are drawn bold."""
    hi = set(highlight)
    lines = ["graph cycle {"]
    for e in sorted(edges):
        style = " [style=bold]" if e in hi else ""
        lines.append(f'  "{e.u.label()}" -- "{e.v.label()}"{style};')
    lines.append("}")
    return "\n".join(lines)
