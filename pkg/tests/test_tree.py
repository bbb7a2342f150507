import random
from fractions import Fraction

import pytest

from qcycle.cycles import DomainError
from qcycle.padic import vp
from qcycle.tree import (LatticeClass, Midpoint, SpecialEndo, TreeEdge, TreeError, adapted_basis,
                         antispecial_condition, antispecial_superspecial_points, ball, base_vertex,
                         classify_local_equation, distance, edges_within, fixed_set,
                         is_fixed_vertex, lattice_class, neighbors, special_superspecial_points,
                         stabilizes, stabilizes_basis, to_dot, translate, translate_edge,
                         vertex_chart_equation)

from .helpers import random_unimodular

PRIMES = (3, 5, 7)


def random_special(p: int, rng: random.Random, min_det_val: int = -1) -> SpecialEndo:
    while True:
        a, b, c = (Fraction(rng.randint(-p ** 3, p ** 3), p ** rng.randint(0, 2)) for _ in range(3))
        d = -a * a - b * c
        if d != 0 and vp(d, p) >= min_det_val:
            return SpecialEndo([[a, b], [c, -a]], p)


def test_canonical_form_unique():
    rng = random.Random(0)
    for p in PRIMES:
        for v in ball(p, 3):
            B = v.basis()
            for _ in range(3):
                U = random_unimodular(2, p, rng)
                c = Fraction(p) ** rng.randint(-3, 3) * rng.choice([1, 2, 4])
                if c.numerator % p == 0 and vp(c, p) <= 0:
                    continue
                M = [[c * sum(B[i][k] * U[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
                assert lattice_class(M, p) == v
            assert 0 <= v.b < Fraction(p) ** v.a


def test_neighbors():
    for p in PRIMES:
        for v in ball(p, 2):
            nb = neighbors(v)
            assert len(nb) == p + 1 == len(set(nb))
            for w in nb:
                assert v in neighbors(w)
                assert distance(v, w) == 1
        assert len(neighbors(base_vertex(p))) == p + 1


def test_ball_sizes():
    for p in PRIMES:
        for r in range(4):
            assert len(ball(p, r)) == 1 + (p + 1) * (p ** r - 1) // (p - 1)
            assert len(edges_within(p, r)) == len(ball(p, r)) - 1


def test_distance_matches_bfs():
    p = 3
    verts = ball(p, 3)
    o = base_vertex(p)
    dist = {o: 0}
    frontier = [o]
    while frontier:
        nxt = []
        for v in frontier:
            for w in neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = [w for w in nxt if dist[w] < 3]
    for v in verts:
        assert distance(o, v) == dist[v]


def test_stabilizes_examples():
    for p in PRIMES:
        inv_p = Fraction(1, p)
        for v in ball(p, 3):
            assert stabilizes([[1, 0], [0, 1]], v)
            assert not stabilizes([[inv_p, 0], [0, inv_p]], v)
            assert not stabilizes([[0, inv_p], [inv_p, 0]], v)  # det valuation -2
        assert stabilizes_basis([[1, 0], [0, 1]], [[p, 0], [0, 1]], p)
    with pytest.raises(TreeError):
        stabilizes([[1, 0], [0, 1]], [[1, 0], [0, 1]])


def test_special_endo_validation():
    with pytest.raises(TreeError):
        SpecialEndo([[1, 0], [0, 1]], 3)
    with pytest.raises(TreeError):
        SpecialEndo([[0, 1], [1, 0]], 4)


def test_antispecial_examples():
    for p in PRIMES:
        c = Fraction(1, p)
        assert antispecial_superspecial_points(SpecialEndo([[c, 0], [0, -c]], p), 2) == set()
        standard = TreeEdge.of(base_vertex(p), lattice_class([[p, 0], [0, 1]], p))
        for k in range(3):
            s = SpecialEndo([[0, p ** k], [p ** (k + 1), 0]], p)
            pts = antispecial_superspecial_points(s, 3)
            assert standard in pts


def test_orientations_agree():
    rng = random.Random(1)
    for p in PRIMES:
        for _ in range(10):
            s = random_special(p, rng, min_det_val=-3)
            for e in edges_within(p, 2):
                assert antispecial_condition(s, e, e.u) == antispecial_condition(s, e, e.v)


def test_equality_with_special_set():
    rng = random.Random(2)
    for p in PRIMES:
        for _ in range(15):
            s = random_special(p, rng)
            assert antispecial_superspecial_points(s, 3) == special_superspecial_points(s.scaled(p), 3)


def test_special_set_of_divisible_matrix_is_everything():
    # conjugating into a vertex at distance d costs at most d in valuation
    for p in PRIMES:
        for r in (1, 2, 3):
            g = SpecialEndo([[p ** r, 2 * p ** r], [p ** (r + 1), -p ** r]], p)
            assert special_superspecial_points(g, r) == set(edges_within(p, r))
        g = SpecialEndo([[p, 2 * p], [p * p, -p]], p)
        assert special_superspecial_points(g, 3) != set(edges_within(p, 3))


def test_conjugation_equivariance():
    rng = random.Random(3)
    for p in PRIMES:
        for _ in range(5):
            s = random_special(p, rng)
            h = random_unimodular(2, p, rng, bound=4)
            lhs = antispecial_superspecial_points(s.conjugate(h), 3)
            rhs = {translate_edge(h, e) for e in antispecial_superspecial_points(s, 3)}
            assert lhs == rhs


def test_fixed_set_examples():
    for p in PRIMES:
        g = SpecialEndo([[1, 0], [0, -1]], p)
        fs = fixed_set(g, p, 3)
        for k in range(-3, 4):
            assert lattice_class([[Fraction(p) ** k, 0], [0, 1]], p) in fs
        assert fixed_set(g.scaled(p ** 2), p, 3) == fs
        assert fixed_set(g.scaled(Fraction(7 if p != 7 else 2, p)), p, 3) == fs
        # g^2 = p: a single fixed midpoint
        h = SpecialEndo([[0, 1], [p, 0]], p)
        fs = fixed_set(h, p, 2)
        assert len(fs) == 1
        (mid,) = fs
        assert isinstance(mid, Midpoint)
        # h swaps the standard lattice with span(e1, p e2)
        assert mid.edge == TreeEdge.of(base_vertex(p), lattice_class([[1, 0], [0, p]], p))


def test_fixed_vertex_criterion():
    p = 5
    g = [[0, 1], [2, 0]]  # 2 is a non-square mod 5: unramified, fixes only the base vertex
    fixed = [v for v in ball(p, 3) if is_fixed_vertex(g, v)]
    assert fixed == [base_vertex(p)]
    assert translate(g, base_vertex(p)) == base_vertex(p)


def test_adapted_basis():
    p = 5
    e = TreeEdge.of(base_vertex(p), lattice_class([[p, 0], [0, 1]], p))
    for big in (e.u, e.v):
        A0, A1 = e.lattices(big)
        F = adapted_basis(A0, A1, p)
        spanned = [[p * F[0][0], F[0][1]], [p * F[1][0], F[1][1]]]
        assert lattice_class(spanned, p) == lattice_class(A1, p)


def _classified(p, rng, count):
    for _ in range(count):
        s = random_special(p, rng)
        for e in antispecial_superspecial_points(s, 3):
            yield s, e


def test_classifier_implications():
    rng = random.Random(4)
    seen = set()
    for p in PRIMES:
        for s, e in _classified(p, rng, 20):
            try:
                rep = classify_local_equation(s, e)
            except DomainError:
                assert p == 3
                continue
            seen.add(rep.case)
            assert rep.violations == []
            assert {rep.big, rep.small} == {e.u, e.v}
            if rep.case == "ii":
                assert rep.b0 is not None
                assert rep.bbar == p * rep.b0
            if rep.case in ("i", "iii"):
                assert rep.m >= 1
            if rep.case == "i":
                assert rep.distances[0] < rep.distances[1]
    assert seen == {"i", "ii", "iii"}


def test_classifier_errors_and_templates():
    for p in PRIMES:
        std = TreeEdge.of(base_vertex(p), lattice_class([[p, 0], [0, 1]], p))
        s = SpecialEndo([[0, 1], [Fraction(1, p), 0]], p)
        if p == 3:
            with pytest.raises(DomainError, match="outside proven range"):
                classify_local_equation(s, std)
        else:
            rep = classify_local_equation(s, std)
            assert rep.case == "ii" and rep.m == 0 and rep.equation == "p^m*(b0*T0-2*abar-cbar*T1)=0"
        rep = classify_local_equation(SpecialEndo([[0, 1], [p, 0]], p), std)
        assert rep.case == "i" and rep.m == 1 and rep.big == base_vertex(p)
        swapped = TreeEdge.of(base_vertex(p), lattice_class([[1, 0], [0, p]], p))
        rep = classify_local_equation(SpecialEndo([[0, 1], [p, 0]], p), swapped)
        assert rep.case == "ii" and rep.m == 1 and rep.violations == []
        rep = classify_local_equation(SpecialEndo([[1, 0], [0, -1]], p), std)
        assert rep.case == "iii" and rep.equation == "p^m=0" and rep.m == 1
        far = TreeEdge.of(lattice_class([[p ** 3, 0], [0, 1]], p), lattice_class([[p ** 4, 0], [0, 1]], p))
        with pytest.raises(TreeError, match="not on the cycle"):
            classify_local_equation(SpecialEndo([[0, 1], [p, 0]], p), far)
        with pytest.raises(TreeError):
            classify_local_equation(SpecialEndo([[Fraction(1, p), 0], [0, -Fraction(1, p)]], p), std)
        d = rep.to_json()
        assert d["equation"]["template"] == "p^m=0"


def test_vertex_chart_equation_roots_are_fixed_lines():
    rng = random.Random(5)
    for p in PRIMES:
        for _ in range(30):
            # s with a rational eigenline spanned by f1 - T f2 in the standard basis
            T0 = Fraction(rng.randint(-20, 20), rng.randint(1, 5))
            lam = Fraction(rng.randint(1, 9))
            P = [[1, 1], [-T0, 1 - T0]]
            det = P[0][0] * P[1][1] - P[0][1] * P[1][0]
            if det == 0:
                continue
            Pinv = [[P[1][1] / det, -P[0][1] / det], [-P[1][0] / det, P[0][0] / det]]
            D = [[lam, 0], [0, -lam]]
            S = [[sum(P[i][k] * D[k][l] * Pinv[l][j] for k in range(2) for l in range(2))
                  for j in range(2)] for i in range(2)]
            s = SpecialEndo(S, p)
            m, coeffs = vertex_chart_equation(s, base_vertex(p))
            c0, c1, c2 = coeffs
            assert c2 * T0 * T0 + c1 * T0 + c0 == 0


def test_dot_output():
    p = 3
    pts = antispecial_superspecial_points(SpecialEndo([[0, 1], [3, 0]], p), 2)
    dot = to_dot(pts)
    assert dot.startswith("graph cycle {") and dot.count("--") == len(pts)


def test_lattice_class_errors():
    with pytest.raises(TreeError):
        lattice_class([[1, 2], [2, 4]], 3)
    with pytest.raises(TreeError):
        TreeEdge.of(base_vertex(3), base_vertex(3))
    assert LatticeClass(3, 0, Fraction(0)).label() == "a=0,b=0"
