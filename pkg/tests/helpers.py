import random
from fractions import Fraction

from qcycle.padic import vp
from qcycle.quadform import det


def random_unimodular(n: int, p: int, rng: random.Random, bound: int = 9) -> list[list[Fraction]]:
    """Random integer matrix whose determinant is prime to p."""
    while True:
        u = [[Fraction(rng.randint(-bound, bound)) for _ in range(n)] for _ in range(n)]
        d = det(u)
        if d != 0 and vp(d, p) == 0:
            return u


def diag_int(entries) -> list[list[int]]:
    n = len(entries)
    return [[int(entries[i]) if i == j else 0 for j in range(n)] for i in range(n)]
