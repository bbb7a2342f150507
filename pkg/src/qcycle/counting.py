"""Brute-force oracle for local representation densities.

alpha_p(S, T) is the limit over t of p^(-t n (2m-n-1)/2) times the number of
x in M_{m,n}(Z/p^t) with x^T S x = T mod p^t.  Three exact counters are
provided:

``naive``
    enumerates every x; only for tiny instances.
``columns``
    fixes the first n-2 columns one at a time, filtering by the congruences
    they already determine, then counts the last two columns pairwise with a
    matrix product.  Column-1 candidates are split into chunks that can run in
    worker processes.
``rows``
    for diagonal S, writes x^T S x = sum_k s_k r_k r_k^T over the rows r_k of x
    and recurses over rows.  The number of ways to finish from a residual
    target R only depends on R up to R -> g^T R g (g in GL_n(Z/p^t)), since
    r_k -> g^T r_k is a bijection, so residuals are bucketed by a canonical
    diagonal form computed with explicit unimodular moves.  The inner loops are
    compiled with numba.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

from .padic import least_nonresidue, legendre

DEFAULT_BUDGET = 10 ** 10
MAX_MODULUS = 2 ** 31


class BudgetExceeded(RuntimeError):
    def __init__(self, estimate: int, budget: int, method: str):
        self.estimate = estimate
        self.budget = budget
        self.method = method
        super().__init__(f"{method} count needs ~{estimate:.3g} ops, budget is {budget:.3g}")


class NonStabilization(RuntimeError):
    def __init__(self, values: dict[int, Fraction]):
        self.values = values
        last = sorted(values)[-2:]
        super().__init__("density did not stabilize: "
                         + ", ".join(f"t={t}: {values[t]}" for t in last))


def default_budget() -> int:
    env = os.environ.get("QCYCLE_BUDGET")
    return int(float(env)) if env else DEFAULT_BUDGET


def _int_matrix(a, p: int, name: str) -> np.ndarray:
    rows = []
    for row in a:
        out = []
        for x in row:
            x = Fraction(x)
            if x.denominator != 1:
                raise ValueError(f"{name} must be integral, got {x}")
            out.append(int(x))
        rows.append(out)
    m = np.array(rows, dtype=np.int64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not np.array_equal(m, m.T):
        raise ValueError(f"{name} must be symmetric")
    return m


def _det(m: np.ndarray) -> Fraction:
    from .quadform import det
    return det(m.tolist())


@dataclass(frozen=True)
class CountJob:
    S: np.ndarray
    T: np.ndarray
    t: int
    p: int

    def __init__(self, S, T, t: int, p: int):
        if p < 3 or p % 2 == 0:
            raise ValueError("p must be an odd prime")
        if t < 1:
            raise ValueError("t must be >= 1")
        if p ** t > MAX_MODULUS:
            raise ValueError(f"modulus p^t = {p ** t} exceeds {MAX_MODULUS}")
        s, tt = _int_matrix(S, p, "S"), _int_matrix(T, p, "T")
        if _det(s) == 0 or _det(tt) == 0:
            raise ValueError("S and T must be nondegenerate")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "T", tt)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return self.S.shape[0]

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def q(self) -> int:
        return self.p ** self.t

    @property
    def normalization_exponent(self) -> int:
        m, n = self.m, self.n
        return self.t * n * (2 * m - n - 1) // 2


@dataclass(frozen=True)
class CountResult:
    raw_count: int
    normalized: Fraction
    t: int
    method: str
    wall_ms: float

    def to_json(self) -> dict:
        return {"raw": self.raw_count,
                "normalized": f"{self.normalized.numerator}/{self.normalized.denominator}",
                "t": self.t, "method": self.method, "wall_ms": round(self.wall_ms, 3)}


def is_diagonal(a: np.ndarray) -> bool:
    return not np.any(a - np.diag(np.diag(a)))


# --------------------------------------------------------------------------
# cost estimates


def _estimate_naive(job: CountJob) -> int:
    return job.q ** (job.m * job.n) * job.m * job.n


def _estimate_columns(job: CountJob) -> int:
    q, m, n = job.q, job.m, job.n
    cost = q ** m * m
    if n == 1:
        return cost
    col = q ** (m - 1)
    outer = 1
    for k in range(max(n - 2, 0)):
        outer *= max(q ** (m - 1 - k), 1)
    per_leaf = 2 * col * m * max(n - 1, 1)
    pair = max(q ** (m - n + 1), 1) ** 2 * m if n >= 2 else 0
    return cost + outer * (per_leaf + pair)


def _row_class_bound(job: CountJob) -> int:
    codes = 2 * job.t + 1
    return math.comb(codes + job.n - 1, job.n)


def _estimate_rows(job: CountJob) -> int:
    n = job.n
    return job.m * _row_class_bound(job) * job.q ** n * n * n


ESTIMATORS = {"naive": _estimate_naive, "columns": _estimate_columns, "rows": _estimate_rows}


def estimate_cost(job: CountJob, method: str) -> int:
    return ESTIMATORS[method](job)


# --------------------------------------------------------------------------
# naive


def count_naive(job: CountJob) -> int:
    q, m, n = job.q, job.m, job.n
    S, T = job.S % q, job.T % q
    total = 0
    # enumerate columns one full matrix at a time, vectorized over the first column
    first = np.array(list(itertools.product(range(q), repeat=m)), dtype=np.int64)
    for rest in itertools.product(range(q), repeat=m * (n - 1)):
        cols = [np.broadcast_to(np.array(rest[k * m:(k + 1) * m], dtype=np.int64), first.shape)
                for k in range(n - 1)]
        X = np.stack([first] + cols, axis=2)  # (N, m, n)
        G = np.einsum("bki,kl,blj->bij", X, S, X) % q
        total += int(np.all(G == T, axis=(1, 2)).sum())
    return total


# --------------------------------------------------------------------------
# column recursion


def _all_vectors(q: int, m: int) -> np.ndarray:
    grids = np.indices((q,) * m, dtype=np.int64).reshape(m, -1).T
    return np.ascontiguousarray(grids)


def _pair_count(a: np.ndarray, b: np.ndarray, S: np.ndarray, target: int, q: int) -> int:
    if len(a) == 0 or len(b) == 0:
        return 0
    m = S.shape[0]
    if m * m * q ** 3 < 2 ** 52:
        g = (a.astype(np.float64) @ S.astype(np.float64)) @ b.T.astype(np.float64)
        g = np.rint(g).astype(np.int64) % q
    else:
        g = ((a @ S) % q) @ b.T % q
    return int(np.count_nonzero(g == target))


def _columns_chunk(first: np.ndarray, col_sets: list, S: np.ndarray, T: np.ndarray, q: int) -> int:
    n = T.shape[0]
    if n == 1:
        return len(first)

    def rec(i, chosen):
        cand = col_sets[i]
        for j, x in enumerate(chosen):
            cand = cand[(cand @ (S @ x)) % q == T[j, i]]
        if i == n - 2:
            last = col_sets[n - 1]
            for j, x in enumerate(chosen):
                last = last[(last @ (S @ x)) % q == T[j, n - 1]]
            return _pair_count(cand, last, S, int(T[n - 2, n - 1]), q)
        return sum(rec(i + 1, chosen + [x]) for x in cand)

    if n == 2:
        return _pair_count(first, col_sets[1], S, int(T[0, 1]), q)
    return sum(rec(1, [x]) for x in first)


def _column_sets(job: CountJob):
    q, S, T = job.q, job.S % job.q, job.T % job.q
    V = _all_vectors(q, job.m)
    vals = np.einsum("bi,ij,bj->b", V, S, V) % q
    return [V[vals == T[i, i]] for i in range(job.n)], S, T


def count_columns(job: CountJob, workers: int = 1, chunks: int | None = None) -> int:
    col_sets, S, T = _column_sets(job)
    first = col_sets[0]
    if job.n == 1:
        return len(first)
    nchunks = chunks or max(1, workers)
    parts = np.array_split(first, nchunks)
    if workers <= 1:
        return sum(_columns_chunk(part, col_sets, S, T, job.q) for part in parts)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_columns_chunk, part, col_sets, S, T, job.q) for part in parts]
        return sum(f.result() for f in futures)


# --------------------------------------------------------------------------
# row recursion with congruence-class buckets


@njit(cache=True)
def _canon_key(A, n, p, t, q, pw, val, inv, chi):
    """Diagonalize A (in place) by unimodular moves mod q; return a class key.

    Each diagonal entry p^e u is coded as 2e + (chi(u) == -1), and e = t for
    a zero entry.  Within a block of equal e only the product class is kept.
    The key is the sorted code tuple in base 2t+1.
    """
    codes = np.empty(n, dtype=np.int64)
    k = 0
    while k < n:
        bv = t
        bi = -1
        bj = -1
        for i in range(k, n):
            v = val[A[i, i]]
            if v < bv:
                bv = v
                bi = i
                bj = i
        for i in range(k, n):
            for j in range(i + 1, n):
                v = val[A[i, j]]
                if v < bv:
                    bv = v
                    bi = i
                    bj = j
        if bi < 0:
            for r in range(k, n):
                codes[r] = 2 * t
            break
        if bi != bj:
            # basis vector bi += basis vector bj
            for r in range(n):
                A[r, bi] = (A[r, bi] + A[r, bj]) % q
            for r in range(n):
                A[bi, r] = (A[bi, r] + A[bj, r]) % q
        if bi != k:
            for r in range(n):
                tmp = A[r, bi]
                A[r, bi] = A[r, k]
                A[r, k] = tmp
            for r in range(n):
                tmp = A[bi, r]
                A[bi, r] = A[k, r]
                A[k, r] = tmp
        e = bv
        u = A[k, k] // pw[e]
        uinv = inv[u % q]
        for l in range(k + 1, n):
            if A[k, l] != 0:
                c = (A[k, l] // pw[e]) * uinv % q
                for r in range(n):
                    A[r, l] = (A[r, l] - c * A[r, k]) % q
                for r in range(n):
                    A[l, r] = (A[l, r] - c * A[k, r]) % q
        codes[k] = 2 * e + (1 if chi[u % p] < 0 else 0)
        k += 1
    codes.sort()
    # a block p^e (u_1, ..., u_k) is congruent to p^e (1, ..., 1, u_1 ... u_k)
    i = 0
    while i < n:
        j = i
        neg = 0
        while j < n and codes[j] // 2 == codes[i] // 2:
            neg += codes[j] % 2
            j += 1
        e = codes[i] // 2
        if e < t:
            for r in range(i, j):
                codes[r] = 2 * e
            codes[j - 1] = 2 * e + (neg % 2)
        i = j
    key = 0
    base = 2 * t + 1
    for r in range(n - 1, -1, -1):
        key = key * base + codes[r]
    return key


@njit(cache=True)
def _row_level(R, s, n, p, t, q, pw, val, inv, chi, last):
    """Keys of R - s r r^T over all r in (Z/q)^n; with ``last`` count zeros instead."""
    total = q ** n
    keys = np.empty(0 if last else total, dtype=np.int64)
    r = np.zeros(n, dtype=np.int64)
    A = np.empty((n, n), dtype=np.int64)
    zeros = 0
    for idx in range(total):
        rem = idx
        for i in range(n):
            r[i] = rem % q
            rem //= q
        if last:
            ok = True
            for i in range(n):
                for j in range(n):
                    if (R[i, j] - s * r[i] * r[j]) % q != 0:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                zeros += 1
        else:
            for i in range(n):
                for j in range(n):
                    A[i, j] = (R[i, j] - s * r[i] * r[j]) % q
            keys[idx] = _canon_key(A, n, p, t, q, pw, val, inv, chi)
    return keys, zeros


class _RowTables:
    def __init__(self, p: int, t: int, delta: int):
        q = p ** t
        self.p, self.t, self.q, self.delta = p, t, q, delta
        self.pw = np.array([p ** e for e in range(t + 1)], dtype=np.int64)
        val = np.full(q, t, dtype=np.int64)
        for x in range(1, q):
            v, y = 0, x
            while y % p == 0:
                y //= p
                v += 1
            val[x] = v
        self.val = val
        inv = np.zeros(q, dtype=np.int64)
        for x in range(1, q):
            if x % p:
                inv[x] = pow(x, -1, q)
        self.inv = inv
        self.chi = np.array([legendre(x, p) for x in range(p)], dtype=np.int64)

    def decode(self, key: int, n: int) -> np.ndarray:
        base = 2 * self.t + 1
        codes = []
        for _ in range(n):
            codes.append(key % base)
            key //= base
        rep = np.zeros((n, n), dtype=np.int64)
        for i, c in enumerate(codes):
            e, neg = divmod(c, 2)
            if e < self.t:
                rep[i, i] = self.pw[e] * (self.delta if neg else 1) % self.q
        return rep

    def key(self, A: np.ndarray) -> int:
        B = (np.array(A, dtype=np.int64) % self.q).copy()
        return int(_canon_key(B, B.shape[0], self.p, self.t, self.q,
                              self.pw, self.val, self.inv, self.chi))


@njit(cache=True)
def _encode_sym(A, n, q):
    key = 0
    for i in range(n):
        for j in range(i, n):
            key = key * q + A[i, j]
    return key


@njit(cache=True)
def _rank_one_image(s, n, q):
    """Encoded s r r^T for every r in (Z/q)^n."""
    total = q ** n
    out = np.empty(total, dtype=np.int64)
    r = np.zeros(n, dtype=np.int64)
    A = np.empty((n, n), dtype=np.int64)
    for idx in range(total):
        rem = idx
        for i in range(n):
            r[i] = rem % q
            rem //= q
        for i in range(n):
            for j in range(n):
                A[i, j] = s * r[i] * r[j] % q
        out[idx] = _encode_sym(A, n, q)
    return out


@njit(cache=True)
def _finish_two_rows(R, s, n, q, img_keys, img_counts):
    """Number of (r, r') with R = s r r^T + (image entry for r') mod q."""
    total = q ** n
    r = np.zeros(n, dtype=np.int64)
    A = np.empty((n, n), dtype=np.int64)
    found = 0
    for idx in range(total):
        rem = idx
        for i in range(n):
            r[i] = rem % q
            rem //= q
        for i in range(n):
            for j in range(n):
                A[i, j] = (R[i, j] - s * r[i] * r[j]) % q
        key = _encode_sym(A, n, q)
        pos = np.searchsorted(img_keys, key)
        if pos < img_keys.shape[0] and img_keys[pos] == key:
            found += img_counts[pos]
    return found


def _encodable(q: int, n: int) -> bool:
    return q ** (n * (n + 1) // 2) < 2 ** 62


def count_rows(job: CountJob) -> int:
    if not is_diagonal(job.S):
        raise ValueError("row recursion needs a diagonal S; diagonalize it first")
    p, t, q, n = job.p, job.t, job.q, job.n
    tab = _RowTables(p, t, least_nonresidue(p))
    svals = [int(x) % q for x in np.diag(job.S)]
    lookup = _encodable(q, n)
    # the last row (two rows with lookup) is handled without canonical forms
    tail = 2 if lookup and len(svals) >= 2 else 1
    classes = {tab.key(job.T): 1}
    for s in svals[:-tail]:
        nxt: dict[int, int] = {}
        for key in sorted(classes):
            mult = classes[key]
            keys, _ = _row_level(tab.decode(key, n), s, n, p, t, q,
                                 tab.pw, tab.val, tab.inv, tab.chi, False)
            uniq, cnt = np.unique(keys, return_counts=True)
            for u, c in zip(uniq.tolist(), cnt.tolist()):
                nxt[u] = nxt.get(u, 0) + mult * c
        classes = nxt
    total = 0
    if lookup:
        img_keys, img_counts = np.unique(_rank_one_image(svals[-1], n, q), return_counts=True)
        img_counts = img_counts.astype(np.int64)
    for key in sorted(classes):
        rep = tab.decode(key, n)
        if not lookup:
            _, found = _row_level(rep, svals[-1], n, p, t, q,
                                  tab.pw, tab.val, tab.inv, tab.chi, True)
        elif tail == 2:
            found = _finish_two_rows(rep, svals[-2], n, q, img_keys, img_counts)
        else:
            k = _encode_sym(rep, n, q)
            pos = int(np.searchsorted(img_keys, k))
            found = int(img_counts[pos]) if pos < len(img_keys) and img_keys[pos] == k else 0
        total += classes[key] * int(found)
    return total


# --------------------------------------------------------------------------
# public entry points


def _diagonalized(job: CountJob) -> CountJob:
    from .padic import PAdicContext
    from .quadform import SymmetricForm, jordan_diagonalize
    f = SymmetricForm(job.S.tolist(), PAdicContext(job.p))
    _, inv = jordan_diagonalize(f)
    # S is congruent over Z_p to diag(p^b * rep); the count only sees S mod q
    q = job.q
    ent = [job.p ** b * rep % q for b, rep in zip(inv.betas, inv.eps_reps)]
    n = len(ent)
    S = [[ent[i] if i == j else 0 for j in range(n)] for i in range(n)]
    return CountJob(S, job.T.tolist(), job.t, job.p)


def choose_method(job: CountJob) -> str:
    costs = {m: estimate_cost(job, m) for m in ("rows", "columns", "naive")}
    return min(costs, key=costs.get)


def count(job: CountJob, method: str = "auto", budget: int | None = None,
          workers: int = 1) -> CountResult:
    """Exact count of x mod p^t with x^T S x = T mod p^t."""
    budget = default_budget() if budget is None else budget
    if method == "auto":
        method = choose_method(job)
    if method not in ESTIMATORS:
        raise ValueError(f"unknown method {method!r}")
    est = estimate_cost(job, method)
    if est > budget:
        raise BudgetExceeded(est, budget, method)
    start = time.perf_counter()
    if method == "naive":
        raw = count_naive(job)
    elif method == "columns":
        raw = count_columns(job, workers=workers)
    else:
        raw = count_rows(job if is_diagonal(job.S) else _diagonalized(job))
    wall = (time.perf_counter() - start) * 1000
    norm = Fraction(raw, job.p ** job.normalization_exponent)
    return CountResult(raw, norm, job.t, method, wall)


def stabilized_density(S, T, p: int, t_min: int, t_max: int, method: str = "auto",
                       budget: int | None = None) -> tuple[Fraction, dict[int, Fraction]]:
    """Normalized counts for t_min..t_max; the common value if the last two agree."""
    if t_max <= t_min:
        raise ValueError("need t_max > t_min to confirm stabilization")
    values = {}
    for t in range(t_min, t_max + 1):
        values[t] = count(CountJob(S, T, t, p), method=method, budget=budget).normalized
    if values[t_max] != values[t_max - 1]:
        raise NonStabilization(values)
    return values[t_max], values


def split_form(p: int, eta: int = 1, r: int = 0) -> list[list[int]]:
    """diag(1, -1, 1, -eta) plus r hyperbolic planes diag(1, -1)."""
    entries = [1, -1, 1, -eta] + [1, -1] * r
    n = len(entries)
    return [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
