"""Exact periodic-orbit enumeration for the symbolic models.

Horseshoe cycles are binary Lyndon words (Duval's algorithm). Cat-map
periodic points are found in exact integer arithmetic: every solution of
(A^n - I) x = k mod Z^2 has the form adj(A^n - I) k / det(A^n - I).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterator, Sequence

import numpy as np

from .core import PrimitiveCycle

#: Hard cap on word length / iterate count (2^30 words, 64-bit entries of A^n).
N_MAX = 30


class EnumerationLimitError(ValueError):
    pass


def _check_n(n: int, lo: int = 1) -> None:
    if not lo <= n <= N_MAX:
        raise EnumerationLimitError(f"n={n} outside supported range [{lo}, {N_MAX}]")


# -- symbolic dynamics -------------------------------------------------------

def mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def divisors(n: int) -> list[int]:
    small = [d for d in range(1, math.isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def necklace_count(n: int, k: int = 2) -> int:
    """Number of aperiodic necklaces (Lyndon words) of length n over k letters."""
    return sum(mobius(d) * k ** (n // d) for d in divisors(n)) // n


def primitive_counts_from_fixed(fixed: Callable[[int], int], n_max: int) -> dict[int, int]:
    """Mobius inversion of #Fix(f^n) = sum_{d|n} d * P_d."""
    out = {}
    for n in range(1, n_max + 1):
        total = sum(mobius(n // d) * fixed(d) for d in divisors(n))
        if total % n:
            raise ArithmeticError(f"non-integral primitive count at n={n}")
        out[n] = total // n
    return out


def lyndon_words(n_max: int, alphabet: str = "01") -> Iterator[str]:
    """Lyndon words of length <= n_max in lexicographic order (Duval)."""
    k = len(alphabet)
    w = [-1]
    while w:
        w[-1] += 1
        yield "".join(alphabet[i] for i in w)
        m = len(w)
        while len(w) < n_max:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()


def lyndon_cycles(n_max: int, lambda_u: float = 3.0, lambda_s: float = 0.25) -> list[PrimitiveCycle]:
    """Primitive cycles of the linear horseshoe, one per binary Lyndon word."""
    _check_n(n_max)
    return [
        PrimitiveCycle(
            label=w,
            primitive_period=float(len(w)),
            primitive_poincare=np.diag([lambda_u ** -len(w), lambda_s ** -len(w)]),
        )
        for w in lyndon_words(n_max)
    ]


def minimal_rotation(seq: Sequence) -> tuple:
    seq = tuple(seq)
    return min(seq[i:] + seq[:i] for i in range(len(seq))) if seq else seq


# -- cat map -----------------------------------------------------------------

def _as_int_matrix(A) -> tuple[tuple[int, int], tuple[int, int]]:
    A = np.asarray(A)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    if not np.all(np.equal(np.mod(A, 1), 0)):
        raise ValueError("A must have integer entries")
    return tuple(tuple(int(v) for v in row) for row in A)


def check_cat_matrix(A) -> tuple[tuple[int, int], tuple[int, int]]:
    (a, b), (c, d) = M = _as_int_matrix(A)
    if a * d - b * c != 1:
        raise ValueError(f"det A = {a * d - b * c}, need 1")
    if abs(a + d) <= 2:
        raise ValueError(f"|tr A| = {abs(a + d)} <= 2: A is not hyperbolic")
    return M


def _matpow(M, n):
    (a, b), (c, d) = M
    R = ((1, 0), (0, 1))
    for _ in range(n):
        (p, q), (r, s) = R
        R = ((p * a + q * c, p * b + q * d), (r * a + s * c, r * b + s * d))
    return R


def fixed_point_count(A, n: int) -> int:
    """#Fix(A^n) on the torus, i.e. |det(A^n - I)|."""
    (p, q), (r, s) = _matpow(_as_int_matrix(A), n)
    return abs((p - 1) * (s - 1) - q * r)


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


@lru_cache(maxsize=64)
def _cat_fixed_int(A: tuple, n: int) -> tuple[int, np.ndarray]:
    """Fixed points of A^n as integer numerators p with x = p / D, D = |det(A^n - I)|."""
    (p, q), (r, s) = _matpow(A, n)
    M = ((p - 1, q), (r, s - 1))
    det = M[0][0] * M[1][1] - M[0][1] * M[1][0]
    if det == 0:
        raise ValueError(f"det(A^{n} - I) = 0: map is not hyperbolic")
    D = abs(det)
    sgn = 1 if det > 0 else -1
    # adj(M) k / det(M) over coset representatives of Z^2 / M Z^2; the
    # lower-triangular form of M gives the box 0 <= k1 < h11, 0 <= k2 < h22
    (m11, m12), (m21, m22) = M
    g, x, y = _ext_gcd(m11, m12)
    u11, u12, u21, u22 = x, -m12 // g, y, m11 // g
    h21 = m21 * u11 + m22 * u21
    h22 = m21 * u12 + m22 * u22
    h11 = g
    # M U = [[h11, 0], [h21, h22]], so M Z^2 = H Z^2
    if h11 * h22 == 0 or abs(h11 * h22) != D:
        raise ArithmeticError("Hermite reduction failed")
    k1, k2 = np.meshgrid(np.arange(abs(h11), dtype=object), np.arange(abs(h22), dtype=object), indexing="ij")
    k1, k2 = k1.ravel(), k2.ravel()
    adj = ((m22, -m12), (-m21, m11))
    p1 = (sgn * (adj[0][0] * k1 + adj[0][1] * k2)) % D
    p2 = (sgn * (adj[1][0] * k1 + adj[1][1] * k2)) % D
    pts = np.unique(np.stack([p1.astype(np.int64), p2.astype(np.int64)], axis=1), axis=0)
    if len(pts) != D:
        raise ArithmeticError(f"found {len(pts)} fixed points, expected {D}")
    return D, pts


def cat_fixed_points(A, n: int) -> list[tuple[Fraction, Fraction]]:
    """Exact fixed points of x -> A^n x mod 1, sorted lexicographically."""
    M = check_cat_matrix(A)
    _check_n(n)
    D, pts = _cat_fixed_int(M, n)
    return [(Fraction(int(a), D), Fraction(int(b), D)) for a, b in pts]


def cat_map(A) -> Callable[[tuple], tuple]:
    """Exact torus map on Fraction points."""
    (a, b), (c, d) = _as_int_matrix(A)

    def f(x):
        x1, x2 = x
        return ((a * x1 + b * x2) % 1, (c * x1 + d * x2) % 1)

    return f


def group_into_cycles(points: Sequence[Hashable], map: Callable, n: int,
                      period: float | None = None, poincare=None) -> list[PrimitiveCycle]:
    """Partition period-n points into orbits; keep those of minimal period n.

    Labels are the orbit's points rotated to start at the smallest one.
    """
    pts = set(points)
    seen = set()
    cycles = []
    for x in sorted(pts):
        if x in seen:
            continue
        orbit = [x]
        y = map(x)
        while y != x:
            if len(orbit) > n:
                raise ValueError(f"point {x!r} is not periodic with period {n}")
            orbit.append(y)
            y = map(y)
        if n % len(orbit):
            raise ValueError(f"point {x!r} has period {len(orbit)} not dividing {n}")
        seen.update(orbit)
        if len(orbit) == n:
            cycles.append(
                PrimitiveCycle(
                    label=minimal_rotation(orbit),
                    primitive_period=float(n if period is None else period),
                    primitive_poincare=poincare if poincare is not None else np.eye(2),
                )
            )
    return cycles


@lru_cache(maxsize=64)
def _cat_cycle_labels(A: tuple, n: int) -> tuple:
    D, pts = _cat_fixed_int(A, n)
    (a, b), (c, d) = A
    key = pts[:, 0] * D + pts[:, 1]
    order = np.argsort(key)
    skey = key[order]
    img = np.stack([(a * pts[:, 0] + b * pts[:, 1]) % D, (c * pts[:, 0] + d * pts[:, 1]) % D], axis=1)
    nxt = order[np.searchsorted(skey, img[:, 0] * D + img[:, 1])]
    seen = np.zeros(len(pts), dtype=bool)
    labels = []
    for i in range(len(pts)):
        if seen[i]:
            continue
        orb = [i]
        j = nxt[i]
        while j != i:
            orb.append(j)
            j = nxt[j]
        seen[orb] = True
        if len(orb) == n:
            rot = min(range(n), key=lambda r: (pts[orb[r], 0], pts[orb[r], 1]))
            orb = orb[rot:] + orb[:rot]
            labels.append(tuple((Fraction(int(pts[k, 0]), D), Fraction(int(pts[k, 1]), D)) for k in orb))
    labels.sort()
    return tuple(labels)


def cat_cycles(A, n: int) -> list[PrimitiveCycle]:
    """Primitive cycles of minimal period exactly n for the cat map."""
    M = check_cat_matrix(A)
    _check_n(n)
    (a, b), (c, d) = _matpow(M, n)
    # det = 1, so the inverse transpose is the integer adjugate, transposed
    P = np.array([[d, -c], [-b, a]], dtype=float)
    return [PrimitiveCycle(label=lab, primitive_period=float(n), primitive_poincare=P)
            for lab in _cat_cycle_labels(M, n)]


# -- Poincare matrices and counting -------------------------------------------

def poincare_of_cycle(model, cycle: PrimitiveCycle, exact: bool = False) -> np.ndarray:
    """Inverse transpose of the return differential, restricted to the transversal.

    The differential is the ordered product of the model's per-step
    differentials along the cycle label. With ``exact=True`` integer step
    differentials yield a Fraction matrix.
    """
    steps = model.cycle_steps(cycle.label)
    if exact:
        D = np.array([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]], dtype=object)
        for sym in steps:
            S = np.array([[Fraction(v) for v in row] for row in np.asarray(model.step_differential(sym)).tolist()],
                         dtype=object)
            D = S @ D
        (a, b), (c, d) = D.tolist()
        det = a * d - b * c
        inv = np.array([[d / det, -b / det], [-c / det, a / det]], dtype=object)
        return inv.T.copy()
    D = np.eye(2)
    for sym in steps:
        D = np.asarray(model.step_differential(sym), dtype=float) @ D
    return np.linalg.inv(D).T


@dataclass(frozen=True)
class OrbitCountTable:
    """N(T): number of closed orbits (with repetitions) of period <= T."""

    model: str
    entries: list[tuple[float, int]] = field(default_factory=list)
    growth_rate: float = float("nan")

    def __post_init__(self):
        counts = [n for _, n in self.entries]
        if any(n < 0 for n in counts) or any(b < a for a, b in zip(counts, counts[1:])):
            raise ValueError("orbit counts must be nonnegative and nondecreasing")

    def N(self, T: float) -> int:
        last = 0
        for t, n in self.entries:
            if t > T + 1e-9:
                break
            last = n
        return last


def fit_growth_rate(entries: Sequence[tuple[float, int]]) -> float:
    """Exponential rate h from N(T) ~ C e^{hT} / T over the last third of the table.

    The 1/T prefactor is the prime-orbit-theorem correction; without it the
    slope of log N is biased low by roughly 1/T.
    """
    pts = [(t, n) for t, n in entries if n > 0]
    k = max(2, len(pts) // 3)
    tail = pts[-k:]
    if len(tail) < 2:
        return float("nan")
    T = np.array([t for t, _ in tail], dtype=float)
    y = np.log(np.array([n for _, n in tail], dtype=float)) + np.log(T)
    return float(np.polyfit(T, y, 1)[0])


def count_orbits(model, T_max: float) -> OrbitCountTable:
    """Exact N(T) at every multiple of the model's return time up to ``T_max``."""
    unit = model.return_time
    n_max = int(math.floor(T_max / unit + 1e-12))
    if n_max < 1:
        return OrbitCountTable(model.name, [], float("nan"))
    _check_n(n_max)
    prim = model.primitive_counts(n_max)
    entries, total = [], 0
    for n in range(1, n_max + 1):
        # closed orbits of period n: each primitive d-cycle with d | n, once
        total += sum(prim.get(d, 0) for d in divisors(n))
        entries.append((n * unit, total))
    return OrbitCountTable(model.name, entries, fit_growth_rate(entries))
