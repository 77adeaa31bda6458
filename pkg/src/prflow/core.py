"""Orbit records and the per-orbit algebra shared by every model.

A closed orbit is stored as a primitive cycle plus a repetition count;
its linearized Poincare matrix is the matching power of the primitive
matrix. Weights follow the periodic-orbit trace

    e^{-T(lam + V)} * T_prim * tr wedge^l(P) / |det(I - P)|.
"""
from __future__ import annotations

import cmath
import math
from itertools import combinations
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence, Union

import numpy as np

#: |det(I - P)| at or below this is treated as a non-hyperbolic orbit.
DET_THRESHOLD = 1e-12

Potential = Union[None, complex, float, Callable[["PrimitiveCycle"], complex]]


class NonHyperbolicOrbitError(ValueError):
    """det(I - P) vanishes (numerically) on an orbit."""


class OrientabilityError(ValueError):
    """The sign of det(I - P) is not constant across orbits."""

    def __init__(self, message: str, orbit: "ClosedOrbit | None" = None):
        super().__init__(message)
        self.orbit = orbit


def _as_matrix(P) -> np.ndarray:
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {P.shape}")
    return P


def _exact_det(M) -> Fraction:
    # Bareiss elimination on Fractions
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    if n == 0:
        return Fraction(1)
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if A[r][k] != 0), None)
            if swap is None:
                return Fraction(0)
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def _float_det(M: np.ndarray):
    """Determinant of a float matrix or a stack of them; closed forms up to 2x2."""
    n = M.shape[-1]
    if n == 1:
        return M[..., 0, 0]
    if n == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    return np.linalg.det(M)


def charpoly_coefficients(P) -> list:
    """Coefficients c_0..c_n of det(tI - P) = sum_k c_k t^{n-k}.

    c_k = (-1)^k * (sum of k x k principal minors). Float minors use closed
    forms up to 2x2 and LU beyond; integer/Fraction input is eliminated exactly.
    """
    P = _as_matrix(P)
    n = P.shape[0]
    exact = P.dtype == object or np.issubdtype(P.dtype, np.integer)
    coeffs = [Fraction(1) if exact else 1.0]
    for k in range(1, n + 1):
        total = Fraction(0) if exact else 0.0
        for S in combinations(range(n), k):
            sub = P[np.ix_(S, S)]
            total += _exact_det(sub.tolist()) if exact else float(_float_det(sub.astype(float)))
        coeffs.append((-1) ** k * total)
    return coeffs


def wedge_trace(P, ell: int):
    """Trace of the ell-th exterior power of ``P``.

    Equals the ell-th elementary symmetric polynomial of the eigenvalues,
    read off the characteristic polynomial (no eigen-solver involved).
    """
    P = _as_matrix(P)
    n = P.shape[0]
    if not 0 <= ell <= n:
        raise ValueError(f"wedge degree {ell} outside [0, {n}]")
    return (-1) ** ell * charpoly_coefficients(P)[ell]


def wedge_traces(P) -> list:
    """All wedge traces e_0..e_n of ``P`` in one pass."""
    return [(-1) ** k * c for k, c in enumerate(charpoly_coefficients(P))]


def wedge_traces_batch(Ps) -> np.ndarray:
    """Wedge traces for a stack of float matrices, shape (N, n, n) -> (N, n + 1)."""
    Ps = np.asarray(Ps, dtype=float)
    N, n, _ = Ps.shape
    out = np.empty((N, n + 1))
    out[:, 0] = 1.0
    for k in range(1, n + 1):
        acc = np.zeros(N)
        for S in combinations(range(n), k):
            acc += _float_det(Ps[:, S][:, :, S])
        out[:, k] = acc
    return out


def det_I_minus(P):
    """det(I - P) as the alternating sum of wedge traces."""
    return sum((-1) ** ell * e for ell, e in enumerate(wedge_traces(P)))


@dataclass(frozen=True, eq=False)
class PrimitiveCycle:
    """A primitive periodic orbit, identified by its canonical label.

    ``label`` is a symbolic word (horseshoe), a tuple of exact points
    (cat map) or a tag (basic example); it is always the minimal rotation.
    """

    label: Any
    primitive_period: float
    primitive_poincare: np.ndarray
    primitive_potential_average: complex = 0.0

    def __post_init__(self):
        if not self.primitive_period > 0:
            raise ValueError("primitive period must be positive")

    @property
    def length(self) -> int:
        return len(self.label) if isinstance(self.label, (str, tuple)) else 1


@dataclass(frozen=True, eq=False)
class ClosedOrbit:
    """One closed trajectory: a primitive cycle traversed ``repetition`` times."""

    label: Any
    primitive_period: float
    repetition: int
    poincare: np.ndarray
    potential_average: complex = 0.0
    det_threshold: float = field(default=DET_THRESHOLD, repr=False)

    def __post_init__(self):
        if self.repetition < 1 or int(self.repetition) != self.repetition:
            raise ValueError("repetition must be a positive integer")
        if not self.primitive_period > 0:
            raise ValueError("primitive period must be positive")
        wt = wedge_traces(self.poincare)
        object.__setattr__(self, "_wedge", wt)
        object.__setattr__(self, "_det", sum((-1) ** k * e for k, e in enumerate(wt)))
        d = float(self._det)
        if not abs(d) > self.det_threshold:
            raise NonHyperbolicOrbitError(
                f"|det(I - P)| = {abs(d):.3e} on orbit {self.label!r} (m={self.repetition})"
            )

    @property
    def period(self) -> float:
        return self.repetition * self.primitive_period

    @property
    def det_I_minus_P(self):
        return self._det

    def wedge(self, ell: int):
        """tr wedge^ell of the Poincare matrix (cached)."""
        if not 0 <= ell < len(self._wedge):
            raise ValueError(f"wedge degree {ell} outside [0, {len(self._wedge) - 1}]")
        return self._wedge[ell]

    @property
    def transport_trace(self) -> complex:
        return cmath.exp(-self.period * self.potential_average)


@dataclass(frozen=True)
class WeightParams:
    lam: complex
    wedge_degree: int = 0
    orientation_sign: int = 0
    potential: Potential = None

    def __post_init__(self):
        # dimension of the flow is 3 for every built-in model, so P is 2x2
        if not 0 <= self.wedge_degree <= 2:
            raise ValueError(f"wedge degree {self.wedge_degree} outside [0, 2]")


def _cycle_sort_key(label) -> tuple:
    if isinstance(label, (str, tuple)):
        return (len(label), label)
    return (1, str(label))


def expand_repetitions(cycles: Iterable[PrimitiveCycle], T_max: float) -> list[ClosedOrbit]:
    """All repetitions ``m`` of each cycle with ``m * T_prim <= T_max``.

    Ordered by (period, label) so the output for a smaller ``T_max`` is a
    prefix of the output for a larger one.
    """
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    out = []
    for cyc in cycles:
        m_max = int(math.floor(T_max / cyc.primitive_period + 1e-12))
        P = np.asarray(cyc.primitive_poincare)
        Pm = P
        for m in range(1, m_max + 1):
            if m > 1:
                Pm = Pm @ P
            out.append(
                ClosedOrbit(
                    label=cyc.label,
                    primitive_period=cyc.primitive_period,
                    repetition=m,
                    poincare=Pm,
                    potential_average=cyc.primitive_potential_average,
                )
            )
    out.sort(key=lambda o: (round(o.period, 9), _cycle_sort_key(o.label)))
    return out


def resolve_potential(potential: Potential, cycle_or_orbit) -> complex:
    if potential is None:
        avg = getattr(cycle_or_orbit, "potential_average", None)
        if avg is None:
            avg = cycle_or_orbit.primitive_potential_average
        return complex(avg)
    if callable(potential):
        return complex(potential(cycle_or_orbit))
    return complex(potential)


def orbit_weight(orbit: ClosedOrbit, params: WeightParams) -> complex:
    """Contribution of one closed orbit to the dynamical trace F_l(lam)."""
    V = resolve_potential(params.potential, orbit)
    T = orbit.period
    det = float(orbit.det_I_minus_P)
    if abs(det) <= orbit.det_threshold:
        raise NonHyperbolicOrbitError(f"near-singular det(I - P) on {orbit.label!r}")
    tr = float(orbit.wedge(params.wedge_degree))
    return cmath.exp(-T * (params.lam + V)) * orbit.primitive_period * tr / abs(det)


def check_orientability(orbits: Sequence[ClosedOrbit]) -> int:
    """Return beta in {0, 1} with (-1)^beta det(I - P) = |det(I - P)| on every orbit."""
    if not orbits:
        raise ValueError("need at least one orbit")
    beta = None
    for orb in orbits:
        d = float(orb.det_I_minus_P)
        b = 0 if d > 0 else 1
        if beta is None:
            beta = b
        elif b != beta:
            raise OrientabilityError(
                f"det(I - P) has sign {'+' if d > 0 else '-'} on {orb.label!r} "
                f"(m={orb.repetition}), expected beta={beta}",
                orbit=orb,
            )
    return beta
