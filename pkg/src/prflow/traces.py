"""Truncated dynamical traces, zeta products and exact continuations.

Truncated sums carry a tail estimate from the last two period blocks:
with r = |b_k / b_{k-1}| < 1 the omitted part is bounded by |b_k| r / (1 - r).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import (
    ClosedOrbit,
    Potential,
    WeightParams,
    check_orientability,
    expand_repetitions,
    orbit_weight,
    resolve_potential,
    wedge_traces_batch,
)
from .models import TWO_PI, PoleError

#: evaluations closer than this to a known pole are refused
POLE_GUARD = 1e-8
#: default lattice truncation for the horseshoe resummation
J_MAX_DEFAULT = 40
EPS = float(np.finfo(float).eps)


def _rounding_bound(abs_sum: float, n: int) -> float:
    # pairwise summation plus a few ulps per term for exp and division
    return (math.ceil(math.log2(max(n, 2))) + 10) * EPS * abs_sum


@dataclass(frozen=True)
class TraceValue:
    value: complex
    tail_estimate: float
    terms_used: int
    abscissa_margin: float
    rounding_error: float = 0.0   # floating-point bound on the summed part, separate from the tail

    def __post_init__(self):
        if not self.tail_estimate >= 0:
            raise ValueError("tail estimate must be nonnegative")
        if math.isfinite(self.tail_estimate) and not self.abscissa_margin > 0:
            raise ValueError("finite tail estimate requires a positive abscissa margin")

    @property
    def converged(self) -> bool:
        return math.isfinite(self.tail_estimate)


@dataclass(frozen=True)
class _OrbitTable:
    cycles: tuple
    cycle_index: np.ndarray   # orbit -> primitive cycle
    block: np.ndarray         # orbit period in units of the return time
    period: np.ndarray
    primitive_period: np.ndarray
    wedge: np.ndarray         # (N, 3) traces of wedge powers
    det: np.ndarray           # det(I - P)
    unit: float


@lru_cache(maxsize=32)
def orbit_table(model, T_max: float) -> _OrbitTable:
    """Every closed orbit with period <= T_max, as flat arrays."""
    cycles = tuple(model.orbit_enumerator(T_max))
    unit = model.return_time
    idx, reps, mats = [], [], []
    for i, c in enumerate(cycles):
        m_max = int(math.floor(T_max / c.primitive_period + 1e-12))
        P = np.asarray(c.primitive_poincare, dtype=float)
        Pm = P
        for m in range(1, m_max + 1):
            if m > 1:
                Pm = Pm @ P
            idx.append(i)
            reps.append(m)
            mats.append(Pm)
    if not mats:
        empty = np.zeros(0)
        return _OrbitTable(cycles, np.zeros(0, int), np.zeros(0, int), empty, empty, np.zeros((0, 3)), empty, unit)
    idx = np.array(idx)
    reps = np.array(reps)
    Tsharp = np.array([cycles[i].primitive_period for i in idx])
    T = reps * Tsharp
    wedge = wedge_traces_batch(np.array(mats))
    det = wedge @ ((-1.0) ** np.arange(wedge.shape[1]))
    block = np.rint(T / unit).astype(int)
    return _OrbitTable(cycles, idx, block, T, Tsharp, wedge, det, unit)


def _potential_per_orbit(table: _OrbitTable, V: Potential) -> np.ndarray:
    if V is None:
        vals = np.array([complex(c.primitive_potential_average) for c in table.cycles])
        return vals[table.cycle_index] if len(vals) else np.zeros(0, complex)
    if callable(V):
        vals = np.array([resolve_potential(V, c) for c in table.cycles])
        return vals[table.cycle_index] if len(vals) else np.zeros(0, complex)
    return np.full(len(table.period), complex(V))


def _block_tail(blocks: dict[int, complex], unit: float) -> tuple[float, float]:
    keys = sorted(k for k, v in blocks.items() if v != 0)
    if len(keys) < 2:
        return math.inf, float("nan")
    k1, k0 = keys[-1], keys[-2]
    b1, b0 = blocks[k1], blocks[k0]
    r = abs(b1 / b0) ** (1.0 / (k1 - k0))
    margin = -math.log(r) / unit if r > 0 else math.inf
    if r >= 1:
        return math.inf, margin
    return abs(b1) * r / (1 - r), margin


def _blocks(table: _OrbitTable, contrib: np.ndarray) -> dict[int, complex]:
    out: dict[int, complex] = {}
    sums = np.zeros(table.block.max() + 1 if len(table.block) else 1, dtype=complex)
    np.add.at(sums, table.block, contrib)
    for k in np.unique(table.block):
        out[int(k)] = complex(sums[k])
    return out


def trace_sum_orbits(orbits: Sequence[ClosedOrbit], lam: complex, ell: int = 0, V: Potential = None) -> complex:
    """Plain sum of orbit weights over an explicit orbit list."""
    params = WeightParams(lam=complex(lam), wedge_degree=ell, potential=V)
    return sum((orbit_weight(o, params) for o in orbits), 0j)


def trace_sum(model, lam: complex, T_max: float, ell: int = 0, V: Potential = None) -> TraceValue:
    """Truncated F_ell(lam) over all closed orbits with period <= T_max."""
    if not 0 <= ell <= model.dimension - 1:
        raise ValueError(f"wedge degree {ell} outside [0, {model.dimension - 1}]")
    lam = complex(lam)
    table = orbit_table(model, float(T_max))
    if len(table.period) == 0:
        return TraceValue(0j, math.inf, 0, float("nan"))
    Vs = _potential_per_orbit(table, V)
    contrib = (np.exp(-table.period * (lam + Vs)) * table.primitive_period
               * table.wedge[:, ell] / np.abs(table.det))
    tail, margin = _block_tail(_blocks(table, contrib), table.unit)
    rnd = _rounding_bound(float(np.abs(contrib).sum()), len(contrib))
    return TraceValue(complex(contrib.sum()), tail, len(contrib), margin, rnd)


def zeta_product(model, lam: complex, T_max: float, V: Potential = None) -> TraceValue:
    """Truncated Euler product over primitive cycles with period <= T_max."""
    lam = complex(lam)
    cycles = model.orbit_enumerator(float(T_max))
    if not cycles:
        return TraceValue(1 + 0j, math.inf, 0, float("nan"))
    Tp = np.array([c.primitive_period for c in cycles])
    Vs = np.array([resolve_potential(V, c) if V is not None else complex(c.primitive_potential_average)
                   for c in cycles])
    logs = np.log1p(-np.exp(-Tp * (lam + Vs)))
    value = complex(np.exp(logs.sum()))
    blocks: dict[int, complex] = {}
    for k, lg in zip(np.rint(Tp / model.return_time).astype(int), np.abs(logs)):
        blocks[int(k)] = blocks.get(int(k), 0j) + lg
    tail_log, margin = _block_tail(blocks, model.return_time)
    tail = abs(value) * math.expm1(tail_log) if math.isfinite(tail_log) else math.inf
    if model.name == "basic":
        # only one primitive orbit exists, so the product is already exact
        tail, margin = 0.0, math.inf
    rnd = abs(value) * _rounding_bound(float(np.abs(logs).sum()), len(logs))
    return TraceValue(value, tail, len(cycles), margin, rnd)


def zeta_log_derivative(model, lam: complex, T_max: float, V: Potential = None,
                        beta: int | None = None) -> TraceValue:
    """zeta'/zeta as sum_ell (-1)^(ell + beta) F_ell(lam)."""
    if beta is None:
        table = orbit_table(model, float(T_max))
        beta = 0 if np.all(table.det > 0) else 1 if np.all(table.det < 0) else None
        if beta is None:
            orbits = expand_repetitions(model.orbit_enumerator(float(T_max)), float(T_max))
            beta = check_orientability(orbits)
    parts = [trace_sum(model, lam, T_max, ell, V) for ell in range(model.dimension)]
    value = sum((-1) ** (ell + beta) * p.value for ell, p in enumerate(parts))
    tail = sum(p.tail_estimate for p in parts)
    margin = min(p.abscissa_margin for p in parts)
    if not math.isfinite(tail):
        margin = min(margin, 0.0) if not math.isnan(margin) else margin
    rnd = sum(p.rounding_error for p in parts)
    return TraceValue(complex(value), tail, parts[0].terms_used, margin, rnd)


# -- exact continuations ---------------------------------------------------

def _basic_series(lam: complex) -> complex:
    # pi e^{-2 pi m lam} / (cosh 2 pi m - 1) = 2 pi e^{-2 pi m (lam + 1)} / (1 - e^{-2 pi m})^2
    total = 0j
    m = 1
    while True:
        q = math.exp(-TWO_PI * m)
        term = TWO_PI * cmath.exp(-TWO_PI * m * (lam + 1)) / (1 - q) ** 2
        total += term
        if abs(term) <= 1e-17 * abs(total) or m >= 400:
            return total
        m += 1


def _E(mu: complex) -> complex:
    return TWO_PI / complex(np.expm1(TWO_PI * mu))


def continue_basic(lam: complex, pole_guard: float = POLE_GUARD, margin: float = 0.5) -> complex:
    """Meromorphic continuation of the basic-example trace to all of C.

    Uses the series where Re lam >= -1 + margin and otherwise steps down with
    F(mu - 1) = 2 F(mu) - F(mu + 1) + 2 pi / (e^{2 pi mu} - 1).
    """
    lam = complex(lam)
    ell = round(-1 - lam.real)
    if ell >= 0 and pole_guard > 0 and abs(lam - complex(-1 - ell, round(lam.imag))) < pole_guard:
        raise PoleError(f"lam = {lam} is within {pole_guard} of a pole")
    n0 = max(0, math.ceil(-1 + margin - lam.real))
    if n0 == 0:
        return _basic_series(lam)
    hi, lo = _basic_series(lam + n0 + 1), _basic_series(lam + n0)
    for j in range(n0, 0, -1):
        mu = lam + j
        try:
            hi, lo = lo, 2 * lo - hi + _E(mu)
        except ZeroDivisionError:
            return complex(math.inf, 0)
    return lo


def continue_cat(lam: complex, pole_guard: float = POLE_GUARD) -> complex:
    """1 / (e^lam - 1), the cat-suspension trace."""
    lam = complex(lam)
    if pole_guard > 0 and abs(lam - complex(0, TWO_PI * round(lam.imag / TWO_PI))) < pole_guard:
        raise PoleError(f"lam = {lam} is within {pole_guard} of a pole")
    den = complex(np.expm1(lam))
    return complex(math.inf, 0) if den == 0 else 1.0 / den


def horseshoe_tail_bound(lam: complex, J_max: int, lambda_u: float, lambda_s: float) -> float:
    """Bound on the lattice terms with j > J_max or k > J_max."""
    a = 2.0 * abs(cmath.exp(-complex(lam)))
    Su, Ss = 1 / (1 - 1 / lambda_u), 1 / (1 - lambda_s)
    SuJ = (1 - lambda_u ** -(J_max + 1)) * Su
    SsJ = (1 - lambda_s ** (J_max + 1)) * Ss
    outside = a * lambda_s * (Su * Ss - SuJ * SsJ)
    zmax = a * lambda_s * max(lambda_u ** -(J_max + 1), lambda_s ** (J_max + 1))
    if zmax >= 1:
        return math.inf
    return max(outside, 0.0) / (1 - zmax)


def continue_horseshoe(lam: complex, J_max: int = J_MAX_DEFAULT, lambda_u: float = 3.0,
                       lambda_s: float = 0.25, pole_guard: float = POLE_GUARD,
                       full_output: bool = False):
    """Resummed horseshoe trace sum_{j,k <= J_max} z / (1 - z), z = 2 lambda_u^-j lambda_s^(k+1) e^-lam.

    With ``full_output`` returns ``(value, error_bound)``: the bound on the
    omitted lattice terms plus a floating-point bound on the summed ones.
    """
    if J_max < 0:
        raise ValueError("J_max must be >= 0")
    lam = complex(lam)
    j = np.arange(J_max + 1)[:, None]
    k = np.arange(J_max + 1)[None, :]
    logw = -j * math.log(lambda_u) + (k + 1) * math.log(lambda_s)
    if pole_guard > 0:
        re = math.log(2.0) + logw
        im = TWO_PI * round(lam.imag / TWO_PI)
        if np.min(np.abs(lam - (re + 1j * im))) < pole_guard:
            raise PoleError(f"lam = {lam} is within {pole_guard} of a lattice pole")
    z = 2.0 * np.exp(logw - lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = z / (1 - z)
    value = complex(np.sum(terms))
    if full_output:
        rnd = _rounding_bound(float(np.sum(np.abs(terms))), terms.size)
        return value, horseshoe_tail_bound(lam, J_max, lambda_u, lambda_s) + rnd
    return value


def continuation(model, pole_guard: float = POLE_GUARD, **kwargs) -> Callable[[complex], complex]:
    """The exact meromorphic continuation of ``model``'s trace as a callable."""
    if model.name == "basic":
        return lambda lam: continue_basic(lam, pole_guard=pole_guard)
    if model.name == "cat":
        return lambda lam: continue_cat(lam, pole_guard=pole_guard)
    if model.name == "horseshoe":
        lu, ls = model.params["lambda_u"], model.params["lambda_s"]
        J = kwargs.get("J_max", J_MAX_DEFAULT)
        return lambda lam: continue_horseshoe(lam, J, lu, ls, pole_guard=pole_guard)
    raise ValueError(f"no exact continuation for model {model.name!r}")
