"""Three exactly solvable open hyperbolic flows.

* ``basic``: the saddle flow x1 d/dx1 - x2 d/dx2 + d/dx3 on the solid torus
  {x1^2 + x2^2 < 1} x S^1 with a single closed orbit of period 2 pi.
* ``cat``: unit-roof suspension of a hyperbolic toral automorphism.
* ``horseshoe``: unit-roof suspension of a linear two-branch horseshoe.

Each descriptor bundles the exact flow, a boundary function, an orbit
enumerator and closed-form oracles that never touch the enumerator.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import orbits as _orbits
from .core import PrimitiveCycle

TWO_PI = 2.0 * math.pi


class PoleError(ValueError):
    """Evaluation requested at (or too close to) a pole."""


@dataclass(frozen=True)
class ResonanceOracle:
    """Predicted poles ``(position, rank)`` inside ``region = (re_min, re_max, im_min, im_max)``."""

    poles: tuple[tuple[complex, int], ...]
    region: tuple[float, float, float, float]

    def __post_init__(self):
        r0, r1, i0, i1 = self.region
        for z, rank in self.poles:
            if rank < 1:
                raise ValueError("oracle ranks must be >= 1")
            if not (r0 <= z.real <= r1 and i0 <= z.imag <= i1):
                raise ValueError(f"oracle pole {z} outside its region")


@dataclass(frozen=True, eq=False)
class ModelDescriptor:
    name: str
    params: dict
    flow: Callable[[np.ndarray, float], np.ndarray]
    vector_field: Callable[[np.ndarray], np.ndarray]
    rho: Callable[[np.ndarray], float]
    return_time: float
    orbit_enumerator: Callable[[float], list[PrimitiveCycle]]
    primitive_counts: Callable[[int], dict[int, int]]
    step_differential: Callable[[Any], np.ndarray]
    cycle_steps: Callable[[Any], list]
    cycle_points: Callable[[Any], np.ndarray]
    covector_map: Callable[[float], np.ndarray]
    stable_dim: int = 1
    dimension: int = 3
    hyperbolicity_rates: tuple[float, float] = (1.0, 1.0)
    vector_field_jacobian: Optional[Callable] = None
    rho_grad: Optional[Callable] = None
    rho_hess: Optional[Callable] = None
    has_boundary: bool = True
    continuous_time: bool = True
    oracle: Optional[Callable[[complex], complex]] = field(default=None, repr=False)
    resonance_oracle: Optional[Callable[[tuple], ResonanceOracle]] = field(default=None, repr=False)

    def cycles(self, T_max: float) -> list[PrimitiveCycle]:
        return self.orbit_enumerator(T_max)


def normalize_region(region) -> tuple:
    """Flat ``(re_min, re_max, im_min, im_max)`` from flat or nested input."""
    flat = tuple(np.asarray(region, dtype=float).ravel().tolist())
    if len(flat) != 4:
        raise ValueError(f"region needs four numbers, got {region!r}")
    r0, r1, i0, i1 = flat
    if not (r0 < r1 and i0 < i1):
        raise ValueError(f"empty region {region!r}")
    return flat


def _in_region(z: complex, region) -> bool:
    r0, r1, i0, i1 = region
    return r0 <= z.real <= r1 and i0 <= z.imag <= i1


# -- basic example -----------------------------------------------------------

def _scale(v: float, s: float) -> float:
    # v * e^s without overflowing e^s when v is tiny
    if v == 0.0:
        return 0.0
    if abs(s) < 700:
        return math.exp(s) * v
    return math.copysign(math.exp(min(math.log(abs(v)) + s, 710.0)), v)


def _basic_flow(x, t):
    x = np.asarray(x, dtype=float)
    return np.array([_scale(x[0], t), _scale(x[1], -t), (x[2] + t) % TWO_PI])


def _basic_oracle(lam: complex) -> complex:
    lam = complex(lam)
    if not lam.real > -1:
        raise PoleError(f"series for the basic example needs Re lam > -1, got {lam}")
    total = 0j
    for m in range(1, 10_000):
        term = cmath.exp(-TWO_PI * m * lam) / (math.cosh(TWO_PI * m) - 1.0)
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-300) or m > 200:
            break
    return math.pi * total


def _basic_resonances(region) -> ResonanceOracle:
    r0, r1, i0, i1 = region
    poles = []
    for ell in range(0, max(0, int(math.floor(-1 - r0))) + 1):
        re = -1.0 - ell
        if not r0 <= re <= r1:
            continue
        for k in range(int(math.ceil(i0)), int(math.floor(i1)) + 1):
            poles.append((complex(re, k), ell + 1))
    return ResonanceOracle(tuple(poles), tuple(region))


@lru_cache(maxsize=None)
def basic_example() -> ModelDescriptor:
    """Saddle flow on the solid torus; trapped set K = {x1 = x2 = 0}."""
    P = np.diag([math.exp(-TWO_PI), math.exp(TWO_PI)])
    cycle = PrimitiveCycle(label="K", primitive_period=TWO_PI, primitive_poincare=P)
    return ModelDescriptor(
        name="basic",
        params={},
        flow=_basic_flow,
        vector_field=lambda x: np.array([x[0], -x[1], 1.0]),
        vector_field_jacobian=lambda x: np.diag([1.0, -1.0, 0.0]),
        rho=lambda x: 1.0 - x[0] ** 2 - x[1] ** 2,
        rho_grad=lambda x: np.array([-2.0 * x[0], -2.0 * x[1], 0.0]),
        rho_hess=lambda x: np.diag([-2.0, -2.0, 0.0]),
        return_time=TWO_PI,
        orbit_enumerator=lambda T_max: [cycle] if T_max >= TWO_PI else [],
        primitive_counts=lambda n_max: {1: 1} if n_max >= 1 else {},
        step_differential=lambda sym: np.diag([math.exp(TWO_PI), math.exp(-TWO_PI)]),
        cycle_steps=lambda label: [label],
        cycle_points=lambda label: np.array([[0.0, 0.0, s] for s in np.linspace(0, TWO_PI, 8, endpoint=False)]),
        covector_map=lambda t: np.diag([math.exp(-t), math.exp(t)]),
        hyperbolicity_rates=(1.0, 1.0),
        oracle=_basic_oracle,
        resonance_oracle=_basic_resonances,
    )


# -- suspensions -------------------------------------------------------------

def _suspension_flow(step, inverse_step):
    def flow(x, t):
        x = np.asarray(x, dtype=float)
        s = x[2] + t
        k = math.floor(s)
        y = x[:2].copy()
        for _ in range(int(k)) if k > 0 else ():
            y = step(y)
        for _ in range(int(-k)) if k < 0 else ():
            y = inverse_step(y)
        return np.array([y[0], y[1], s - k])

    return flow


def _cat_resonances(region) -> ResonanceOracle:
    r0, r1, i0, i1 = region
    poles = []
    if r0 <= 0 <= r1:
        for k in range(int(math.ceil(i0 / TWO_PI)), int(math.floor(i1 / TWO_PI)) + 1):
            poles.append((complex(0.0, TWO_PI * k), 1))
    return ResonanceOracle(tuple(poles), tuple(region))


@lru_cache(maxsize=32)
def _cat_model(A: tuple) -> ModelDescriptor:
    Ai = np.array(A, dtype=float)
    (a, b), (c, d) = A
    Ainv = np.array([[d, -b], [-c, a]], dtype=float)
    tr = a + d
    lam_plus = (abs(tr) + math.sqrt(tr * tr - 4)) / 2
    w, V = np.linalg.eig(Ai)
    cond = float(np.linalg.cond(V))

    def enumerate_cycles(T_max):
        n_max = int(math.floor(T_max + 1e-12))
        if n_max < 1:
            return []
        _orbits._check_n(n_max)
        return [c for n in range(1, n_max + 1) for c in _orbits.cat_cycles(A, n)]

    def oracle(lam):
        lam = complex(lam)
        den = complex(np.expm1(lam))
        if abs(lam - complex(0, TWO_PI * round(lam.imag / TWO_PI))) < 1e-8:
            raise PoleError(f"lam = {lam} is a pole of 1/(e^lam - 1)")
        return 1.0 / den

    def covector_map(t):
        n = int(round(t))
        if abs(t - n) > 1e-12:
            raise ValueError("suspension differentials are only tabulated at integer times")
        return np.linalg.matrix_power(Ainv, n).T if n >= 0 else np.linalg.matrix_power(Ai, -n).T

    return ModelDescriptor(
        name="cat",
        params={"A": [list(r) for r in A]},
        flow=_suspension_flow(lambda y: (Ai @ y) % 1.0, lambda y: (Ainv @ y) % 1.0),
        vector_field=lambda x: np.array([0.0, 0.0, 1.0]),
        vector_field_jacobian=lambda x: np.zeros((3, 3)),
        rho=lambda x: 1.0,
        return_time=1.0,
        orbit_enumerator=enumerate_cycles,
        primitive_counts=lambda n_max: _orbits.primitive_counts_from_fixed(
            lambda n: _orbits.fixed_point_count(A, n), n_max),
        step_differential=lambda sym: np.array(A),
        cycle_steps=lambda label: list(label),
        cycle_points=lambda label: np.array([[float(p[0]), float(p[1]), 0.0] for p in label]),
        covector_map=covector_map,
        hyperbolicity_rates=(cond, math.log(lam_plus)),
        has_boundary=False,
        continuous_time=False,
        oracle=oracle,
        resonance_oracle=_cat_resonances,
    )


def cat_suspension(A=((2, 1), (1, 1))) -> ModelDescriptor:
    """Unit-roof suspension of x -> A x mod 1 (trapped set is everything)."""
    return _cat_model(_orbits.check_cat_matrix(A))


#: fixed points of the two horseshoe branches (interior of the unit square)
HORSESHOE_ANCHORS = (0.05, 0.95)


def horseshoe_lattice(lambda_u: float, lambda_s: float, region, merge_tol: float = 1e-9):
    """Poles log 2 - j log lambda_u + (k+1) log lambda_s + 2 pi i m inside ``region``.

    Coincident lattice points are merged and their residues summed.
    """
    r0, r1, i0, i1 = region
    lu, ls = math.log(lambda_u), math.log(lambda_s)
    base = math.log(2.0)
    pts: list[list] = []
    k = 0
    while base + (k + 1) * ls >= r0 - 1e-12:
        j = 0
        while base - j * lu + (k + 1) * ls >= r0 - 1e-12:
            re = base - j * lu + (k + 1) * ls
            if re <= r1 + 1e-12:
                for m in range(int(math.ceil(i0 / TWO_PI - 1e-12)), int(math.floor(i1 / TWO_PI + 1e-12)) + 1):
                    z = complex(re, TWO_PI * m)
                    for p in pts:
                        if abs(p[0] - z) < merge_tol:
                            p[1] += 1
                            break
                    else:
                        pts.append([z, 1])
            j += 1
        k += 1
    pts.sort(key=lambda p: (-p[0].real, p[0].imag))
    return [(p[0], p[1]) for p in pts]


@lru_cache(maxsize=32)
def _horseshoe_model(lambda_u: float, lambda_s: float) -> ModelDescriptor:
    p = q = HORSESHOE_ANCHORS

    def step(y):
        i = 0 if y[0] < 0.5 else 1
        return np.array([lambda_u * (y[0] - p[i]) + p[i], lambda_s * (y[1] - q[i]) + q[i]])

    def inverse_step(y):
        i = 0 if y[1] < 0.5 else 1
        return np.array([(y[0] - p[i]) / lambda_u + p[i], (y[1] - q[i]) / lambda_s + q[i]])

    def cycle_points(label):
        # periodic point of the affine composition along the word
        n = len(label)
        ax, bx, ay, by = 1.0, 0.0, 1.0, 0.0
        for ch in label:
            i = int(ch)
            ax, bx = lambda_u * ax, lambda_u * bx + (1 - lambda_u) * p[i]
            ay, by = lambda_s * ay, lambda_s * by + (1 - lambda_s) * q[i]
        y = np.array([bx / (1 - ax), by / (1 - ay)])
        out = []
        for _ in range(n):
            out.append([y[0], y[1], 0.0])
            y = step(y)
        return np.array(out)

    def oracle(lam):
        # direct sum over periods n of 2^n e^{-lam n} / |det(I - P_n)|
        lam = complex(lam)
        if not lam.real > math.log(2 * lambda_s):
            raise PoleError(f"period series diverges for Re lam <= log(2 lambda_s), got {lam}")
        total = 0j
        for n in range(1, 5000):
            term = (2.0 * cmath.exp(-lam)) ** n / ((1 - lambda_u ** -n) * (lambda_s ** -n - 1))
            total += term
            if abs(term) < 1e-18 * max(abs(total), 1e-300):
                break
        return total

    def enumerate_cycles(T_max):
        n_max = int(math.floor(T_max + 1e-12))
        return _orbits.lyndon_cycles(n_max, lambda_u, lambda_s) if n_max >= 1 else []

    return ModelDescriptor(
        name="horseshoe",
        params={"lambda_u": lambda_u, "lambda_s": lambda_s},
        flow=_suspension_flow(step, inverse_step),
        vector_field=lambda x: np.array([0.0, 0.0, 1.0]),
        vector_field_jacobian=lambda x: np.zeros((3, 3)),
        rho=lambda x: min(x[0] * (1 - x[0]), x[1] * (1 - x[1])),
        return_time=1.0,
        orbit_enumerator=enumerate_cycles,
        primitive_counts=lambda n_max: _orbits.primitive_counts_from_fixed(lambda n: 2 ** n, n_max),
        step_differential=lambda sym: np.diag([lambda_u, lambda_s]),
        cycle_steps=lambda label: list(label),
        cycle_points=cycle_points,
        covector_map=lambda t: np.diag([lambda_u ** -t, lambda_s ** -t]),
        hyperbolicity_rates=(1.0, min(math.log(lambda_u), -math.log(lambda_s))),
        continuous_time=False,
        oracle=oracle,
        resonance_oracle=lambda region: ResonanceOracle(
            tuple(horseshoe_lattice(lambda_u, lambda_s, region)), tuple(region)),
    )


def horseshoe_suspension(lambda_u: float = 3.0, lambda_s: float = 0.25) -> ModelDescriptor:
    """Unit-roof suspension of the orientation-preserving linear horseshoe."""
    lambda_u, lambda_s = float(lambda_u), float(lambda_s)
    if not lambda_u > 1:
        raise ValueError(f"lambda_u must exceed 1, got {lambda_u}")
    if not 0 < lambda_s < 1:
        raise ValueError(f"lambda_s must lie in (0, 1), got {lambda_s}")
    return _horseshoe_model(lambda_u, lambda_s)


# -- oracles and configuration ----------------------------------------------

def oracle_trace(model: ModelDescriptor, lam: complex) -> complex:
    """Closed-form F(lam), computed without the orbit enumerator."""
    if model.oracle is None:
        raise ValueError(f"model {model.name!r} has no trace oracle")
    return model.oracle(lam)


def resonance_oracle(model: ModelDescriptor, region) -> ResonanceOracle:
    if model.resonance_oracle is None:
        raise ValueError(f"model {model.name!r} has no resonance oracle")
    return model.resonance_oracle(normalize_region(region))


def load_model(config: dict | str | Path) -> ModelDescriptor:
    """Build a model from ``{"model": "basic"|"cat"|"horseshoe", ...}`` or a JSON file path."""
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text())
    name = config.get("model")
    if name == "basic":
        return basic_example()
    if name == "cat":
        return cat_suspension(config.get("A", ((2, 1), (1, 1))))
    if name == "horseshoe":
        return horseshoe_suspension(config.get("lambda_u", 3.0), config.get("lambda_s", 0.25))
    raise ValueError(f"unknown model {name!r}; expected basic, cat or horseshoe")
