"""Pole location, contour residues and oracle verification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .models import PoleError, normalize_region, resonance_oracle
from .traces import continuation

SEED_FACTOR = 10.0
G_TOL = 1e-10
MAX_NEWTON = 50
DEDUP_TOL = 1e-6
POSITION_TOL = 1e-8
RESIDUE_TOL = 1e-6


class ResidueQuadratureError(ValueError):
    """Node doubling changed the contour integral by more than the tolerance."""


class VerificationError(AssertionError):
    def __init__(self, message: str, report: "VerificationReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ResonanceReport:
    position: complex
    residue: complex
    method: str = "grid+newton"
    position_error: float = 0.0
    residue_error: float = 0.0
    matched_oracle: Optional[tuple] = None

    def __post_init__(self):
        if self.method not in ("grid+newton", "lattice-oracle"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.position_error >= 0 and self.residue_error >= 0):
            raise ValueError("error estimates must be nonnegative")


def _safe_eval(f, lam: complex) -> complex:
    try:
        v = complex(f(lam))
    except (PoleError, ZeroDivisionError, OverflowError):
        return complex(math.inf, 0)
    return v if np.isfinite(v) else complex(math.inf, 0)


def _recip(f, lam: complex) -> complex:
    v = _safe_eval(f, lam)
    if not np.isfinite(v):
        return 0j
    return complex(math.inf, 0) if v == 0 else 1.0 / v


def _inside(lam: complex, region) -> bool:
    a, b, c, d = region
    return a <= lam.real <= b and c <= lam.imag <= d


def _newton(f, z: complex, region, max_drift: float):
    start = z
    h = 1e-6
    for _ in range(MAX_NEWTON):
        g = _recip(f, z)
        if abs(g) < G_TOL:
            return z
        dg = (_recip(f, z + h) - _recip(f, z - h)) / (2 * h)
        if dg == 0 or not np.isfinite(dg):
            return None
        z = z - g / dg
        if not _inside(z, region) or abs(z - start) > max_drift:
            return None
    # last check after the final step
    return z if abs(_recip(f, z)) < G_TOL else None


def _polish(f, z: complex) -> complex:
    # a couple of extra Newton steps past the |g| tolerance
    h = 1e-7
    for _ in range(3):
        g = _recip(f, z)
        if g == 0:
            return z
        dg = (_recip(f, z + h) - _recip(f, z - h)) / (2 * h)
        if dg == 0 or not np.isfinite(dg):
            return z
        step = g / dg
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def residue_at(f: Callable[[complex], complex], lam0: complex, radius: float = 0.1,
               nodes: int = 64, full_output: bool = False, tol: float = RESIDUE_TOL):
    """(1/2 pi i) times the contour integral of f on |lam - lam0| = radius.

    Trapezoid rule; the error estimate is the change on doubling ``nodes``.
    """
    if radius <= 0 or nodes < 4:
        raise ValueError("need radius > 0 and at least 4 nodes")

    def integral(n):
        theta = 2 * np.pi * np.arange(n) / n
        w = radius * np.exp(1j * theta)
        vals = np.array([complex(f(lam0 + wi)) for wi in w])
        return complex(np.mean(vals * w))

    coarse = integral(nodes)
    fine = integral(2 * nodes)
    err = abs(fine - coarse)
    if err > tol:
        raise ResidueQuadratureError(
            f"residue at {lam0} changed by {err:.2e} under node doubling"
        )
    return (fine, err) if full_output else fine


def contour_integral_rect(f, region, nodes_per_unit: int = 64) -> complex:
    """(1/2 pi i) times the integral of f around the boundary of a rectangle (Gauss-Legendre)."""
    a, b, c, d = normalize_region(region)
    corners = [complex(a, c), complex(b, c), complex(b, d), complex(a, d)]
    total = 0j
    for z0, z1 in zip(corners, corners[1:] + corners[:1]):
        L = abs(z1 - z0)
        n = max(16, int(math.ceil(L * nodes_per_unit)))
        x, w = np.polynomial.legendre.leggauss(n)
        pts = z0 + (z1 - z0) * (x + 1) / 2
        vals = np.array([complex(f(p)) for p in pts])
        total += np.sum(w * vals) * (z1 - z0) / 2
    return total / (2j * np.pi)


def _isolation_radius(z: complex, others: Sequence[complex], default: float) -> float:
    d = min((abs(z - o) for o in others if o != z), default=math.inf)
    return min(default, d / 2.5)


_NEIGHBOURS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]


def _local_max_seeds(a: np.ndarray) -> list[tuple[int, int]]:
    """Grid indices of strict local maxima of ``a`` above SEED_FACTOR times its median.

    Exact ties (common on grids symmetric about a real pole) go to the later index.
    """
    nx, ny = a.shape
    finite = a[np.isfinite(a)]
    thresh = SEED_FACTOR * (float(np.median(finite)) if finite.size else 0.0)
    padded = np.pad(a, 1, constant_values=-np.inf)
    is_max = np.ones(a.shape, dtype=bool)
    for di, dj in _NEIGHBOURS:
        nb = padded[1 + di:1 + di + nx, 1 + dj:1 + dj + ny]
        is_max &= (a >= nb) if (di, dj) < (0, 0) else (a > nb)
    # grid points sitting exactly on a pole read as inf
    is_max |= np.isinf(a)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(is_max & (a > thresh)))]


def _pole_indicator(vals: np.ndarray) -> np.ndarray:
    """|f - mean of its grid neighbours|: small where f is smooth, large next to a pole."""
    nx, ny = vals.shape
    padded = np.pad(vals, 1, constant_values=np.nan)
    total = np.zeros(vals.shape, dtype=complex)
    count = np.zeros(vals.shape)
    for di, dj in _NEIGHBOURS:
        nb = padded[1 + di:1 + di + nx, 1 + dj:1 + dj + ny]
        ok = ~np.isnan(nb)
        with np.errstate(invalid="ignore"):
            total[ok] += nb[ok]
        count += ok
    with np.errstate(invalid="ignore"):
        out = np.abs(vals - total / count)
    return np.where(np.isnan(out), np.inf, out)


def locate_resonances(f: Callable[[complex], complex], region, grid=(80, 80),
                      radius: float = 0.1, nodes: int = 64) -> list[ResonanceReport]:
    """Poles of ``f`` in the rectangle ``(re_min, re_max, im_min, im_max)``.

    Seeds are strict local maxima, above ten times the grid median, of |f|
    and of the neighbour-difference indicator; each is refined by Newton's
    method on 1/f and kept if it stays within two grid cells.
    """
    nx, ny = grid
    if nx < 8 or ny < 8:
        raise ValueError("grid must be at least 8x8")
    region = normalize_region(region)
    a, b, c, d = region
    xs = np.linspace(a, b, nx)
    ys = np.linspace(c, d, ny)
    dx, dy = xs[1] - xs[0], ys[1] - ys[0]
    vals = np.empty((nx, ny), dtype=complex)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            vals[i, j] = _safe_eval(f, complex(x, y))
    absf = np.abs(vals)
    seeds = set(_local_max_seeds(absf))
    seeds.update(_local_max_seeds(_pole_indicator(vals)))
    seeds = [complex(xs[i], ys[j]) for i, j in sorted(seeds)]

    max_drift = 2 * math.hypot(dx, dy)
    found: list[complex] = []
    for s in seeds:
        z = _newton(f, s, region, max_drift)
        if z is None:
            continue
        z = _polish(f, z)
        if not _inside(z, region):
            continue
        if all(abs(z - q) > DEDUP_TOL for q in found):
            found.append(z)

    found.sort(key=lambda z: (round(z.real, 9), round(z.imag, 9)))
    reports = []
    for z in found:
        r = _isolation_radius(z, found, radius)
        try:
            res, rerr = residue_at(f, z, r, nodes, full_output=True)
        except ResidueQuadratureError:
            res, rerr = residue_at(f, z, r, 4 * nodes, full_output=True, tol=math.inf)
        # Newton step size as the position error proxy
        g = _recip(f, z)
        h = 1e-7
        dg = (_recip(f, z + h) - _recip(f, z - h)) / (2 * h)
        perr = abs(g / dg) if dg != 0 and np.isfinite(dg) else math.inf
        reports.append(ResonanceReport(z, res, "grid+newton", float(perr), float(rerr)))
    return reports


@dataclass
class VerificationReport:
    model: str
    region: tuple
    found: list = field(default_factory=list)
    unmatched_found: list = field(default_factory=list)
    missed_oracle: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.unmatched_found or self.missed_oracle or self.failures)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "region": list(self.region),
            "passed": self.passed,
            "found": [_report_dict(r, self.model) for r in self.found],
            "unmatched_found": [[z.real, z.imag] for z in self.unmatched_found],
            "missed_oracle": [[z.real, z.imag, rank] for z, rank in self.missed_oracle],
            "failures": list(self.failures),
        }


def _report_dict(r: ResonanceReport, model: str) -> dict:
    return {
        "model": model,
        "lambda_re": r.position.real,
        "lambda_im": r.position.imag,
        "residue_re": r.residue.real,
        "residue_im": r.residue.imag,
        "method": r.method,
        "position_error": r.position_error,
        "residue_error": r.residue_error,
        "oracle_match": None if r.matched_oracle is None
        else [r.matched_oracle[0].real, r.matched_oracle[0].imag, r.matched_oracle[1]],
    }


def match_to_oracle(found: Sequence[ResonanceReport], poles: Sequence[tuple]):
    """Minimum-distance bipartite matching of found poles to (position, rank) oracle poles."""
    if not found or not poles:
        return [], list(range(len(found))), list(range(len(poles)))
    cost = np.array([[abs(r.position - p) for p, _ in poles] for r in found])
    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(i), int(j)) for i, j in zip(rows, cols)]
    un_f = sorted(set(range(len(found))) - set(rows.tolist()))
    un_o = sorted(set(range(len(poles))) - set(cols.tolist()))
    return pairs, un_f, un_o


def verify_against_oracle(model, region, grid=(80, 80), raise_on_failure: bool = True,
                          position_tol: float = POSITION_TOL,
                          residue_tol: float = RESIDUE_TOL) -> VerificationReport:
    """Locate poles of the model's continuation and check them against its oracle."""
    region = normalize_region(region)
    oracle = resonance_oracle(model, region)
    found = locate_resonances(continuation(model, pole_guard=0.0), region, grid)
    pairs, un_f, un_o = match_to_oracle(found, oracle.poles)
    report = VerificationReport(model.name, region)
    matched = {}
    for i, j in pairs:
        pos, rank = oracle.poles[j]
        r = found[i]
        dist = abs(r.position - pos)
        if dist >= position_tol:
            report.failures.append(f"pole {r.position} is {dist:.2e} from oracle {pos}")
            un_f.append(i)
            un_o.append(j)
            continue
        if abs(r.residue - rank) >= residue_tol:
            report.failures.append(f"residue {r.residue} at {pos} differs from rank {rank}")
        matched[i] = ResonanceReport(r.position, r.residue, r.method, dist,
                                     max(r.residue_error, abs(r.residue - rank)), (pos, rank))
    report.found = [matched.get(i, r) for i, r in enumerate(found)]
    report.unmatched_found = [found[i].position for i in sorted(set(un_f))]
    report.missed_oracle = [oracle.poles[j] for j in sorted(set(un_o))]
    if raise_on_failure and not report.passed:
        lines = report.failures + [f"unmatched found pole {z}" for z in report.unmatched_found] \
            + [f"missed oracle pole {p} (rank {k})" for p, k in report.missed_oracle]
        raise VerificationError("; ".join(lines), report)
    return report
