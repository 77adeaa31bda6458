"""Direct dynamics: flows, escape times, the transport resolvent and assumption checks.

The resolvent is computed from its integral form

    u(x) = int_0^T e^{-lam t} f(phi^{-t}(x)) dt

with Gauss-Legendre panels between trajectory events.
"""
from __future__ import annotations

import cmath
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

ESCAPE_TOL = 1e-13
DEFAULT_QUAD_NODES = 20
PANEL_LENGTH = 0.5


# -- flows -------------------------------------------------------------------

def rk4_flow(vector_field: Callable, x, t: float, dt: float = 1e-3) -> np.ndarray:
    """Classical fourth-order Runge-Kutta integration of x' = X(x)."""
    y = np.asarray(x, dtype=float).copy()
    n = max(1, int(math.ceil(abs(t) / dt)))
    h = t / n
    for _ in range(n):
        k1 = vector_field(y)
        k2 = vector_field(y + 0.5 * h * k1)
        k3 = vector_field(y + 0.5 * h * k2)
        k4 = vector_field(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def flow(model, x, t: float) -> np.ndarray:
    """phi^t(x); exact for the built-in models, RK4 otherwise."""
    x = np.asarray(x, dtype=float)
    if t == 0:
        return x.copy()
    if model.flow is not None:
        return model.flow(x, t)
    return rk4_flow(model.vector_field, x, t)


# -- escape times --------------------------------------------------------------

@dataclass(frozen=True)
class EscapeResult:
    forward_time: float            # +inf when trapped in forward time
    backward_time: float           # -inf when trapped in backward time
    exit_point: Optional[np.ndarray] = None
    entry_point: Optional[np.ndarray] = None

    @property
    def forward_trapped(self) -> bool:
        return math.isinf(self.forward_time)

    @property
    def backward_trapped(self) -> bool:
        return math.isinf(self.backward_time)


def _check_inside(model, x):
    if model.has_boundary and model.rho(x) < 0:
        raise ValueError(f"point {x} lies outside the domain")


def _basic_escape_closed(x) -> EscapeResult:
    # e^{2t} solves a u^2 - u + b = 0 (a = x1^2, b = x2^2); the discriminant is
    # positive since a + b <= 1. log|x1| instead of log(x1^2) keeps tiny x1 exact
    disc = math.sqrt(max(0.0, 1.0 - (2.0 * x[0] * x[1]) ** 2))
    half = 0.5 * (math.log1p(disc) - math.log(2.0))
    tf = half - math.log(abs(x[0])) if x[0] != 0 else math.inf
    tb = -(half - math.log(abs(x[1]))) if x[1] != 0 else -math.inf
    from .models import _basic_flow
    exit_pt = _basic_flow(x, tf) if math.isfinite(tf) else None
    entry_pt = _basic_flow(x, tb) if math.isfinite(tb) else None
    return EscapeResult(tf, tb, exit_pt, entry_pt)


def _escape_continuous(model, x, direction: int, T_max: float, dt: float):
    rho = lambda t: model.rho(flow(model, x, direction * t))
    t0, r0 = 0.0, rho(0.0)
    while t0 < T_max:
        t1 = min(t0 + dt, T_max)
        r1 = rho(t1)
        if r1 < 0:
            if r0 <= 0:
                return t0
            return brentq(rho, t0, t1, xtol=ESCAPE_TOL, rtol=4 * np.finfo(float).eps)
        t0, r0 = t1, r1
    return math.inf


def _escape_suspension(model, x, direction: int, T_max: float):
    """Escapes of a suspension happen at roof jumps; returns (time, point after the jump)."""
    s = float(x[2])
    k = 0
    while True:
        # forward jumps at t = k + 1 - s, backward jumps just after t = k + s
        t = (k + 1 - s) if direction > 0 else (k + s)
        if t > T_max:
            return math.inf, None
        # sample half-way to the next jump to stay clear of the floor() boundary
        pt = flow(model, x, direction * (t + 0.5))
        pt[2] -= direction * 0.5
        if model.rho(pt) < 0:
            return t, pt
        k += 1


def escape_time(model, x, method: str = "auto", T_max: float = 60.0, dt: float = 0.05) -> EscapeResult:
    """Forward and backward escape times from the domain.

    ``method`` is "closed" (basic example only), "bisect" (bracketing then
    Brent refinement to ~1e-13) or "auto".
    """
    x = np.asarray(x, dtype=float)
    _check_inside(model, x)
    if not model.has_boundary:
        return EscapeResult(math.inf, -math.inf)
    if method == "auto":
        method = "closed" if model.name == "basic" else "bisect"
    if method == "closed":
        if model.name != "basic":
            raise ValueError("closed-form escape times exist only for the basic example")
        return _basic_escape_closed(x)
    if method != "bisect":
        raise ValueError(f"unknown method {method!r}")
    if model.continuous_time:
        tf = _escape_continuous(model, x, +1, T_max, dt)
        tb = _escape_continuous(model, x, -1, T_max, dt)
        return EscapeResult(
            tf, -tb,
            flow(model, x, tf) if math.isfinite(tf) else None,
            flow(model, x, -tb) if math.isfinite(tb) else None,
        )
    tf, pf = _escape_suspension(model, x, +1, T_max)
    tb, pb = _escape_suspension(model, x, -1, T_max)
    return EscapeResult(tf, -tb, pf, pb)


# -- test functions ------------------------------------------------------------

@dataclass(frozen=True)
class BumpFunction:
    """A smooth compactly supported function with its sup norm and X-derivative."""

    name: str
    func: Callable[[np.ndarray], complex]
    support_radius: float
    sup_norm: float
    lie_derivative: Optional[Callable[[np.ndarray], complex]] = None

    def __call__(self, x) -> complex:
        return self.func(np.asarray(x, dtype=float))


def _psi(s):
    return math.exp(-1.0 / s) if s > 0 else 0.0


def _dpsi(s):
    return math.exp(-1.0 / s) / (s * s) if s > 0 else 0.0


def _smooth_step(s):
    # 0 for s <= 0, 1 for s >= 1
    a, b = _psi(s), _psi(1.0 - s)
    return a / (a + b)


def _smooth_step_deriv(s):
    a, b = _psi(s), _psi(1.0 - s)
    da, db = _dpsi(s), -_dpsi(1.0 - s)
    return (da * (a + b) - a * (da + db)) / (a + b) ** 2


def exp_bump(R: float = 0.8, k: int = 0, amplitude: float = 0.5) -> BumpFunction:
    """exp(1 - 1/(1 - r^2/R^2)) * (1 + amplitude cos(x3)) for the basic example, times e^{i k x3}."""

    def radial(x):
        s = (x[0] ** 2 + x[1] ** 2) / (R * R)
        if s >= 1:
            return 0.0, 0.0
        g = math.exp(1.0 - 1.0 / (1.0 - s))
        return g, -g / (1.0 - s) ** 2

    def angular(x3):
        return (1.0 + amplitude * math.cos(x3)) * cmath.exp(1j * k * x3)

    def d_angular(x3):
        return (-amplitude * math.sin(x3) + 1j * k * (1.0 + amplitude * math.cos(x3))) * cmath.exp(1j * k * x3)

    def func(x):
        g, _ = radial(x)
        return g * angular(x[2]) if g else 0j

    def lie(x):
        # X = (x1, -x2, 1)
        g, dg = radial(x)
        if not g:
            return 0j
        Xs = 2.0 * (x[0] ** 2 - x[1] ** 2) / (R * R)
        return dg * Xs * angular(x[2]) + g * d_angular(x[2])

    return BumpFunction(f"bump_k{k}" if k else "bump", func, R, 1.0 + abs(amplitude), lie)


def plateau(r0: float = 0.3, R: float = 0.8, k: int = 0) -> BumpFunction:
    """Equal to e^{i k x3} for r <= r0 and vanishing for r >= R."""

    def func(x):
        r = math.hypot(x[0], x[1])
        return _smooth_step((R - r) / (R - r0)) * cmath.exp(1j * k * x[2])

    def lie(x):
        r = math.hypot(x[0], x[1])
        s = (R - r) / (R - r0)
        e = cmath.exp(1j * k * x[2])
        chi = _smooth_step(s)
        if r == 0 or s >= 1:
            return 1j * k * chi * e
        Xr = (x[0] ** 2 - x[1] ** 2) / r
        return -_smooth_step_deriv(s) * Xr / (R - r0) * e + 1j * k * chi * e

    return BumpFunction(f"plateau_k{k}" if k else "plateau", func, R, 1.0, lie)


BUILTIN_BUMPS: dict[str, Callable[[], BumpFunction]] = {
    "bump": exp_bump,
    "bump_k1": lambda: exp_bump(k=1),
    "plateau": plateau,
    "plateau_k1": lambda: plateau(k=1),
}


def builtin_bump(name: str) -> BumpFunction:
    try:
        return BUILTIN_BUMPS[name]()
    except KeyError:
        raise ValueError(f"unknown bump {name!r}; choose from {sorted(BUILTIN_BUMPS)}") from None


# -- resolvent -----------------------------------------------------------------

@dataclass(frozen=True)
class ResolventValue:
    value: complex
    error: float
    T_used: float
    truncated: bool


def _basic_support_window(x, R: float):
    """Backward times [t_in, t_out] during which r(phi^{-t}x) <= R (r^2 is convex in t)."""
    a, b = x[0] ** 2, x[1] ** 2  # r^2(t) = a e^{-2t} + b e^{2t}
    R2 = R * R
    if a == 0 and b == 0:
        return 0.0, math.inf
    if b == 0:
        # r decreases forever
        return (0.0 if a <= R2 else 0.5 * math.log(a / R2)), math.inf
    if a == 0:
        return (0.0, 0.5 * math.log(R2 / b)) if b <= R2 else None
    # roots of b v^2 - R2 v + a = 0 with v = e^{2t}
    disc = R2 * R2 - 4 * a * b
    if disc <= 0:
        return None
    sq = math.sqrt(disc)
    v_hi = (R2 + sq) / (2 * b)
    v_lo = 2 * a / (R2 + sq)
    t_lo, t_hi = 0.5 * math.log(v_lo), 0.5 * math.log(v_hi)
    if t_hi <= 0:
        return None
    return max(t_lo, 0.0), t_hi


def _panel_breaks(t0: float, t1: float, lam: complex, events: Sequence[float] = ()) -> np.ndarray:
    L = min(PANEL_LENGTH, 2.0 / max(abs(lam), 1e-12), math.pi / max(abs(lam.imag), 1e-12))
    pts = {t0, t1}
    pts.update(e for e in events if t0 < e < t1)
    base = sorted(pts)
    out = []
    for a, b in zip(base, base[1:]):
        n = max(1, int(math.ceil((b - a) / L)))
        out.extend(np.linspace(a, b, n + 1)[:-1].tolist())
    out.append(t1)
    return np.array(out)


def resolvent_apply(model, f: Callable, lam: complex, x, nodes: int = DEFAULT_QUAD_NODES,
                    T_cut: Optional[float] = None, sup_f: Optional[float] = None,
                    full_output: bool = False):
    """u(x) = int_0^T e^{-lam t} f(phi^{-t} x) dt, the resolvent (X + lam)^{-1} f at x.

    T is the backward time at which the trajectory leaves supp f (or the
    domain), capped at ``T_cut`` (default 50 / Re lam). When the cap is hit
    inside the support, the tail bound sup|f| e^{-Re lam T_cut} / Re lam is
    reported as the error.
    """
    lam = complex(lam)
    x = np.asarray(x, dtype=float)
    if T_cut is None:
        T_cut = 50.0 / lam.real if lam.real > 0 else math.inf
    window: Optional[tuple] = (0.0, math.inf)
    events: list[float] = []
    R = getattr(f, "support_radius", None)
    if model.name == "basic" and R is not None:
        window = _basic_support_window(x, R)
    elif model.has_boundary:
        esc = escape_time(model, x) if model.rho(x) >= 0 else None
        window = None if esc is None else (0.0, -esc.backward_time)
    if not model.continuous_time:
        # roof jumps of the suspension, backward in time
        s = float(x[2])
        events = [s + k for k in range(0, int(math.ceil(min(T_cut, 1e6))) + 2)]
    if window is None:
        res = ResolventValue(0j, 0.0, 0.0, False)
        return res if full_output else res.value
    t0, t1 = window
    truncated = t1 > T_cut or math.isinf(t1)
    if truncated and not lam.real > 0:
        raise ValueError("Re lam <= 0 with a trapped backward trajectory: the integral diverges")
    t1 = min(t1, T_cut)
    if t1 <= t0:
        res = ResolventValue(0j, 0.0, t1, False)
        return res if full_output else res.value
    gx, gw = np.polynomial.legendre.leggauss(nodes)
    breaks = _panel_breaks(t0, t1, lam, events)
    total = 0j
    for a, b in zip(breaks, breaks[1:]):
        half, mid = (b - a) / 2, (a + b) / 2
        for xi, wi in zip(gx, gw):
            t = mid + half * xi
            total += wi * half * cmath.exp(-lam * t) * complex(f(flow(model, x, -t)))
    err = 0.0
    if truncated:
        sup = sup_f if sup_f is not None else getattr(f, "sup_norm", None)
        err = math.inf if sup is None else sup * math.exp(-lam.real * T_cut) / lam.real
    res = ResolventValue(total, err, t1, truncated)
    return res if full_output else res.value


def default_residual_points(model, h: float) -> np.ndarray:
    """Interior sample points for the basic example, kept off Gamma_+ = {x2 = 0}.

    u is only finitely smooth across Gamma_+ when Re lam is small, so
    difference quotients there do not show their nominal order.
    """
    if model.name != "basic":
        raise ValueError("default residual points are defined for the basic example only")
    pts = [(x1, x2, x3)
           for x1 in np.linspace(-0.5, 0.5, 5)
           for x2 in (-0.5, -0.3, 0.3, 0.5)
           for x3 in (0.0, 2.0)]
    return np.array([p for p in pts if 1 - p[0] ** 2 - p[1] ** 2 > (2 * h) ** 2 + 4 * h])


def pde_residual(model, lam: complex, f: Callable, h: float, points=None,
                 u: Optional[Callable] = None, nodes: int = DEFAULT_QUAD_NODES) -> float:
    """max |X u + lam u - f| over sample points, X u by central differences of step h."""
    lam = complex(lam)
    if u is None:
        u = lambda y: resolvent_apply(model, f, lam, y, nodes=nodes)
    pts = default_residual_points(model, h) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    worst = 0.0
    for x in pts:
        Xv = model.vector_field(x)
        Xu = 0j
        for i in range(len(x)):
            if Xv[i] == 0:
                continue
            e = np.zeros(len(x))
            e[i] = h
            Xu += Xv[i] * (u(x + e) - u(x - e)) / (2 * h)
        worst = max(worst, abs(Xu + lam * u(x) - complex(f(x))))
    return worst


# -- convexity -----------------------------------------------------------------

@dataclass
class ConvexityReport:
    passed: Optional[bool]  # None when the check does not apply
    applicable: bool
    resolution: int
    glancing_points: list = field(default_factory=list)
    max_second_derivative: float = -math.inf
    margin: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "check": "convexity",
            "passed": self.passed,
            "applicable": self.applicable,
            "resolution": self.resolution,
            "glancing_count": len(self.glancing_points),
            "max_X2rho": self.max_second_derivative,
            "margin": self.margin,
            "note": self.note,
        }


def _lie_derivatives(model, x):
    X = model.vector_field(x)
    g = model.rho_grad(x)
    H = model.rho_hess(x)
    DX = model.vector_field_jacobian(x)
    return float(g @ X), float(X @ H @ X + g @ (DX @ X))


def degenerate_field(model):
    """Copy of ``model`` with X = d/dx3, for which every boundary point is glancing."""
    return dataclasses.replace(
        model,
        name=model.name + "-degenerate",
        vector_field=lambda x: np.array([0.0, 0.0, 1.0]),
        vector_field_jacobian=lambda x: np.zeros((3, 3)),
        flow=lambda x, t: np.array([x[0], x[1], (x[2] + t) % (2 * math.pi)]),
        oracle=None,
        resonance_oracle=None,
    )


def check_convexity(model, resolution: int = 100, margin: float = 1e-9) -> ConvexityReport:
    """Sample the glancing set {rho = 0, X rho ~ 0} and require X^2 rho < -margin there.

    The boundary is the torus {x1^2 + x2^2 = 1}; sign changes of X rho
    along the boundary circle are refined by Brent's method.
    """
    if not model.has_boundary:
        return ConvexityReport(True, False, resolution, note="no boundary")
    if not model.continuous_time or model.rho_grad is None or model.rho_hess is None:
        return ConvexityReport(None, False, resolution,
                               note="needs a smooth boundary and exact derivatives of rho")
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    thetas = np.linspace(0, 2 * math.pi, resolution, endpoint=False)
    x3s = np.linspace(0, 2 * math.pi, resolution, endpoint=False)
    point = lambda th, x3: np.array([math.cos(th), math.sin(th), x3])
    glancing = []
    for x3 in x3s:
        Xr = np.array([_lie_derivatives(model, point(th, x3))[0] for th in thetas])
        scale = max(float(np.max(np.abs(Xr))), 1.0)
        tol = scale * 2 * math.pi / resolution
        if np.all(np.abs(Xr) <= 1e-14 * scale):
            glancing.extend((th, x3) for th in thetas)
            continue
        zero = 1e-12 * scale
        for i, th in enumerate(thetas):
            j = (i + 1) % resolution
            if abs(Xr[i]) <= zero:
                glancing.append((th, x3))
            elif abs(Xr[j]) > zero and Xr[i] * Xr[j] < 0:
                th1 = th + 2 * math.pi / resolution
                root = brentq(lambda s: _lie_derivatives(model, point(s, x3))[0], th, th1, xtol=1e-14)
                glancing.append((root, x3))
            elif abs(Xr[i]) < tol and all(abs(Xr[i]) <= abs(Xr[k]) for k in ((i - 1) % resolution, j)):
                # tangential touch without a sign change
                glancing.append((th, x3))
    if not glancing:
        return ConvexityReport(True, True, resolution, note="no glancing points")
    second = [_lie_derivatives(model, point(th, x3))[1] for th, x3 in glancing]
    worst = max(second)
    pts = [point(th, x3).tolist() for th, x3 in glancing]
    return ConvexityReport(worst < -margin, True, resolution, pts, worst, margin)


# -- cones ---------------------------------------------------------------------

@dataclass
class ConeCertificate:
    unstable_axis: np.ndarray
    stable_axis: np.ndarray
    aperture: float
    t0: float
    required_factor: float
    min_expansion: float
    axis_expansions: tuple
    inclusion_margin: float
    sample_count: int
    passed: bool
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "check": "cones",
            "passed": self.passed,
            "aperture": self.aperture,
            "t0": self.t0,
            "required_factor": self.required_factor,
            "min_expansion": self.min_expansion,
            "axis_expansions": list(self.axis_expansions),
            "inclusion_margin": self.inclusion_margin,
            "sample_count": self.sample_count,
            "failures": list(self.failures),
        }


def _line_angle(u, a) -> float:
    c = abs(float(u @ a)) / (np.linalg.norm(u) * np.linalg.norm(a))
    return math.acos(min(1.0, c))


def _expanding_axis(B: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eig(B)
    i = int(np.argmax(np.abs(w)))
    v = np.real(V[:, i])
    return v / np.linalg.norm(v)


def _cone_min_expansion(B: np.ndarray, axis: np.ndarray, aperture: float) -> float:
    """min |B xi| over unit xi within angle ``aperture`` of ``axis`` (exact)."""
    perp = np.array([-axis[1], axis[0]])
    xi = lambda th: math.cos(th) * axis + math.sin(th) * perp
    cands = [-aperture, 0.0, aperture]
    _, V = np.linalg.eigh(B.T @ B)
    for k in range(2):
        v = V[:, k]
        th = math.atan2(float(v @ perp), float(v @ axis))
        for t in (th, th - math.pi, th + math.pi):
            if -aperture <= t <= aperture:
                cands.append(t)
    return min(float(np.linalg.norm(B @ xi(t))) for t in cands)


def _image_aperture(B: np.ndarray, axis: np.ndarray, aperture: float) -> float:
    perp = np.array([-axis[1], axis[0]])
    ends = [math.cos(s * aperture) * axis + math.sin(s * aperture) * perp for s in (-1, 1)]
    return max(_line_angle(B @ e, axis) for e in ends)


def certify_cones(model, aperture: float = math.radians(20), t0: float = 1.0,
                  required_factor: float = 4.0, samples: int = 5,
                  axes: Optional[tuple] = None) -> ConeCertificate:
    """Check dual-cone invariance and covector expansion for t in [t0, 2 t0].

    The unstable-dual cone is pushed forward by (dphi^t)^{-T}, the
    stable-dual cone backward. The differentials of the built-in models are
    constant, so one base point suffices; suspensions use integer times.
    """
    if not 0 <= aperture < math.pi / 2:
        raise ValueError("aperture must lie in [0, pi/2)")
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    if model.continuous_time:
        times = np.linspace(t0, 2 * t0, max(2, samples))
    else:
        times = np.arange(math.ceil(t0 - 1e-12), math.floor(2 * t0 + 1e-12) + 1, dtype=float)
        if times.size == 0:
            raise ValueError("no integer times in [t0, 2 t0] for a suspension")
    if axes is None:
        u_axis = _expanding_axis(model.covector_map(times[0]))
        s_axis = _expanding_axis(model.covector_map(-times[0]))
    else:
        u_axis, s_axis = (np.asarray(a, dtype=float) / np.linalg.norm(a) for a in axes)
    min_exp = math.inf
    margin = math.inf
    failures = []
    for t in times:
        for sign, axis, label in ((1, u_axis, "unstable"), (-1, s_axis, "stable")):
            B = model.covector_map(sign * t)
            e = _cone_min_expansion(B, axis, aperture)
            min_exp = min(min_exp, e)
            img = _image_aperture(B, axis, aperture)
            m = aperture - img if aperture > 0 else (0.0 if img < 1e-12 else -img)
            margin = min(margin, m)
            if e < required_factor:
                failures.append(f"{label} cone at t={sign * t:g}: expansion {e:.6g} < {required_factor:g}")
            if aperture > 0 and not m > 0:
                failures.append(f"{label} cone at t={sign * t:g}: image aperture {img:.6g} not inside {aperture:.6g}")
            elif aperture == 0 and img > 1e-12:
                failures.append(f"{label} axis at t={sign * t:g} is not invariant")
    Bu, Bs = model.covector_map(times[0]), model.covector_map(-times[0])
    axis_exp = (float(np.linalg.norm(Bu @ u_axis)), float(np.linalg.norm(Bs @ s_axis)))
    return ConeCertificate(u_axis, s_axis, aperture, t0, required_factor, min_exp, axis_exp,
                           margin, len(times) * 2, not failures, failures)


# -- trapped sets --------------------------------------------------------------

@dataclass
class TrappedMasks:
    x1: np.ndarray
    x2: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    K: np.ndarray
    T: float

    def points(self, mask: np.ndarray) -> np.ndarray:
        i, j = np.nonzero(mask)
        return np.column_stack([self.x1[i], self.x2[j]])


def _default_grid(model, n: int):
    if model.name == "basic":
        m = (n - 1) // 2
        g = np.arange(-m, m + 1) / m
        return g, g
    g = (np.arange(n) + 0.5) / n
    return g, g


def trapped_set_approx(model, grid: int = 201, T: float = 10.0, x3: float = 0.0) -> TrappedMasks:
    """Grid masks of points whose backward (Gamma_+) or forward (Gamma_-) escape exceeds T.

    For the basic example the grid is k/m, symmetric about 0, so the exact
    sets {x2 = 0} and {x1 = 0} are grid lines.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    n = int(grid)
    x1, x2 = _default_grid(model, n)
    gp = np.zeros((len(x1), len(x2)), dtype=bool)
    gm = np.zeros_like(gp)
    for i, a in enumerate(x1):
        for j, b in enumerate(x2):
            x = np.array([a, b, x3])
            if model.has_boundary and model.rho(x) < 0:
                continue
            esc = escape_time(model, x, T_max=T + 1.0)
            gp[i, j] = -esc.backward_time > T
            gm[i, j] = esc.forward_time > T
    return TrappedMasks(x1, x2, gp, gm, gp & gm, T)


def exact_trapped_sets(model, masks: TrappedMasks) -> dict:
    """The exact Gamma_+, Gamma_- and K of the basic example sampled on the mask grid."""
    if model.name != "basic":
        raise ValueError("exact trapped sets are tabulated for the basic example only")
    X1, X2 = np.meshgrid(masks.x1, masks.x2, indexing="ij")
    inside = X1 ** 2 + X2 ** 2 <= 1
    return {
        "gamma_plus": inside & (X2 == 0),
        "gamma_minus": inside & (X1 == 0),
        "K": (X1 == 0) & (X2 == 0),
    }


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    if len(A) == 0 and len(B) == 0:
        return 0.0
    if len(A) == 0 or len(B) == 0:
        return math.inf
    return max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])


def mask_distances(model, masks: TrappedMasks) -> dict:
    """Hausdorff distance of each mask to the exact set, in the plane of the grid."""
    exact = exact_trapped_sets(model, masks)
    return {
        key: hausdorff(masks.points(getattr(masks, key)), masks.points(exact[key]))
        for key in ("gamma_plus", "gamma_minus", "K")
    }
