"""Time integration of the gradient flow  dx/dt = -E nu  of the discrete energy.

Three steppers share the same normal speed E (the normal density of
:func:`hiflow.energy.gradient_exact`): plain explicit Euler, Armijo
backtracking, and a semi-implicit scheme that treats the stiff
``2*beta*(-1)^(m+1) D^(2m+2)`` part implicitly through an FFT solve.
Curve shortening and the circle radius ODE serve as reference evolutions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DiagnosticsRecord, measure
from .energy import QUASI_UNIFORM_RATIO, EnergyReport, GradientField, check_weights, energy, energy_value, gradient_exact
from .errors import BlowupError, DegenerateCurveError, LinesearchFailure
from .geometry import CurveGeometry, DiscreteCurve, compute_geometry, resample_uniform

log = logging.getLogger(__name__)

INTEGRATORS = ("explicit", "linesearch", "semi_implicit")
ARMIJO_C = 1e-4
MAX_HALVINGS = 60
DT_GROWTH = 1.2
STATIONARY_RTOL = 4 * np.finfo(float).eps
BLOWUP_CEILING = 1e4


@dataclass(frozen=True)
class FlowConfig:
    m: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    integrator: str = "semi_implicit"
    dt_initial: float = 1e-3
    safety: float = 0.5
    remesh_every: int = 25
    N: int = 256
    t_max: float = 10.0
    sigma_tol: float = 1e-6
    max_steps: int = 100_000
    record_every: int = 1
    blowup_ceiling: float = BLOWUP_CEILING

    def __post_init__(self):
        check_weights(self.m, self.alpha, self.beta)
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")
        for name in ("dt_initial", "sigma_tol", "blowup_ceiling"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        for name in ("remesh_every", "N", "max_steps", "record_every"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")


@dataclass(frozen=True, eq=False)
class FlowState:
    curve: DiscreteCurve
    t: float = 0.0
    step_count: int = 0
    last_energy: EnergyReport | None = None
    dt_current: float = 1e-3
    gradient: GradientField | None = field(default=None, repr=False)


@dataclass
class Trajectory:
    records: list[DiagnosticsRecord] = field(default_factory=list)
    snapshots: list[tuple[int, float, DiscreteCurve]] = field(default_factory=list)
    termination_reason: str = ""
    final_state: FlowState | None = None
    energy_increase_events: int = 0
    accepted_steps: int = 0
    message: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


def initial_state(curve: DiscreteCurve, config: FlowConfig, t: float = 0.0) -> FlowState:
    return _refresh(FlowState(curve, t=t, dt_current=config.dt_initial), config)


def _refresh(state: FlowState, config: FlowConfig, geom: CurveGeometry | None = None) -> FlowState:
    if geom is None:
        geom = compute_geometry(state.curve)
    report = energy(geom, config.m, config.alpha, config.beta)
    grad = gradient_exact(state.curve, config.m, config.alpha, config.beta, geometry=geom)
    return replace(state, last_energy=report, gradient=grad)


def _gradient(state: FlowState, config: FlowConfig) -> GradientField:
    if state.gradient is not None:
        return state.gradient
    return gradient_exact(state.curve, config.m, config.alpha, config.beta)


def _guarded_curve(x: np.ndarray, ceiling: float) -> tuple[DiscreteCurve, CurveGeometry]:
    try:
        curve = DiscreteCurve(x)
        geom = compute_geometry(curve)
    except DegenerateCurveError as exc:
        raise BlowupError(f"curve degenerated: {exc}") from exc
    kmax = float(np.abs(geom.curvature).max())
    if not np.isfinite(kmax) or kmax > ceiling:
        raise BlowupError(f"max |k| = {kmax:.4g} exceeds ceiling {ceiling:g}")
    return curve, geom


def mean_spacing(curve: DiscreteCurve) -> float:
    return float(curve.edge_lengths().sum() / curve.N)


def explicit_dt(curve: DiscreteCurve, config: FlowConfig) -> float:
    """safety * ds^(2m+2) / (2^(2m+2) beta)."""
    p = 2 * config.m + 2
    return config.safety * mean_spacing(curve) ** p / (2.0**p * config.beta)


def semi_implicit_dt(curve: DiscreteCurve, config: FlowConfig) -> float:
    """safety * ds^2 / (2 * tension) with tension = alpha + beta * max |D^m nu|^2.

    The centered implicit operator has a null symbol at the grid Nyquist
    mode. There the discrete energy acts like a length term with pointwise
    tension alpha + beta |D^m nu|^2, which stays explicit and sets this
    bound.
    """
    w = compute_geometry(curve).normal_derivative(config.m)
    tension = config.alpha + config.beta * float(np.max(np.sum(w * w, axis=1)))
    return config.safety * mean_spacing(curve) ** 2 / (2.0 * tension)


def _advance(state: FlowState, config: FlowConfig, x_new: np.ndarray, dt: float, **extra) -> FlowState:
    curve, geom = _guarded_curve(x_new, config.blowup_ceiling)
    ratio = geom.grid_ratio()
    if ratio > QUASI_UNIFORM_RATIO:
        # grid distortion this fast between remeshes means the step was unstable
        raise BlowupError(f"edge length ratio {ratio:.4g} exceeds {QUASI_UNIFORM_RATIO} after one step")
    new = FlowState(curve, t=state.t + dt, step_count=state.step_count + 1,
                    dt_current=extra.pop("dt_current", state.dt_current))
    return _refresh(new, config, geom)


def step_explicit(state: FlowState, config: FlowConfig, dt: float | None = None) -> FlowState:
    """One forward Euler step x <- x - dt * E * nu."""
    g = _gradient(state, config)
    if dt is None:
        dt = explicit_dt(state.curve, config)
    x = state.curve.vertices - dt * g.normal_speed[:, None] * g.normals
    return _advance(state, config, x, dt)


def step_linesearch(state: FlowState, config: FlowConfig, dt_cap: float | None = None) -> FlowState:
    """Backtracking step along -E nu enforcing the Armijo condition
    F(new) <= F(old) - c * dt * sigma, with sigma = sum E^2 ds the squared
    L2(ds) norm of the normal speed.

    Halving stops once dt * sigma drops below the rounding level of F. The
    curve is then returned unchanged if sigma < config.sigma_tol (a critical
    point up to noise); otherwise LinesearchFailure is raised. A first trial
    already below that level also returns the curve unchanged.
    """
    g = _gradient(state, config)
    sigma = g.sigma()
    f0 = state.last_energy.total if state.last_energy is not None else energy_value(
        state.curve.vertices, config.m, config.alpha, config.beta)
    direction = -g.normal_speed[:, None] * g.normals
    dt = state.dt_current if dt_cap is None else min(state.dt_current, dt_cap)
    x0 = state.curve.vertices
    floor = STATIONARY_RTOL * max(abs(f0), 1.0)
    if dt * sigma <= floor:
        # the requested step cannot change F in floating point
        return _advance(state, config, x0.copy(), dt, dt_current=dt * DT_GROWTH)
    for _ in range(MAX_HALVINGS + 1):
        if dt * sigma <= floor:
            break
        trial = x0 + dt * direction
        try:
            f1 = energy_value(trial, config.m, config.alpha, config.beta)
        except DegenerateCurveError:
            f1 = math.inf
        if f1 <= f0 - ARMIJO_C * dt * sigma:
            return _advance(state, config, trial, dt, dt_current=dt * DT_GROWTH)
        dt *= 0.5
    if sigma < config.sigma_tol:
        # a critical point up to rounding noise in E: stay put
        return _advance(state, config, x0.copy(), dt, dt_current=dt)
    raise LinesearchFailure(f"no Armijo step within {MAX_HALVINGS} halvings (sigma={sigma:.3g}, dt={dt:.3g})")


def leading_symbol(N: int, spacing: float, m: int, beta: float) -> np.ndarray:
    """Eigenvalues 2*beta*(sin(theta)/ds)^(2m+2) of 2*beta*(-1)^(m+1) D^(2m+2)
    on the rfft frequencies theta = 2*pi*j/N."""
    theta = 2 * np.pi * np.arange(N // 2 + 1) / N
    return 2.0 * beta * (np.sin(theta) / spacing) ** (2 * m + 2)


def step_semi_implicit(state: FlowState, config: FlowConfig, dt: float | None = None) -> FlowState:
    """Semi-implicit step  (I + dt*A) x_new = x_old - dt*(E nu - A x_old)
    with A = 2 beta (-1)^(m+1) D^(2m+2) circulant on the uniform grid.

    Because A x_old cancels on both sides this is evaluated as
    x_new = x_old - dt * (I + dt*A)^(-1) (E nu), diagonalized by the FFT.
    """
    g = _gradient(state, config)
    if dt is None:
        dt = semi_implicit_dt(state.curve, config)
    x = state.curve.vertices
    N = state.curve.N
    if dt == 0.0:
        return _advance(state, config, x.copy(), 0.0)
    sym = leading_symbol(N, mean_spacing(state.curve), config.m, config.beta)
    rhs = np.fft.rfft(g.normal_speed[:, None] * g.normals, axis=0)
    update = np.fft.irfft(rhs / (1.0 + dt * sym)[:, None], n=N, axis=0)
    return _advance(state, config, x - dt * update, dt)


_STEPPERS = {
    "explicit": step_explicit,
    "semi_implicit": step_semi_implicit,
}


def remesh(curve: DiscreteCurve, N: int) -> DiscreteCurve:
    """Uniform resampling followed by recentring at the vertex centroid."""
    return resample_uniform(curve, N).recentred()


def _take_step(state: FlowState, config: FlowConfig, remaining: float) -> FlowState:
    if config.integrator == "linesearch":
        return step_linesearch(state, config, dt_cap=remaining)
    fixed = explicit_dt if config.integrator == "explicit" else semi_implicit_dt
    dt = min(fixed(state.curve, config), remaining)
    return _STEPPERS[config.integrator](state, config, dt)


def run_flow(initial: DiscreteCurve, config: FlowConfig, snapshot_every: int = 0) -> Trajectory:
    """Evolve ``initial`` until sigma < sigma_tol, t_max, max_steps or blow-up.

    The initial curve is remeshed to ``config.N`` vertices first. Diagnostics
    are recorded at step 0, every ``record_every`` steps and at termination;
    snapshots (in memory) every ``snapshot_every`` steps when positive.
    """
    traj = Trajectory()
    if config.t_max <= 0:
        traj.termination_reason = "t_max"
        return traj
    state = initial_state(remesh(initial, config.N), config)
    traj.records.append(measure(state, config))
    if snapshot_every:
        traj.snapshots.append((0, state.t, state.curve))
    t_eps = 1e-12 * max(1.0, config.t_max)
    reason = ""
    while not reason:
        if state.gradient.sigma() < config.sigma_tol:
            reason = "converged"
            break
        if state.t >= config.t_max - t_eps:
            reason = "t_max"
            break
        if state.step_count >= config.max_steps:
            reason = "max_steps"
            break
        try:
            new = _take_step(state, config, config.t_max - state.t)
        except BlowupError as exc:
            reason, traj.message = "blowup_guard", str(exc)
            break
        except LinesearchFailure as exc:
            reason, traj.message = "linesearch_failure", str(exc)
            break
        traj.accepted_steps += 1
        if new.last_energy.total > state.last_energy.total:
            traj.energy_increase_events += 1
        state = new
        if state.step_count % config.remesh_every == 0:
            state = _refresh(replace(state, curve=remesh(state.curve, config.N)), config)
        if state.step_count % config.record_every == 0:
            traj.records.append(measure(state, config))
        if snapshot_every and state.step_count % snapshot_every == 0:
            traj.snapshots.append((state.step_count, state.t, state.curve))
    if traj.records[-1].t != state.t:
        traj.records.append(measure(state, config))
    traj.termination_reason = reason
    traj.final_state = state
    log.info("flow stopped: %s after %d steps at t=%.6g", reason, state.step_count, state.t)
    return traj


# ---------------------------------------------------------------------------
# reference evolutions


def curve_shortening_dt(curve: DiscreteCurve, safety: float = 0.5) -> float:
    h = float(curve.edge_lengths().min())
    return safety * h * h / 2.0


def curve_shortening_step(state: FlowState, dt: float | None = None, safety: float = 0.5,
                          ceiling: float = BLOWUP_CEILING) -> FlowState:
    """x <- x + dt * k * nu (the normal is inward, so length decreases)."""
    geom = compute_geometry(state.curve)
    if dt is None:
        dt = curve_shortening_dt(state.curve, safety)
    x = state.curve.vertices + dt * geom.curvature[:, None] * geom.normals
    curve, _ = _guarded_curve(x, ceiling)
    return FlowState(curve, t=state.t + dt, step_count=state.step_count + 1, dt_current=dt)


def run_curve_shortening(initial: DiscreteCurve, t_end: float, N: int | None = None,
                         safety: float = 0.5, remesh_every: int = 25,
                         ceiling: float = BLOWUP_CEILING, callback=None) -> FlowState:
    """Integrate curve shortening to ``t_end``; raises BlowupError on the way
    to a singularity. ``callback(state)`` is called after every step."""
    N = initial.N if N is None else N
    state = FlowState(remesh(initial, N))
    t_eps = 1e-12 * max(1.0, t_end)
    while state.t < t_end - t_eps:
        dt = min(curve_shortening_dt(state.curve, safety), t_end - state.t)
        state = curve_shortening_step(state, dt, ceiling=ceiling)
        if state.step_count % remesh_every == 0:
            state = replace(state, curve=remesh(state.curve, N))
        if callback is not None:
            callback(state)
    return state


def critical_radius(m: int, alpha: float = 1.0, beta: float = 1.0) -> float:
    return (beta * (2 * m - 1) / alpha) ** (1.0 / (2 * m))


def circle_radius_ode(r0: float, m: int, alpha: float, beta: float, t_end: float,
                      dt_ode: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Radius of a circle evolving by the flow: dr/dt = (beta(2m-1) r^(-2m) - alpha) / r.

    Classical RK4 with a shortened final step to land on ``t_end``.
    Returns (times, radii).
    """
    check_weights(m, alpha, beta)
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    if t_end < 0 or not dt_ode > 0:
        raise ValueError("need t_end >= 0 and dt_ode > 0")

    def f(r):
        return (beta * (2 * m - 1) * r ** (-2 * m) - alpha) / r

    n = int(math.ceil(t_end / dt_ode - 1e-9))
    times = [0.0]
    radii = [float(r0)]
    t, r = 0.0, float(r0)
    for _ in range(n):
        h = min(dt_ode, t_end - t)
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += h
        # both signs in f push r toward the positive fixed point
        assert r > 0, "radius left (0, inf)"
        times.append(t)
        radii.append(r)
    return np.array(times), np.array(radii)
