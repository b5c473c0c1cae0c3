"""Discrete energies  F = alpha * L + beta * sum |D^m nu|^2 ds  and their gradients.

``D`` is the centered difference ``(f[i+1] - f[i-1]) / |x[i+1] - x[i-1]|`` and
``ds`` the dual length at each vertex. On an equal-chord grid this is the
standard uniform stencil up to O(ds^2); on circles it is exact, so circles
evolve by exactly the radius ODE and the critical radius is exact. The formulas are defined for any polygon, which the
finite-difference oracle and the time steppers rely on, but accuracy is only
claimed on (nearly) uniform grids; the public functions refuse grids whose
edge ratio exceeds :data:`QUASI_UNIFORM_RATIO`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUniformGridError
from .geometry import CurveGeometry, DiscreteCurve, compute_geometry, nxt, periodic_derivative, prv

QUASI_UNIFORM_RATIO = 1.5
FD_STEP = 1e-6


@dataclass(frozen=True)
class EnergyReport:
    order_m: int
    alpha: float
    beta: float
    length_term: float
    derivative_term: float
    total: float

    @property
    def length(self) -> float:
        return self.length_term / self.alpha

    @property
    def derivative_integral(self) -> float:
        """Unweighted sum |D^m nu|^2 ds."""
        return self.derivative_term / self.beta


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-vertex dF/dx and its normal density E = <dF/dx, nu> / ds."""

    gradient: np.ndarray
    normal_speed: np.ndarray
    normals: np.ndarray
    dual_lengths: np.ndarray

    def sigma(self) -> float:
        """Dissipation rate sum E^2 ds."""
        return float(np.sum(self.normal_speed**2 * self.dual_lengths))


def check_weights(m: int, alpha: float, beta: float) -> None:
    if int(m) != m or m < 1:
        raise ValueError(f"order m must be an integer >= 1, got {m!r}")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    if not beta > 0:
        raise ValueError("beta must be > 0")


def _require_quasi_uniform(edge_lengths: np.ndarray) -> None:
    ratio = edge_lengths.max() / edge_lengths.min()
    if ratio > QUASI_UNIFORM_RATIO:
        raise NonUniformGridError(
            f"edge length ratio {ratio:.4g} exceeds {QUASI_UNIFORM_RATIO}; call resample_uniform first")


def energy_parts(geometry: CurveGeometry, m: int) -> tuple[float, float]:
    """Unweighted (L, D) = (sum ds, sum |D^m nu|^2 ds), no grid check."""
    w = geometry.normal_derivative(m)
    D = float(np.sum(np.sum(w * w, axis=1) * geometry.dual_lengths))
    return geometry.total_length, D


def energy(geometry: CurveGeometry, m: int = 1, alpha: float = 1.0, beta: float = 1.0) -> EnergyReport:
    check_weights(m, alpha, beta)
    _require_quasi_uniform(geometry.edge_lengths)
    L, D = energy_parts(geometry, m)
    length_term, derivative_term = alpha * L, beta * D
    return EnergyReport(int(m), float(alpha), float(beta), length_term, derivative_term,
                        length_term + derivative_term)


def energy_value(vertices: np.ndarray, m: int, alpha: float, beta: float) -> float:
    """Total discrete energy of a raw vertex array (no validation)."""
    L, D = energy_parts(compute_geometry(DiscreteCurve(vertices)), m)
    return alpha * L + beta * D


def _gradient_field(x: np.ndarray, grad: np.ndarray, geom: CurveGeometry | None = None) -> GradientField:
    if geom is None:
        geom = compute_geometry(DiscreteCurve(x))
    speed = np.sum(grad * geom.normals, axis=1) / geom.dual_lengths
    return GradientField(grad, speed, geom.normals, geom.dual_lengths)


def _reverse_gradient(x: np.ndarray, m: int, alpha: float, beta: float) -> tuple[float, np.ndarray]:
    # forward sweep, keeping the intermediates
    e = nxt(x) - x
    ell = np.sqrt(np.sum(e * e, axis=1))
    u = e / ell[:, None]
    dual = 0.5 * (ell + prv(ell))
    c = nxt(x) - prv(x)
    span = np.sqrt(np.sum(c * c, axis=1))
    t = c / span[:, None]
    w = [np.column_stack([-t[:, 1], t[:, 0]])]
    for _ in range(m):
        w.append((nxt(w[-1]) - prv(w[-1])) / span[:, None])
    wm2 = np.sum(w[m] ** 2, axis=1)
    F = alpha * ell.sum() + beta * np.sum(wm2 * dual)

    # reverse sweep
    dual_bar = beta * wm2
    span_bar = np.zeros_like(span)
    G = 2.0 * beta * dual[:, None] * w[m]
    for p in range(m, 0, -1):
        H = G / span[:, None]
        span_bar -= np.sum(H * w[p], axis=1)
        G = prv(H) - nxt(H)
    t_bar = np.column_stack([G[:, 1], -G[:, 0]])
    c_bar = (t_bar - np.sum(t_bar * t, axis=1)[:, None] * t) / span[:, None] + span_bar[:, None] * t
    x_bar = prv(c_bar) - nxt(c_bar)
    ell_bar = alpha + 0.5 * (dual_bar + nxt(dual_bar))
    e_bar = ell_bar[:, None] * u
    x_bar += prv(e_bar) - e_bar
    return float(F), x_bar


def gradient_exact(curve: DiscreteCurve, m: int = 1, alpha: float = 1.0, beta: float = 1.0,
                   geometry: CurveGeometry | None = None) -> GradientField:
    """Exact gradient of the discrete energy by reverse accumulation.

    The chain is vertices -> edges and centered chords -> normals ->
    iterated differences -> energy; each stage is differentiated by hand.
    ``geometry`` may be passed to reuse an existing :func:`compute_geometry`
    result for the normal projection.
    """
    check_weights(m, alpha, beta)
    _require_quasi_uniform(curve.edge_lengths())
    _, grad = _reverse_gradient(np.asarray(curve.vertices, dtype=float), int(m), alpha, beta)
    return _gradient_field(curve.vertices, grad, geometry)


def gradient_fd(curve: DiscreteCurve, m: int = 1, alpha: float = 1.0, beta: float = 1.0,
                h: float = FD_STEP) -> GradientField:
    """Central-difference gradient, rebuilding the geometry for every probe.

    Costs 4N energy evaluations; only meant as an oracle.
    """
    check_weights(m, alpha, beta)
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("probe step h must lie in [1e-8, 1e-4]")
    x0 = np.array(curve.vertices, dtype=float)
    grad = np.empty_like(x0)
    for i in range(len(x0)):
        for j in range(2):
            xp = x0.copy()
            xp[i, j] += h
            xm = x0.copy()
            xm[i, j] -= h
            fp = _probe_energy(xp, m, alpha, beta)
            fm = _probe_energy(xm, m, alpha, beta)
            grad[i, j] = (fp - fm) / (2 * h)
    return _gradient_field(curve.vertices, grad)


def _probe_energy(x: np.ndarray, m: int, alpha: float, beta: float) -> float:
    return energy(compute_geometry(DiscreteCurve(x)), m, alpha, beta).total


def normal_speed_analytic_m1(geometry: CurveGeometry, alpha: float = 1.0, beta: float = 1.0) -> np.ndarray:
    """Continuum first variation of alpha*L + beta*int k^2 ds with respect to
    the inward normal: beta*(2 k_ss + k^3) - alpha*k."""
    check_weights(1, alpha, beta)
    k = geometry.curvature
    k_ss = periodic_derivative(k, geometry, order=2)
    return beta * (2.0 * k_ss + k**3) - alpha * k
