"""Monitored quantities along a flow and shape-comparison utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import EnergyReport, GradientField, energy, gradient_exact
from .errors import DegenerateCurveError
from .geometry import DiscreteCurve, compute_geometry, nxt, signed_area, total_turning

CSV_COLUMNS = ("t", "F_total", "F_length", "F_deriv", "sigma", "length", "area", "max_k",
               "k_L2m", "total_abs_k", "winding", "self_int", "circle_residual")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: EnergyReport
    sigma: float
    length: float
    area_enclosed: float
    max_abs_curvature: float
    curvature_L2m: float
    total_abs_curvature: float
    winding: int
    self_intersecting: bool
    circle_fit_residual: float

    @property
    def length_energy_product(self) -> float:
        # the lower length bound C/F <= L has no explicit constant; logged only
        return self.length * self.energy.total

    def csv_row(self) -> list[str]:
        e = self.energy
        reals = (self.t, e.total, e.length_term, e.derivative_term, self.sigma, self.length,
                 self.area_enclosed, self.max_abs_curvature, self.curvature_L2m,
                 self.total_abs_curvature)
        return [f"{v:.17g}" for v in reals] + [
            str(self.winding), str(int(self.self_intersecting)), f"{self.circle_fit_residual:.17g}"]


def measure_curve(curve: DiscreteCurve, m: int, alpha: float, beta: float, t: float = 0.0,
                  gradient: GradientField | None = None) -> DiagnosticsRecord:
    geom = compute_geometry(curve)
    report = energy(geom, m, alpha, beta)
    if gradient is None:
        gradient = gradient_exact(curve, m, alpha, beta, geometry=geom)
    k, ds = geom.curvature, geom.dual_lengths
    _, winding = total_turning(geom)
    try:
        residual = fit_circle(curve)[2]
    except DegenerateCurveError:
        residual = math.inf
    return DiagnosticsRecord(
        t=float(t),
        energy=report,
        sigma=gradient.sigma(),
        length=geom.total_length,
        area_enclosed=signed_area(curve),
        max_abs_curvature=float(np.abs(k).max()),
        curvature_L2m=float(np.sum(np.abs(k) ** (2 * m) * ds)),
        total_abs_curvature=float(np.sum(np.abs(k) * ds)),
        winding=winding,
        self_intersecting=bool(self_intersections(curve)),
        circle_fit_residual=float(residual),
    )


def measure(state, config) -> DiagnosticsRecord:
    """Diagnostics of a flow state; reuses the state's cached gradient if present."""
    return measure_curve(state.curve, config.m, config.alpha, config.beta, state.t,
                         getattr(state, "gradient", None))


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def self_intersections(curve: DiscreteCurve) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, of non-adjacent edges that cross properly.

    Edge i runs from vertex i to vertex i+1. Touching at an endpoint or
    collinear overlap is not reported.
    """
    p = curve.vertices
    q = nxt(p)
    n = len(p)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    # bounding-box prefilter
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    ov = np.all((lo[i] <= hi[j]) & (lo[j] <= hi[i]), axis=1)
    i, j = i[ov], j[ov]
    if len(i) == 0:
        return []
    d1 = q[i] - p[i]
    d2 = q[j] - p[j]
    r = p[j] - p[i]
    s1 = _cross(d1[:, 0], d1[:, 1], r[:, 0], r[:, 1])
    s2 = _cross(d1[:, 0], d1[:, 1], (q[j] - p[i])[:, 0], (q[j] - p[i])[:, 1])
    s3 = _cross(d2[:, 0], d2[:, 1], -r[:, 0], -r[:, 1])
    s4 = _cross(d2[:, 0], d2[:, 1], (q[i] - p[j])[:, 0], (q[i] - p[j])[:, 1])
    hit = (s1 * s2 < 0) & (s3 * s4 < 0)
    return [(int(a), int(b)) for a, b in zip(i[hit], j[hit])]


def _point_polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a = poly
    d = nxt(poly) - a
    dd = np.sum(d * d, axis=1)
    rel = points[:, None, :] - a[None, :, :]
    s = np.clip(np.sum(rel * d[None], axis=2) / dd[None], 0.0, 1.0)
    near = rel - s[..., None] * d[None]
    return np.sqrt(np.min(np.sum(near * near, axis=2), axis=1))


def hausdorff_distance(a: DiscreteCurve, b: DiscreteCurve) -> float:
    """Symmetric Hausdorff distance from the vertices of each curve to the
    other polyline."""
    dab = _point_polyline_distance(a.vertices, b.vertices).max()
    dba = _point_polyline_distance(b.vertices, a.vertices).max()
    return float(max(dab, dba))


def fit_circle(curve: DiscreteCurve) -> tuple[np.ndarray, float, float]:
    """Algebraic least-squares circle fit.

    Returns (center, radius, residual) where residual is the RMS deviation of
    vertex distances from the radius.
    """
    pts = curve.vertices
    x, y = pts[:, 0], pts[:, 1]
    A = np.column_stack([x, y, np.ones_like(x)])
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateCurveError("points are collinear; no circle fit")
    sol, *_ = np.linalg.lstsq(A, -(x * x + y * y), rcond=None)
    center = -0.5 * sol[:2]
    r2 = center @ center - sol[2]
    if r2 <= 0:
        raise DegenerateCurveError("degenerate circle fit")
    radius = math.sqrt(r2)
    dist = np.linalg.norm(pts - center, axis=1)
    residual = float(np.sqrt(np.mean((dist - radius) ** 2)))
    return center, radius, residual


def circle_curve(center, radius: float, N: int = 1024) -> DiscreteCurve:
    th = 2 * np.pi * np.arange(N) / N
    return DiscreteCurve(np.asarray(center) + radius * np.column_stack([np.cos(th), np.sin(th)]))
