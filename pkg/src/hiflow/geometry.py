"""Closed plane polylines and the discrete calculus built on them.

Conventions used throughout the package:

* vertices are stored counterclockwise for positively oriented shapes;
* the tangent at vertex ``i`` is the normalized centered chord
  ``x[i+1] - x[i-1]`` and the normal is the tangent rotated by +90 degrees,
  so it points inward on a counterclockwise circle;
* the curvature at vertex ``i`` is the signed turning angle between the two
  incident edges divided by the dual length ``(l[i-1] + l[i]) / 2``; a
  counterclockwise circle of radius r has k = +1/r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateCurveError, NonUniformGridError, SnapshotParseError

MIN_VERTICES = 16
MIN_EDGE = 1e-12
UNIFORM_RTOL = 1e-6
MAX_ASPECT = 10.0

SHAPES = ("circle", "ellipse", "fourier", "figure_eight", "rounded_polygon")

Param = Callable[[np.ndarray], np.ndarray]


def _as_points(vertices) -> np.ndarray:
    pts = np.array(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DegenerateCurveError(f"vertices must have shape (N, 2), got {pts.shape}")
    return pts


def nxt(f: np.ndarray) -> np.ndarray:
    """f[i+1] with periodic wrap along the first axis."""
    return np.concatenate((f[1:], f[:1]))


def prv(f: np.ndarray) -> np.ndarray:
    """f[i-1] with periodic wrap along the first axis."""
    return np.concatenate((f[-1:], f[:-1]))


def _norms(v: np.ndarray) -> np.ndarray:
    return np.sqrt(v[:, 0] * v[:, 0] + v[:, 1] * v[:, 1])


def _edge_lengths(pts: np.ndarray) -> np.ndarray:
    return _norms(nxt(pts) - pts)


@dataclass(frozen=True)
class DiscreteCurve:
    """Closed polyline with N >= 16 distinct consecutive vertices.

    Index arithmetic is modulo N; the closing edge from the last vertex back
    to the first is implicit. The vertex array is made read-only.
    """

    vertices: np.ndarray

    def __post_init__(self):
        pts = _as_points(self.vertices)
        if len(pts) < MIN_VERTICES:
            raise DegenerateCurveError(f"need at least {MIN_VERTICES} vertices, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateCurveError("vertices must be finite")
        edges = _edge_lengths(pts)
        if edges.min() <= MIN_EDGE:
            j = int(edges.argmin())
            raise DegenerateCurveError(f"vertices {j} and {(j + 1) % len(pts)} coincide")
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @property
    def N(self) -> int:
        return len(self.vertices)

    def edge_lengths(self) -> np.ndarray:
        return _edge_lengths(self.vertices)

    def aspect_ratio(self) -> float:
        """Ratio of longest to shortest edge."""
        edges = self.edge_lengths()
        return float(edges.max() / edges.min())

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def translated(self, offset) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices + np.asarray(offset, dtype=float))

    def scaled(self, factor: float) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices * float(factor))

    def rotated(self, angle: float) -> "DiscreteCurve":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return DiscreteCurve(self.vertices @ rot.T)

    def reversed(self) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices[::-1].copy())

    def recentred(self) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices - self.centroid())


# ---------------------------------------------------------------------------
# curve generation


def _circle(r: float = 1.0) -> tuple[Param, Param]:
    if r <= 0:
        raise ValueError("circle radius must be positive")

    def P(u):
        return r * np.column_stack([np.cos(u), np.sin(u)])

    def dP(u):
        return r * np.column_stack([-np.sin(u), np.cos(u)])

    return P, dP


def _ellipse(a: float = 2.0, b: float = 1.0) -> tuple[Param, Param]:
    if a <= 0 or b <= 0:
        raise ValueError("ellipse semi-axes must be positive")

    def P(u):
        return np.column_stack([a * np.cos(u), b * np.sin(u)])

    def dP(u):
        return np.column_stack([-a * np.sin(u), b * np.cos(u)])

    return P, dP


def _polar(rho: Param, drho: Param) -> tuple[Param, Param]:
    def P(u):
        r = rho(u)
        return np.column_stack([r * np.cos(u), r * np.sin(u)])

    def dP(u):
        r, dr = rho(u), drho(u)
        return np.column_stack([dr * np.cos(u) - r * np.sin(u), dr * np.sin(u) + r * np.cos(u)])

    return P, dP


def _fourier(coefficients) -> tuple[Param, Param]:
    """Polar radius r0 + sum_k a_k cos(k u) + b_k sin(k u).

    ``coefficients`` is the flat list ``[r0, a1, b1, a2, b2, ...]``.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 1 or len(c) < 1 or len(c) % 2 == 0:
        raise ValueError("fourier coefficients must be [r0, a1, b1, ..., an, bn]")
    r0 = c[0]
    a, b = c[1::2], c[2::2]
    k = np.arange(1, len(a) + 1)
    if r0 <= 0 or np.abs(a).sum() + np.abs(b).sum() >= r0:
        raise ValueError("fourier radius must stay positive: need r0 > sum |a_k| + |b_k|")

    def rho(u):
        ku = np.outer(u, k)
        return r0 + np.cos(ku) @ a + np.sin(ku) @ b

    def drho(u):
        ku = np.outer(u, k)
        return -np.sin(ku) @ (k * a) + np.cos(ku) @ (k * b)

    return _polar(rho, drho)


def _figure_eight(scale: float = 1.0) -> tuple[Param, Param]:
    # lemniscate of Gerono, crossing at the origin for u = 0 and u = pi
    if scale <= 0:
        raise ValueError("figure_eight scale must be positive")

    def P(u):
        return scale * np.column_stack([np.sin(u), np.sin(u) * np.cos(u)])

    def dP(u):
        return scale * np.column_stack([np.cos(u), np.cos(2 * u)])

    return P, dP


def _rounded_polygon(sides: int = 4, radius: float = 1.0, sharpness: float = 10.0) -> tuple[Param, Param]:
    """Polygon with circumradius ``radius`` whose corners are rounded by a
    log-sum-exp smoothing of the support constraints."""
    sides = int(sides)
    if sides < 3:
        raise ValueError("rounded_polygon needs at least 3 sides")
    if radius <= 0 or sharpness <= 0:
        raise ValueError("rounded_polygon radius and sharpness must be positive")
    inradius = radius * math.cos(math.pi / sides)
    phis = 2 * np.pi * np.arange(sides) / sides
    kappa = float(sharpness)

    def _weights(u):
        c = np.cos(np.subtract.outer(u, phis))
        z = kappa * c
        zmax = z.max(axis=1, keepdims=True)
        w = np.exp(z - zmax)
        tot = w.sum(axis=1)
        smax = (zmax[:, 0] + np.log(tot)) / kappa
        return smax, w / tot[:, None], np.sin(np.subtract.outer(u, phis))

    def rho(u):
        smax, _, _ = _weights(u)
        return inradius / smax

    def drho(u):
        smax, w, s = _weights(u)
        dsmax = -(w * s).sum(axis=1)
        return -inradius * dsmax / smax**2

    return _polar(rho, drho)


_BUILDERS = {
    "circle": _circle,
    "ellipse": _ellipse,
    "fourier": _fourier,
    "figure_eight": _figure_eight,
    "rounded_polygon": _rounded_polygon,
}


def _arclength_parameters(P: Param, dP: Param, period: float, N: int, u0: float) -> np.ndarray:
    M = max(64 * N, 8192)
    uu = u0 + period * np.arange(M + 1) / M
    speed = np.linalg.norm(dP(uu), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]))]) * (period / M)
    return np.interp(np.arange(N) * cum[-1] / N, cum, uu)


def _equal_chord_points(P: Param, dP: Param, period: float, N: int, u0: float = 0.0,
                        rtol: float = 1e-12, accept: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """Points P(u_j) with u_0 fixed and all N closing chords of equal length.

    Iterates until the chord spread is below ``rtol``; the cumulative sums put
    a rounding floor near 1e-12, so after ``max_iter`` sweeps the best iterate
    is accepted if its spread is below ``accept``.
    """
    u = _arclength_parameters(P, dP, period, N, u0)
    target = np.arange(N)
    best, best_dev = None, np.inf
    for _ in range(max_iter):
        pts = P(u)
        chords = _edge_lengths(pts)
        mean = chords.mean()
        dev = np.max(np.abs(chords / mean - 1.0))
        if dev < best_dev:
            best, best_dev = pts, dev
        if dev < rtol:
            break
        cum = np.concatenate([[0.0], np.cumsum(chords[:-1])])
        du = (target * mean - cum) / np.linalg.norm(dP(u), axis=1)
        du[0] = 0.0
        u = u + du
    if best_dev > accept:
        raise DegenerateCurveError("equal-chord resampling did not converge")
    return best


def generate_curve(shape: str, N: int, *, equal_chords: bool = False, **params) -> DiscreteCurve:
    """Sample one of the built-in closed shapes.

    Parameters
    ----------
    shape : str
        One of ``circle(r)``, ``ellipse(a, b)``, ``fourier(coefficients)``,
        ``figure_eight(scale)``, ``rounded_polygon(sides, radius, sharpness)``.
    N : int
        Vertex count, at least 16.
    equal_chords : bool
        If False (default) vertices are taken at uniform parameter. If True
        they are placed exactly on the analytic shape with all chords equal,
        which gives a uniform grid free of interpolation error.
    **params
        Shape parameters.

    Returns
    -------
    DiscreteCurve
    """
    if shape not in _BUILDERS:
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}")
    N = int(N)
    if N < MIN_VERTICES:
        raise DegenerateCurveError(f"need at least {MIN_VERTICES} vertices, got {N}")
    P, dP = _BUILDERS[shape](**params)
    # half-step phase keeps the figure-eight crossing off the vertices
    u0 = math.pi / N if shape == "figure_eight" else 0.0
    if equal_chords and shape != "circle":
        pts = _equal_chord_points(P, dP, 2 * math.pi, N, u0)
    else:
        pts = P(u0 + 2 * math.pi * np.arange(N) / N)
    return DiscreteCurve(pts)


def resample_uniform(curve: DiscreteCurve, N: int | None = None) -> DiscreteCurve:
    """Resample onto N vertices with equal chord lengths.

    A periodic cubic spline is fitted through the vertices in cumulative
    chord-length parameter; the new vertices lie on that spline, start at
    the first input vertex, and have equal chords to about 1e-13 relative.
    """
    N = curve.N if N is None else int(N)
    if N < MIN_VERTICES:
        raise DegenerateCurveError(f"need at least {MIN_VERTICES} vertices, got {N}")
    pts = curve.vertices
    edges = curve.edge_lengths()
    knots = np.concatenate([[0.0], np.cumsum(edges)])
    period = knots[-1]
    spline = CubicSpline(knots, np.vstack([pts, pts[:1]]), bc_type="periodic")
    dspline = spline.derivative()
    out = DiscreteCurve(_equal_chord_points(spline, dspline, period, N))
    if out.aspect_ratio() > MAX_ASPECT:
        raise DegenerateCurveError("resampled curve violates the edge aspect-ratio guard")
    return out


# ---------------------------------------------------------------------------
# geometry


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.column_stack([-v[:, 1], v[:, 0]])


def centered_difference(f: np.ndarray, spans: np.ndarray) -> np.ndarray:
    """(f[i+1] - f[i-1]) / spans[i] with periodic wrap.

    ``spans`` is the centered chord length |x[i+1] - x[i-1]|, which equals
    2*ds to second order and makes the stencil exact for circles.
    """
    diff = nxt(f) - prv(f)
    return diff / (spans[:, None] if diff.ndim == 2 else spans)


@dataclass(frozen=True, eq=False)
class CurveGeometry:
    """Per-vertex metric data of a :class:`DiscreteCurve`.

    ``edge_lengths[i]`` is the length of the edge from vertex i to i+1,
    ``dual_lengths[i]`` the mean of the two edges meeting at vertex i and
    ``spans[i]`` the centered chord |x[i+1] - x[i-1]| used by the
    derivative stencil.
    """

    curve: DiscreteCurve
    edge_lengths: np.ndarray
    dual_lengths: np.ndarray
    total_length: float
    tangents: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    spans: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    def grid_ratio(self) -> float:
        return float(self.edge_lengths.max() / self.edge_lengths.min())

    def is_uniform(self, rtol: float = UNIFORM_RTOL) -> bool:
        return self.grid_ratio() <= 1.0 + rtol

    def normal_derivative(self, order: int) -> np.ndarray:
        """Iterated centered arclength derivative of the normal field (cached).

        No uniformity check; see :func:`periodic_derivative` for the checked
        public entry point.
        """
        if order < 0:
            raise ValueError("order must be >= 0")
        if order == 0:
            return self.normals
        if order not in self._cache:
            self._cache[order] = centered_difference(self.normal_derivative(order - 1), self.spans)
        return self._cache[order]


def compute_geometry(curve: DiscreteCurve) -> CurveGeometry:
    pts = curve.vertices
    edges = nxt(pts) - pts
    lengths = _norms(edges)
    if lengths.min() <= MIN_EDGE:
        raise DegenerateCurveError("degenerate edge")
    dual = 0.5 * (lengths + prv(lengths))
    chords = nxt(pts) - prv(pts)
    chord_len = _norms(chords)
    if chord_len.min() <= MIN_EDGE:
        raise DegenerateCurveError("curve folds back onto itself (zero centered chord)")
    tangents = chords / chord_len[:, None]
    prev = prv(edges)
    turning = np.arctan2(prev[:, 0] * edges[:, 1] - prev[:, 1] * edges[:, 0],
                         (prev * edges).sum(axis=1))
    normals = _rot90(tangents)
    curvature = turning / dual
    for arr in (lengths, dual, tangents, normals, curvature, chord_len):
        arr.setflags(write=False)
    return CurveGeometry(curve, lengths, dual, float(lengths.sum()), tangents, normals, curvature,
                         chord_len)


def require_uniform(geometry: CurveGeometry, rtol: float = UNIFORM_RTOL) -> None:
    ratio = geometry.grid_ratio()
    if ratio > 1.0 + rtol:
        raise NonUniformGridError(
            f"edge length ratio {ratio:.6g} exceeds 1 + {rtol:g}; call resample_uniform first")


def periodic_derivative(samples, geometry: CurveGeometry, order: int = 1) -> np.ndarray:
    """``order``-fold centered arclength derivative of a periodic field.

    Works componentwise on (N, d) arrays. The field must be periodic: a field
    that jumps across the wrap (for example the arclength itself) produces a
    spurious spike at the first and last vertices.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    require_uniform(geometry)
    f = np.asarray(samples, dtype=float)
    if f.shape[0] != geometry.curve.N:
        raise ValueError("field length does not match the curve")
    for _ in range(order):
        f = centered_difference(f, geometry.spans)
    return f


def total_turning(geometry: CurveGeometry) -> tuple[float, int]:
    """Return (sum k ds, winding number)."""
    total = float(np.sum(geometry.curvature * geometry.dual_lengths))
    return total, int(round(total / (2 * math.pi)))


def signed_area(curve: DiscreteCurve) -> float:
    x, y = curve.vertices[:, 0], curve.vertices[:, 1]
    return 0.5 * float(np.sum(x * nxt(y) - nxt(x) * y))


# ---------------------------------------------------------------------------
# snapshot files


def format_snapshot(curve: DiscreteCurve, t: float = 0.0) -> str:
    lines = [f"N={curve.N} t={t:.17g}"]
    lines.extend(f"{x:.17g} {y:.17g}" for x, y in curve.vertices)
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> tuple[DiscreteCurve, float]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SnapshotParseError("empty snapshot")
    head = dict(tok.split("=", 1) for tok in lines[0].split() if "=" in tok)
    try:
        n = int(head["N"])
        t = float(head["t"])
        pts = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    except (KeyError, ValueError) as exc:
        raise SnapshotParseError(f"malformed snapshot: {exc}") from exc
    if pts.shape != (n, 2):
        raise SnapshotParseError(f"header says N={n} but found {len(lines) - 1} vertex lines")
    try:
        return DiscreteCurve(pts), t
    except DegenerateCurveError as exc:
        raise SnapshotParseError(str(exc)) from exc


def write_snapshot(path, curve: DiscreteCurve, t: float = 0.0) -> Path:
    path = Path(path)
    path.write_text(format_snapshot(curve, t), newline="\n")
    return path


def read_snapshot(path) -> tuple[DiscreteCurve, float]:
    return parse_snapshot(Path(path).read_text())
