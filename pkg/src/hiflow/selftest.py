"""Fast oracle and property checks, run by ``hiflow selftest``.

Each check returns a short detail string and raises AssertionError on
failure. The full suite lives in the test directory; this is the subset
that runs in a few seconds from an installed package.
"""

from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from .energy import energy, gradient_exact, gradient_fd, normal_speed_analytic_m1
from .flow import FlowConfig, circle_radius_ode, critical_radius, initial_state, step_semi_implicit
from .geometry import compute_geometry, generate_curve, read_snapshot, write_snapshot


def check_gradient_oracle() -> str:
    c = generate_curve("ellipse", 32, equal_chords=True, a=2.0, b=1.0)
    worst = 0.0
    for m in (1, 2, 3):
        ge = gradient_exact(c, m).gradient
        gf = gradient_fd(c, m).gradient
        worst = max(worst, np.abs(ge - gf).max() / np.abs(gf).max())
    assert worst <= 1e-6, worst
    return f"relative sup error {worst:.2e}"


def check_critical_circle() -> str:
    worst = 0.0
    for m in (1, 2, 3):
        r = critical_radius(m)
        speed = gradient_exact(generate_curve("circle", 64, r=r), m).normal_speed
        worst = max(worst, np.abs(speed).max())
    assert worst <= 1e-8, worst
    return f"max |E| on critical circles {worst:.2e}"


def check_analytic_m1() -> str:
    geom = compute_geometry(generate_curve("circle", 64, r=2.0))
    speed = normal_speed_analytic_m1(geom)
    err = np.abs(speed + 0.375).max()
    # the discrete curvature of a 64-gon carries an O(h^2) error
    assert err <= 1e-3, err
    return f"|E + 3/8| = {err:.2e} on circle(2)"


def check_scaling() -> str:
    c = generate_curve("fourier", 64, coefficients=[1.0, 0.1, 0.0, 0.0, 0.05])
    worst = 0.0
    for m in (1, 2, 3):
        e = energy(compute_geometry(c), m)
        for lam in (0.5, 2.0, 10.0):
            es = energy(compute_geometry(c.scaled(lam)), m).total
            want = lam * e.length_term + lam ** (1 - 2 * m) * e.derivative_term
            worst = max(worst, abs(es - want) / abs(want))
    assert worst <= 1e-12, worst
    return f"relative error {worst:.2e}"


def check_circle_ode() -> str:
    cfg = FlowConfig(m=1, N=64)
    state = initial_state(generate_curve("circle", 64, r=2.0), cfg)
    for _ in range(200):
        state = step_semi_implicit(state, cfg)
    r_pde = float(np.mean(np.linalg.norm(state.curve.vertices, axis=1)))
    _, rs = circle_radius_ode(2.0, 1, 1.0, 1.0, state.t, 1e-4)
    err = abs(r_pde - rs[-1])
    assert err <= 1e-3, err
    return f"|r_pde - r_ode| = {err:.2e} at t={state.t:.3g}"


def check_snapshot_roundtrip() -> str:
    c = generate_curve("ellipse", 64, a=2.0, b=1.0).rotated(0.3)
    with tempfile.TemporaryDirectory() as tmp:
        p = write_snapshot(Path(tmp) / "s.txt", c, t=math.pi)
        back, t = read_snapshot(p)
    assert t == math.pi and np.array_equal(back.vertices, c.vertices)
    return "bit-exact"


CHECKS = {
    "gradient_oracle": check_gradient_oracle,
    "critical_circle": check_critical_circle,
    "analytic_m1": check_analytic_m1,
    "scaling": check_scaling,
    "circle_ode": check_circle_ode,
    "snapshot_roundtrip": check_snapshot_roundtrip,
}


def run_selftest(echo=print) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        try:
            detail = fn()
            echo(f"PASS {name}: {detail}")
        except AssertionError as exc:
            ok = False
            echo(f"FAIL {name}: {exc}")
    return ok
