"""Acceptance criteria 1-10, one PASS/FAIL line per criterion on stdout."""

import math
import time

import numpy as np
import pytest

from hiflow.diagnostics import circle_curve, fit_circle, hausdorff_distance
from hiflow.errors import BlowupError
from hiflow.energy import energy, gradient_exact, gradient_fd, normal_speed_analytic_m1
from hiflow.flow import FlowConfig, circle_radius_ode, run_curve_shortening, run_flow
from hiflow.geometry import compute_geometry, format_snapshot, generate_curve, read_snapshot, write_snapshot
from hiflow.runner import bundled_scenarios, degiorgi_sweep, load_config, run_scenario

from conftest import CORPUS, corpus_curve

TWO_PI = 2 * math.pi


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def corpus_runs():
    runs = {}
    for m in (1, 2):
        for name in CORPUS:
            cfg = FlowConfig(m=m, integrator="linesearch", N=128, dt_initial=1e-4, t_max=1e9,
                             sigma_tol=1e-6, max_steps=500)
            runs[(name, m)] = run_flow(corpus_curve(name, 128), cfg)
    return runs


@pytest.fixture(scope="module")
def ellipse_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ellipse21_m1")
    t0 = time.perf_counter()
    manifest = run_scenario(load_config("ellipse21_m1"), out)
    return manifest, out, time.perf_counter() - t0


def test_1_gradient_oracle(verdict):
    t0 = time.perf_counter()
    c = generate_curve("ellipse", 128, a=2.0, b=1.0, equal_chords=True)
    errs = []
    for m in (1, 2, 3):
        ge = gradient_exact(c, m, 1.0, 1.0).gradient
        gf = gradient_fd(c, m, 1.0, 1.0, h=1e-6).gradient
        errs.append(float(np.abs(ge - gf).max() / np.abs(gf).max()))
    elapsed = time.perf_counter() - t0
    verdict(1, "gradient_exact vs gradient_fd", max(errs) <= 1e-6 and elapsed <= 30,
            f"rel sup err m=1,2,3 = {', '.join(f'{e:.2e}' for e in errs)} (<= 1e-6); {elapsed:.1f} s (<= 30 s)")


def test_2_analytic_consistency(verdict):
    diffs = []
    for N in (128, 256, 512):
        c = generate_curve("ellipse", N, a=2.0, b=1.0, equal_chords=True)
        an = normal_speed_analytic_m1(compute_geometry(c))
        ex = gradient_exact(c, 1).normal_speed
        diffs.append(float(np.abs(an - ex).max()))
    orders = [math.log2(diffs[i] / diffs[i + 1]) for i in range(2)]
    shrinks = diffs[0] > diffs[1] > diffs[2]
    verdict(2, "analytic m=1 first variation", shrinks and orders[-1] >= 1.8,
            f"sup diff {', '.join(f'{d:.3e}' for d in diffs)}; pairwise orders "
            f"{orders[0]:.2f}, {orders[1]:.2f} (finest pair >= 1.8)")


def _radius_track(m, t_end, sigma_tol):
    cfg = FlowConfig(m=m, integrator="semi_implicit", N=256, t_max=t_end, sigma_tol=sigma_tol,
                     max_steps=10**7, record_every=1000)
    traj = run_flow(generate_curve("circle", 256, r=2.0), cfg, snapshot_every=50)
    ts, rs = circle_radius_ode(2.0, m, 1.0, 1.0, t_end, 1e-4)
    samples = traj.snapshots + [(None, traj.final_state.t, traj.final_state.curve)]
    err = max(abs(fit_circle(c)[1] - np.interp(t, ts, rs)) for _, t, c in samples if t <= 3.0)
    return traj, err


def test_3_circle_ode_equivalence(verdict):
    t0 = time.perf_counter()
    _, err1 = _radius_track(1, 3.0, 1e-14)
    traj2, err2 = _radius_track(2, 10.0, 1e-14)
    r_final = fit_circle(traj2.final_state.curve)[1]
    gap = abs(r_final - 3**0.25)
    elapsed = time.perf_counter() - t0
    ok = err1 <= 1e-3 and err2 <= 1e-3 and gap <= 1e-3 and traj2.final_state.t <= 10.0 and elapsed <= 120
    verdict(3, "circle ODE equivalence", ok,
            f"max|r_pde - r_ode| on [0,3]: m=1 {err1:.2e}, m=2 {err2:.2e}; m=2 |r - 3^(1/4)| = {gap:.2e} "
            f"at t={traj2.final_state.t:.3g}; {elapsed:.0f} s (<= 120 s)")


def test_4_dissipation(verdict, corpus_runs):
    events = sum(t.energy_increase_events for t in corpus_runs.values())
    steps = sum(t.accepted_steps for t in corpus_runs.values())
    failures = [k for k, t in corpus_runs.items() if t.termination_reason in ("linesearch_failure", "blowup_guard")]
    strict = all(np.all(np.diff([r.energy.total for r in t.records]) < 0) for t in corpus_runs.values())
    verdict(4, "dissipation under linesearch", events == 0 and strict and not failures,
            f"{events} energy increases over {steps} accepted steps, 10 runs; failures: {failures or 'none'}")


def test_5_convergence(verdict, ellipse_run):
    manifest, out, elapsed = ellipse_run
    curve, _ = read_snapshot(out / "snapshots/final.txt")
    curve = curve.recentred()
    center, r, _ = fit_circle(curve)
    dist = hausdorff_distance(curve, circle_curve(center, r, 2048))
    sigma = manifest.final["sigma"]
    ok = (manifest.termination_reason == "converged" and sigma < 1e-6 and abs(r - 1) <= 1e-2
          and dist <= 1e-2 and elapsed <= 300)
    verdict(5, "ellipse(2,1) converges to unit circle", ok,
            f"{manifest.termination_reason}, sigma={sigma:.2e} at t={manifest.final['t']:.3g}; fit radius {r:.5f}; "
            f"Hausdorff to fit {dist:.2e}; {elapsed:.0f} s (<= 300 s)")


def test_6_rescaling(verdict):
    c = generate_curve("ellipse", 128, a=2.0, b=1.0, equal_chords=True)
    worst = 0.0
    for m in (1, 2, 3):
        base = energy(compute_geometry(c), m)
        for lam in (0.5, 2.0, 10.0):
            got = energy(compute_geometry(c.scaled(lam)), m).total
            want = base.alpha * lam * base.length + base.beta * lam ** (1 - 2 * m) * base.derivative_integral
            worst = max(worst, abs(got - want) / abs(want))
    verdict(6, "rescaling identity", worst <= 1e-12, f"max rel err {worst:.2e} (<= 1e-12)")


def test_7_fenchel(verdict, corpus_runs):
    worst = math.inf
    checked = 0
    for traj in corpus_runs.values():
        for rec in traj.records:
            if abs(rec.winding) == 1:
                checked += 1
                worst = min(worst, rec.total_abs_curvature)
    verdict(7, "Fenchel bound", checked > 0 and worst >= TWO_PI - 1e-3,
            f"min total |k| = {worst:.6f} over {checked} records (>= 2 pi - 1e-3 = {TWO_PI - 1e-3:.6f})")


def test_8_no_blowup_shadow(verdict, corpus_runs):
    ratio = max(max(r.max_abs_curvature for r in t.records) / t.records[0].max_abs_curvature
                for t in corpus_runs.values())
    kmax = [0.0]

    def track(state):
        kmax[0] = max(kmax[0], float(np.abs(compute_geometry(state.curve).curvature).max()))

    blew_up = False
    try:
        run_curve_shortening(generate_curve("circle", 64, r=1.0), 1.0, N=64, callback=track)
    except BlowupError:
        blew_up = True
    verdict(8, "no blow-up along F_m, blow-up under curve shortening", ratio <= 10 and kmax[0] > 100 and blew_up,
            f"max k(t)/k(0) over corpus = {ratio:.3f} (<= 10); curve shortening max|k| = {kmax[0]:.3g} (> 100)")


def test_9_degiorgi_oracle(verdict):
    rows = degiorgi_sweep(load_config("degiorgi_circle2"), [1.0, 0.1, 0.01], 0.5)
    r_csf = math.sqrt(4.0 - 2 * 0.5)
    gaps = []
    for row in rows:
        r_eps = circle_radius_ode(2.0, 1, 1.0, row.eps, 0.5, 1e-4)[1][-1]
        gaps.append(abs(row.hausdorff - abs(r_eps - r_csf)))
    verdict(9, "eps-sweep vs two-ODE oracle", len(rows) == 3 and max(gaps) <= 1e-3,
            "; ".join(f"eps={r.eps:g}: d={r.hausdorff:.4e} (|err| {g:.1e})" for r, g in zip(rows, gaps)))


def test_10_determinism_and_formats(verdict, ellipse_run, tmp_path):
    first_manifest, first_dir, _ = ellipse_run
    mismatched = []
    for name in bundled_scenarios():
        cfg = load_config(name)
        if name == "ellipse21_m1":
            a, a_dir = first_manifest, first_dir
        else:
            a_dir = tmp_path / f"{name}_a"
            a = run_scenario(cfg, a_dir)
        b_dir = tmp_path / f"{name}_b"
        b = run_scenario(cfg, b_dir)
        for rel in [a.files["csv"], *a.files["snapshots"]]:
            if (a_dir / rel).read_bytes() != (b_dir / rel).read_bytes():
                mismatched.append(f"{name}/{rel}")
        for rel in a.files["snapshots"]:
            curve, t = read_snapshot(a_dir / rel)
            if format_snapshot(curve, t).encode() != (a_dir / rel).read_bytes():
                mismatched.append(f"{name}/{rel} (reformat)")
    rng = np.random.default_rng(7)
    c = generate_curve("fourier", 64, coefficients=[1.0, *rng.uniform(-0.1, 0.1, 6)]).scaled(math.pi)
    back, t = read_snapshot(write_snapshot(tmp_path / "rt.txt", c, t=math.e))
    bit_exact = np.array_equal(back.vertices, c.vertices) and t == math.e
    verdict(10, "determinism and snapshot round trip", not mismatched and bit_exact,
            f"{len(bundled_scenarios())} bundled scenarios rerun byte-identical: {not mismatched}; "
            f"snapshot round trip bit-exact: {bit_exact}")
