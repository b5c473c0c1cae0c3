import json
import math

import numpy as np
import pytest
import yaml

from hiflow import __version__
from hiflow.cli import main
from hiflow.diagnostics import CSV_COLUMNS
from hiflow.errors import ConfigError, SnapshotParseError
from hiflow.flow import circle_radius_ode
from hiflow.geometry import generate_curve, write_snapshot
from hiflow.render import render_svg
from hiflow.runner import (
    bundled_scenarios, config_from_dict, degiorgi_sweep, load_config, read_diagnostics_csv, run_batch,
    run_scenario, sweep_flow_config, verify_manifest,
)

SHORT = {
    "name": "short",
    "shape": {"kind": "ellipse", "params": {"a": 2.0, "b": 1.0}},
    "flow": {"m": 1, "N": 64, "max_steps": 30, "record_every": 5},
    "snapshot_every": 10,
}


def short(tmp_path, **over):
    data = {**SHORT, "output_dir": str(tmp_path / "out"), **over}
    return config_from_dict(data)


class TestConfig:
    def test_bundled_scenarios_load(self):
        names = bundled_scenarios()
        assert "ellipse21_m1" in names and len(names) >= 5
        for name in names:
            assert load_config(name).name == name

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump(SHORT))
        cfg = load_config(p)
        assert cfg.flow_config.N == 64 and cfg.shape.kind == "ellipse"

    @pytest.mark.parametrize("patch", [
        {"snapshot_every": 0},
        {"name": ""},
        {"name": "a/b"},
        {"extra": 1},
        {"shape": {"kind": "square"}},
        {"shape": {"kind": "circle", "params": {"radius": 1.0}}},
        {"shape": {"kind": "circle", "colour": "red"}},
        {"flow": {"m": 0}},
        {"flow": {"integrator": "rk4"}},
        {"flow": {"safety": 2.0}},
        {"flow": {"dt": 0.1}},
        {"flow": {"N": "64"}},
    ])
    def test_invalid(self, patch):
        with pytest.raises(ConfigError):
            config_from_dict({**SHORT, **patch})

    def test_missing_required(self):
        data = dict(SHORT)
        del data["snapshot_every"]
        with pytest.raises(ConfigError):
            config_from_dict(data)

    def test_unknown_source(self):
        with pytest.raises(ConfigError):
            load_config("no_such_scenario")

    def test_not_a_mapping(self, tmp_path):
        p = tmp_path / "s.yaml"
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_int_accepted_for_float(self):
        cfg = config_from_dict({**SHORT, "flow": {"alpha": 2, "t_max": 1}})
        assert cfg.flow_config.alpha == 2.0


class TestRunScenario:
    def test_outputs(self, tmp_path):
        m = run_scenario(short(tmp_path))
        out = tmp_path / "out"
        assert m.termination_reason == "max_steps" and m.steps == 30
        assert m.version == __version__
        assert m.files["snapshots"] == [f"snapshots/step_{k:08d}.txt" for k in (0, 10, 20, 30)] + [
            "snapshots/final.txt"]
        assert all(p.exists() for p in m.paths())
        raw = (out / "diagnostics.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.split(b"\n")[0].decode() == ",".join(CSV_COLUMNS)
        rows = read_diagnostics_csv(out / "diagnostics.csv")
        assert [r["t"] for r in rows] == sorted({r["t"] for r in rows})
        assert len(rows) == 7
        data = json.loads((out / "manifest.json").read_text())
        assert data["scenario"]["name"] == "short"
        assert data["final"]["t"] == rows[-1]["t"]
        verify_manifest(out / "manifest.json")

    def test_deterministic(self, tmp_path):
        a = run_scenario(short(tmp_path), tmp_path / "a")
        b = run_scenario(short(tmp_path), tmp_path / "b")
        for rel in [a.files["csv"], *a.files["snapshots"], *a.files["svg"]]:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
        assert a.files == b.files

    def test_failure_recorded(self, tmp_path):
        cfg = short(tmp_path, shape={"kind": "circle", "params": {"r": 2.0}},
                    flow={"N": 64, "blowup_ceiling": 0.6})
        m = run_scenario(cfg)
        assert m.failed and m.termination_reason == "blowup_guard"
        assert json.loads((tmp_path / "out" / "manifest.json").read_text())["message"]

    def test_t_max_zero(self, tmp_path):
        m = run_scenario(short(tmp_path, flow={"N": 64, "t_max": 0.0}))
        assert m.termination_reason == "t_max" and m.final is None
        assert read_diagnostics_csv(tmp_path / "out" / "diagnostics.csv") == []

    def test_batch(self, tmp_path):
        cfgs = [short(tmp_path, name=f"s{i}", output_dir=str(tmp_path / f"s{i}")) for i in range(2)]
        manifests = run_batch(cfgs, workers=2)
        assert [m.scenario["name"] for m in manifests] == ["s0", "s1"]
        serial = run_scenario(cfgs[0], tmp_path / "serial")
        assert (tmp_path / "s0/diagnostics.csv").read_bytes() == (tmp_path / "serial/diagnostics.csv").read_bytes()
        assert serial.termination_reason == manifests[0].termination_reason

    def test_batch_unique_names(self, tmp_path):
        with pytest.raises(ConfigError):
            run_batch([short(tmp_path), short(tmp_path)])


class TestRender:
    def test_circle(self, tmp_path):
        snap = write_snapshot(tmp_path / "c.txt", generate_curve("circle", 40, r=1.0))
        svg = render_svg(snap, tmp_path / "c.svg").read_text()
        d = svg.split('d="')[1].split('"')[0]
        assert d.startswith("M ") and d.endswith(" Z")
        assert d.count(" L ") == 39
        assert "<circle" not in svg
        vb = [float(v) for v in svg.split('viewBox="')[1].split('"')[0].split()]
        assert vb[0] == pytest.approx(-1.1) and vb[2] == pytest.approx(2.2)

    def test_overlay_dashed(self, tmp_path):
        snap = write_snapshot(tmp_path / "c.txt", generate_curve("circle", 40, r=1.0).translated([0, 2]))
        svg = render_svg(snap, tmp_path / "c.svg", overlay_circle=True).read_text()
        assert "stroke-dasharray" in svg and 'class="fit"' in svg
        assert 'cy="-2"' in svg  # y axis flipped

    def test_empty_file(self, tmp_path):
        (tmp_path / "e.txt").write_text("")
        with pytest.raises(SnapshotParseError):
            render_svg(tmp_path / "e.txt", tmp_path / "e.svg")


class TestSweep:
    def base(self, tmp_path, N=64):
        return config_from_dict({"name": "sw", "shape": {"kind": "circle", "params": {"r": 2.0}},
                                 "flow": {"N": N}, "snapshot_every": 100, "output_dir": str(tmp_path)})

    @pytest.mark.parametrize("eps", [[], [0.1, 1.0], [1.0, -0.1], [1.0, 1.0]])
    def test_validation(self, tmp_path, eps):
        with pytest.raises(ConfigError):
            degiorgi_sweep(self.base(tmp_path), eps, 0.5)

    def test_beyond_extinction(self, tmp_path):
        with pytest.raises(ConfigError, match="smaller t_compare"):
            degiorgi_sweep(self.base(tmp_path), [1.0], 2.5)

    def test_flow_config(self, tmp_path):
        cfg = sweep_flow_config(self.base(tmp_path).flow_config, 0.1, 0.5)
        assert (cfg.m, cfg.alpha, cfg.beta, cfg.t_max) == (1, 1.0, 0.1, 0.5)

    def test_circle_oracle_coarse(self, tmp_path):
        rows = degiorgi_sweep(self.base(tmp_path), [1.0, 0.1], 0.2, workers=2)
        for row in rows:
            r_eps = circle_radius_ode(2.0, 1, 1.0, row.eps, 0.2, 1e-4)[1][-1]
            assert row.hausdorff == pytest.approx(abs(r_eps - math.sqrt(4 - 0.4)), abs=2e-3)
        assert rows[0].hausdorff > rows[1].hausdorff
        assert rows[0].length_gap > 0 and rows[0].max_k_gap < 0


class TestCli:
    def test_selftest(self, capsys):
        assert main(["selftest"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    def test_run(self, tmp_path, capsys):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump(SHORT))
        assert main(["run", str(p), "-o", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o/manifest.json").exists()
        assert "max_steps" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump({**SHORT, "bogus": 1}))
        assert main(["run", str(p)]) == 2
        assert main(["run", str(tmp_path / "missing.yaml")]) == 2

    def test_numerical_failure_exit_3(self, tmp_path):
        p = tmp_path / "s.yaml"
        data = {**SHORT, "shape": {"kind": "circle", "params": {"r": 2.0}},
                "flow": {"N": 64, "blowup_ceiling": 0.6}, "output_dir": str(tmp_path / "o")}
        p.write_text(yaml.safe_dump(data))
        assert main(["run", str(p)]) == 3

    def test_render(self, tmp_path):
        snap = write_snapshot(tmp_path / "c.txt", generate_curve("circle", 32))
        assert main(["render", str(snap), "-o", str(tmp_path / "c.svg"), "--overlay-circle"]) == 0
        assert (tmp_path / "c.svg").exists()
        (tmp_path / "bad.txt").write_text("")
        assert main(["render", str(tmp_path / "bad.txt"), "-o", str(tmp_path / "b.svg")]) == 2

    def test_sweep(self, tmp_path, capsys):
        p = tmp_path / "b.yaml"
        p.write_text(yaml.safe_dump({"name": "b", "shape": {"kind": "circle", "params": {"r": 2.0}},
                                     "flow": {"N": 64}, "snapshot_every": 10}))
        out = tmp_path / "sw.csv"
        assert main(["sweep", str(p), "--eps", "1,0.1", "--t-compare", "0.1", "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "eps,hausdorff,length_gap,max_k_gap" and len(lines) == 3
        assert "exploratory" in capsys.readouterr().out
        assert main(["sweep", str(p), "--eps", "0.1,1"]) == 2

    def test_list(self, capsys):
        assert main(["list"]) == 0
        assert "ellipse21_m1" in capsys.readouterr().out
