"""Scenario configuration, batch runs, persistence and the epsilon sweep.

A scenario is a YAML file with four top-level keys (``name``, ``shape``,
``flow``, ``snapshot_every``) and an optional ``output_dir``; unknown keys
anywhere are rejected. See ``README.md`` for the schema.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .diagnostics import CSV_COLUMNS, DiagnosticsRecord, hausdorff_distance, measure_curve
from .errors import BlowupError, ConfigError
from .flow import BLOWUP_CEILING, FlowConfig, run_curve_shortening, run_flow
from .geometry import SHAPES, DiscreteCurve, generate_curve, read_snapshot, write_snapshot
from .render import render_svg

log = logging.getLogger(__name__)

NUMERICAL_FAILURES = ("blowup_guard", "linesearch_failure")
SWEEP_COLUMNS = ("eps", "hausdorff", "length_gap", "max_k_gap")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class ShapeSection(_Strict):
    kind: Literal[SHAPES]  # type: ignore[valid-type]
    params: dict[str, Any] = Field(default_factory=dict)
    equal_chords: bool = False

    @model_validator(mode="after")
    def _params_build(self):
        try:
            generate_curve(self.kind, 32, **self.params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {self.kind}: {exc}") from exc
        return self

    def build(self, N: int) -> DiscreteCurve:
        return generate_curve(self.kind, N, equal_chords=self.equal_chords, **self.params)


class FlowSection(_Strict):
    m: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    integrator: Literal["explicit", "linesearch", "semi_implicit"] = "semi_implicit"
    dt_initial: float = 1e-3
    safety: float = 0.5
    remesh_every: int = 25
    N: int = 256
    t_max: float = 10.0
    sigma_tol: float = 1e-6
    max_steps: int = 100_000
    record_every: int = 1
    blowup_ceiling: float = BLOWUP_CEILING

    @model_validator(mode="after")
    def _valid_flow(self):
        self.to_flow_config()
        return self

    def to_flow_config(self) -> FlowConfig:
        return FlowConfig(**self.model_dump())


class ScenarioConfig(_Strict):
    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    shape: ShapeSection
    flow: FlowSection = Field(default_factory=FlowSection)
    snapshot_every: int = Field(ge=1)
    output_dir: str | None = None

    @property
    def flow_config(self) -> FlowConfig:
        return self.flow.to_flow_config()

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir) if self.output_dir else Path("runs") / self.name

    def initial_curve(self) -> DiscreteCurve:
        return self.shape.build(self.flow.N)


def config_from_dict(data: Any) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario file must contain a mapping at the top level")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def bundled_scenarios() -> list[str]:
    root = resources.files("hiflow") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(source) -> ScenarioConfig:
    """Load a scenario from a YAML path or by bundled scenario name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in bundled_scenarios():
        text = (resources.files("hiflow") / "scenarios" / f"{source}.yaml").read_text()
    else:
        raise ConfigError(f"no scenario file or bundled scenario named {source!r}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# persistence

def write_diagnostics_csv(path, records: list[DiagnosticsRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(rec.csv_row())
    return path


def read_diagnostics_csv(path) -> list[dict[str, float]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected CSV header")
    return [{k: float(v) for k, v in zip(CSV_COLUMNS, row)} for row in rows[1:]]


def _record_dict(rec: DiagnosticsRecord | None) -> dict | None:
    if rec is None:
        return None
    values = [float(v) for v in rec.csv_row()]
    out = dict(zip(CSV_COLUMNS, values))
    out["winding"], out["self_int"] = rec.winding, int(rec.self_intersecting)
    return out


@dataclass
class RunManifest:
    scenario: dict
    version: str
    started: str
    finished: str
    termination_reason: str
    message: str
    steps: int
    final: dict | None
    files: dict = field(default_factory=dict)
    output_dir: str = ""

    @property
    def failed(self) -> bool:
        return self.termination_reason in NUMERICAL_FAILURES

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def paths(self) -> list[Path]:
        root = Path(self.output_dir)
        out = [root / self.files["csv"]]
        out += [root / p for p in self.files["snapshots"]]
        out += [root / p for p in self.files["svg"]]
        return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_scenario(config: ScenarioConfig, output_dir=None) -> RunManifest:
    """Run one scenario and write diagnostics.csv, snapshots/, final.svg and
    manifest.json into its output directory.

    File paths in the manifest are relative to the output directory. Stepper
    failures do not raise; they end up in ``termination_reason``.
    """
    out = Path(output_dir) if output_dir is not None else config.resolved_output_dir()
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    started = _now()
    flow_cfg = config.flow_config
    traj = run_flow(config.initial_curve(), flow_cfg, snapshot_every=config.snapshot_every)

    files: dict = {"csv": "diagnostics.csv", "snapshots": [], "svg": []}
    write_diagnostics_csv(out / files["csv"], traj.records)
    for step, t, curve in traj.snapshots:
        rel = f"snapshots/step_{step:08d}.txt"
        write_snapshot(out / rel, curve, t)
        files["snapshots"].append(rel)
    if traj.final_state is not None:
        write_snapshot(out / "snapshots/final.txt", traj.final_state.curve, traj.final_state.t)
        files["snapshots"].append("snapshots/final.txt")
        render_svg(out / "snapshots/final.txt", out / "final.svg", overlay_circle=True)
        files["svg"].append("final.svg")

    manifest = RunManifest(
        scenario=config.model_dump(),
        version=__version__,
        started=started,
        finished=_now(),
        termination_reason=traj.termination_reason,
        message=traj.message,
        steps=traj.final_state.step_count if traj.final_state else 0,
        final=_record_dict(traj.records[-1] if traj.records else None),
        files=files,
        output_dir=str(out),
    )
    (out / "manifest.json").write_text(manifest.to_json(), newline="\n")
    log.info("%s: %s, %d steps", config.name, manifest.termination_reason, manifest.steps)
    return manifest


def verify_manifest(path) -> RunManifest:
    """Reload a manifest and every file it lists; raise if any is missing or unreadable."""
    path = Path(path)
    data = json.loads(path.read_text())
    data["output_dir"] = str(path.parent)
    manifest = RunManifest(**data)
    root = path.parent
    read_diagnostics_csv(root / manifest.files["csv"])
    for rel in manifest.files["snapshots"]:
        read_snapshot(root / rel)
    for rel in manifest.files["svg"]:
        text = (root / rel).read_text()
        if not text.startswith("<svg") or "</svg>" not in text:
            raise ValueError(f"{rel}: not an SVG document")
    return manifest


def run_batch(configs: list[ScenarioConfig], workers: int = 1) -> list[RunManifest]:
    """Run several scenarios, in parallel processes when ``workers > 1``.

    Names must be unique since each scenario owns its output directory.
    """
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique within a batch")
    if workers <= 1 or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_scenario, configs))


# ---------------------------------------------------------------------------
# epsilon sweep

@dataclass(frozen=True)
class SweepRow:
    eps: float
    hausdorff: float
    length_gap: float
    max_k_gap: float

    def csv_row(self) -> list[str]:
        return [f"{v:.17g}" for v in (self.eps, self.hausdorff, self.length_gap, self.max_k_gap)]


def _sweep_flow(args) -> DiscreteCurve:
    curve, cfg = args
    traj = run_flow(curve, cfg)
    if traj.termination_reason != "t_max":
        raise BlowupError(f"eps={cfg.beta}: flow stopped early ({traj.termination_reason}) {traj.message}")
    return traj.final_state.curve


def sweep_flow_config(base: FlowConfig, eps: float, t_compare: float) -> FlowConfig:
    """The flow of int 1 + eps k^2 ds run exactly to ``t_compare``."""
    kw = {**asdict(base), "m": 1, "alpha": 1.0, "beta": float(eps), "t_max": float(t_compare),
          "sigma_tol": 1e-300, "max_steps": 10**9}
    return FlowConfig(**kw)


def degiorgi_sweep(base: ScenarioConfig, epsilons, t_compare: float, workers: int = 1) -> list[SweepRow]:
    """Compare the flows of int 1 + eps k^2 ds with curve shortening at ``t_compare``.

    Exploratory: the rows carry no claim about the eps -> 0 limit. Each row
    holds the Hausdorff distance between the two curves and the differences
    (eps-flow minus baseline) of length and max |k|.
    """
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ConfigError("epsilon list is empty")
    if any(not e > 0 for e in eps):
        raise ConfigError("epsilons must be positive")
    if any(a <= b for a, b in zip(eps, eps[1:])):
        raise ConfigError("epsilons must be strictly descending")
    if not t_compare > 0:
        raise ConfigError("t_compare must be positive")
    flow = base.flow_config
    initial = base.initial_curve()
    try:
        baseline = run_curve_shortening(initial, t_compare, N=flow.N, safety=flow.safety,
                                        remesh_every=flow.remesh_every, ceiling=flow.blowup_ceiling).curve
    except BlowupError as exc:
        raise ConfigError(f"curve shortening baseline blew up before t_compare={t_compare}; "
                          f"choose a smaller t_compare ({exc})") from exc
    jobs = [(initial, sweep_flow_config(flow, e, t_compare)) for e in eps]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(_sweep_flow, jobs))
    else:
        finals = [_sweep_flow(j) for j in jobs]
    base_rec = measure_curve(baseline, 1, 1.0, 1.0)
    rows = []
    for e, curve in zip(eps, finals):
        rec = measure_curve(curve, 1, 1.0, e)
        rows.append(SweepRow(e, hausdorff_distance(curve, baseline), rec.length - base_rec.length,
                             rec.max_abs_curvature - base_rec.max_abs_curvature))
    return rows


def write_sweep_csv(path, rows: list[SweepRow]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())
    return path


__all__ = [
    "FlowSection", "RunManifest", "ScenarioConfig", "ShapeSection", "SweepRow", "bundled_scenarios",
    "config_from_dict", "degiorgi_sweep", "load_config", "read_diagnostics_csv", "run_batch",
    "run_scenario", "sweep_flow_config", "verify_manifest", "write_diagnostics_csv", "write_sweep_csv",
]
