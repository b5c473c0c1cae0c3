"""Command line interface: ``hiflow run|sweep|render|selftest``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import BlowupError, ConfigError, DegenerateCurveError, LinesearchFailure, NonUniformGridError, SnapshotParseError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _eps_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiflow", description="Higher-order gradient flows of plane curves.")
    p.add_argument("--version", action="version", version=f"hiflow {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more scenarios")
    run.add_argument("configs", nargs="+", help="scenario YAML files or bundled scenario names")
    run.add_argument("-o", "--output-dir", help="output directory (single scenario only)")
    run.add_argument("-j", "--workers", type=int, default=1, help="parallel scenarios")

    sw = sub.add_parser("sweep", help="compare eps-flows with curve shortening")
    sw.add_argument("config")
    sw.add_argument("--eps", type=_eps_list, default=[1.0, 0.1, 0.01], help="comma-separated, descending")
    sw.add_argument("--t-compare", type=float, default=0.5)
    sw.add_argument("-o", "--output", help="CSV path (default <output_dir>/sweep.csv)")
    sw.add_argument("-j", "--workers", type=int, default=1)

    rd = sub.add_parser("render", help="render a snapshot to SVG")
    rd.add_argument("snapshot")
    rd.add_argument("-o", "--output", required=True)
    rd.add_argument("--overlay-circle", action="store_true", help="draw the fitted circle dashed")
    rd.add_argument("--stroke", default="black")

    sub.add_parser("selftest", help="run the quick oracle checks")
    sub.add_parser("list", help="list bundled scenarios")
    return p


def _run(args) -> int:
    from .runner import load_config, run_batch, run_scenario

    configs = [load_config(c) for c in args.configs]
    if args.output_dir:
        if len(configs) != 1:
            raise ConfigError("--output-dir needs exactly one scenario")
        manifests = [run_scenario(configs[0], args.output_dir)]
    else:
        manifests = run_batch(configs, workers=args.workers)
    code = EXIT_OK
    for m in manifests:
        print(f"{m.scenario['name']}: {m.termination_reason} after {m.steps} steps -> {m.output_dir}")
        if m.failed:
            print(f"  {m.message}", file=sys.stderr)
            code = EXIT_NUMERICAL
    return code


def _sweep(args) -> int:
    from .runner import degiorgi_sweep, load_config, write_sweep_csv

    cfg = load_config(args.config)
    rows = degiorgi_sweep(cfg, args.eps, args.t_compare, workers=args.workers)
    out = Path(args.output) if args.output else cfg.resolved_output_dir() / "sweep.csv"
    write_sweep_csv(out, rows)
    print(f"# exploratory comparison at t={args.t_compare:g}; no claim about eps -> 0")
    print(f"{'eps':>12} {'hausdorff':>14} {'length_gap':>14} {'max_k_gap':>14}")
    for r in rows:
        print(f"{r.eps:12.6g} {r.hausdorff:14.6e} {r.length_gap:14.6e} {r.max_k_gap:14.6e}")
    print(f"wrote {out}")
    return EXIT_OK


def _render(args) -> int:
    from .render import render_svg

    out = render_svg(args.snapshot, args.output, stroke=args.stroke, overlay_circle=args.overlay_circle)
    print(f"wrote {out}")
    return EXIT_OK


def _selftest(args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_NUMERICAL


def _list(args) -> int:
    from .runner import bundled_scenarios

    print("\n".join(bundled_scenarios()))
    return EXIT_OK


COMMANDS = {"run": _run, "sweep": _sweep, "render": _render, "selftest": _selftest, "list": _list}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SnapshotParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowupError, LinesearchFailure, DegenerateCurveError, NonUniformGridError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
