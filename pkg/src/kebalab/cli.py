"""Command-line entry points: run, sweep, compare-baselines, similarity, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from kebalab.experiments import (
    ScenarioConfig,
    compare_baselines,
    export_metrics,
    noise_sweep,
    paired_similarity,
    run_scenario,
)
from kebalab.persistence import LoadError, write_save


def _load_scenario(path: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.from_path(path)
    except (LoadError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _emit(payload, out: str | None, filename: str) -> None:
    text = json.dumps(payload, indent=1)
    if out:
        target = Path(out) / filename
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text + "\n")
        print(f"wrote {target}")
    else:
        print(text)


def cmd_run(args) -> int:
    config = _load_scenario(args.scenario)
    result = run_scenario(config)
    if args.out:
        formats = tuple(args.format) if args.format else ("csv", "json-lines")
        for path in export_metrics(result.metrics, args.out, formats):
            print(f"wrote {path}")
    else:
        print(json.dumps(result.metrics.to_dict()["summaries"], indent=1))
    if args.save:
        print(f"wrote {write_save(result.simulation, args.save)}")
    return 0


def cmd_sweep(args) -> int:
    config = _load_scenario(args.scenario)
    values = [float(v) for v in args.values.split(",")]
    if args.param in ("noise", "noise_amplitude"):
        table = noise_sweep(config, values, seeds=args.seeds, jobs=args.jobs)
    else:
        table = []
        for value in values:
            level_config = config.with_overrides(
                world=dict(config.world, **{args.param: value}))
            report = compare_baselines(level_config, seeds=args.seeds, jobs=args.jobs)
            table.append({args.param: value,
                          "median_survival": report["median_survival"]})
    _emit(table, args.out, f"sweep_{args.param}.json")
    return 0


def cmd_compare_baselines(args) -> int:
    config = _load_scenario(args.scenario)
    report = compare_baselines(config, seeds=args.seeds, jobs=args.jobs)
    _emit(report, args.out, "baselines.json")
    return 0


def cmd_similarity(args) -> int:
    config = _load_scenario(args.scenario)
    levels = tuple(int(level) for level in args.levels.split(","))
    report = paired_similarity(config, pairs=args.pairs, levels=levels)
    _emit(report, args.out, "similarity.json")
    return 0


def cmd_serve(args) -> int:
    config = _load_scenario(args.scenario)
    if args.headless:
        result = run_scenario(config)
        if args.out:
            for path in export_metrics(result.metrics, args.out):
                print(f"wrote {path}")
        else:
            print(json.dumps(result.metrics.to_dict()["summaries"], indent=1))
        return 0
    from kebalab.server import serve
    print(f"serving ws://{args.host}:{args.port}/ws (scenario: {config.name})")
    serve(config, host=args.host, port=args.port,
          record_path=args.record, start_paused=args.start_paused)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kebalab",
        description="Deterministic virtual laboratory for koncept-learning animats.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and export its metrics")
    run.add_argument("scenario")
    run.add_argument("--out", help="directory for series/summary files")
    run.add_argument("--format", nargs="*", choices=("csv", "json-lines"))
    run.add_argument("--save", help="write the final simulation state here")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="sweep one world parameter over seeds")
    sweep.add_argument("scenario")
    sweep.add_argument("--param", default="noise")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--seeds", type=int, default=20)
    sweep.add_argument("--jobs", type=int, default=0, help="0 = all cores")
    sweep.add_argument("--out")
    sweep.set_defaults(func=cmd_sweep)

    compare = sub.add_parser("compare-baselines",
                             help="koncept vs random vs no-action survival")
    compare.add_argument("scenario")
    compare.add_argument("--seeds", type=int, default=20)
    compare.add_argument("--jobs", type=int, default=0)
    compare.add_argument("--out")
    compare.set_defaults(func=cmd_compare_baselines)

    similarity = sub.add_parser("similarity",
                                help="koncept similarity between paired animats")
    similarity.add_argument("scenario")
    similarity.add_argument("--pairs", type=int, default=10)
    similarity.add_argument("--levels", default="1,2")
    similarity.add_argument("--out")
    similarity.set_defaults(func=cmd_similarity)

    serve_cmd = sub.add_parser("serve", help="run the live lab server")
    serve_cmd.add_argument("--scenario", required=True)
    serve_cmd.add_argument("--host", default="127.0.0.1")
    serve_cmd.add_argument("--port", type=int, default=8765)
    serve_cmd.add_argument("--headless", action="store_true",
                           help="no server: run the scenario and exit")
    serve_cmd.add_argument("--record", help="append steering commands to this log")
    serve_cmd.add_argument("--start-paused", action="store_true")
    serve_cmd.add_argument("--out", help="headless mode: metrics directory")
    serve_cmd.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
