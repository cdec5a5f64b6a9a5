"""Command-line interface.

    paqt run --config cfg.json [--out DIR] [--trials T] [--seed S] [--workers W]
    paqt run --preset fig2 [--full-scale] ...
    paqt aggregate results/raw.csv
    paqt postselect results/raw.csv --threshold-grid 0 100 200

Exit codes: 0 success, 2 configuration error, 3 runtime error.  The
PAQT_OUT environment variable overrides --out.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, PaqtError
from .harness import (
    RunConfig,
    aggregate_from_rows,
    emit,
    postselect_table,
    read_raw_csv,
    read_sidecar,
    run,
)
from .presets import PRESET_NAMES, get_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="paqt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch of simulated tomography trials")
    p_run.add_argument("--config", type=Path, help="JSON run configuration file")
    p_run.add_argument("--preset", choices=PRESET_NAMES, help="named experiment preset")
    p_run.add_argument("--trials", type=int, help="override trial count")
    p_run.add_argument("--seed", type=int, help="override master seed")
    p_run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    p_run.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    p_run.add_argument(
        "--full-scale",
        action="store_true",
        help="use the long paper-scale protocols instead of desk scale",
    )
    p_run.set_defaults(func=_cmd_run)

    p_agg = sub.add_parser("aggregate", help="recompute aggregates from a raw CSV")
    p_agg.add_argument("raw", type=Path, help="path to raw.csv")
    p_agg.set_defaults(func=_cmd_aggregate)

    p_post = sub.add_parser("postselect", help="sweep an ESS postselection threshold")
    p_post.add_argument("raw", type=Path, help="path to raw.csv")
    p_post.add_argument(
        "--threshold-grid", type=float, nargs="+", required=True, help="thresholds to sweep"
    )
    p_post.add_argument("--estimator", default="bme", help="estimator column to score")
    p_post.add_argument("--out", type=Path, help="output CSV (default: postselect.csv beside raw)")
    p_post.set_defaults(func=_cmd_postselect)
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("exactly one of --config or --preset is required")
    if args.preset is not None:
        variants = get_preset(
            args.preset, full_scale=args.full_scale, trials=args.trials, seed=args.seed
        )
    else:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        if args.trials is not None:
            data["trials"] = args.trials
        if args.seed is not None:
            data["seed"] = args.seed
        variants = [(None, RunConfig.from_dict(data))]

    out_root = Path(os.environ.get("PAQT_OUT", args.out))
    for label, config in variants:
        outdir = out_root / label if label is not None else out_root
        result = run(config, workers=args.workers)
        paths = emit(result, outdir)
        print(
            f"{label or 'run'}: {config.trials} trials, {config.iterations} iterations "
            f"-> {paths['raw']}"
        )
    return EXIT_OK


def _cmd_aggregate(args: argparse.Namespace) -> int:
    rows = read_raw_csv(args.raw)
    aggregates = aggregate_from_rows(rows)
    out_path = args.raw.parent / "aggregates.csv"
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ("config_hash", "k", "shots", "estimator", "metric", "count", "mean", "median", "q16", "q84")
        )
        for agg in aggregates:
            writer.writerow(
                [
                    agg.config_hash,
                    agg.iteration,
                    agg.cumulative_shots,
                    agg.estimator,
                    agg.metric,
                    agg.count,
                    _fmt(agg.mean),
                    _fmt(agg.median),
                    _fmt(agg.q16),
                    _fmt(agg.q84),
                ]
            )
    print(out_path)
    return EXIT_OK


def _cmd_postselect(args: argparse.Namespace) -> int:
    rows = read_raw_csv(args.raw)
    floors = _ess_floors(args.raw, rows)
    table = postselect_table(rows, floors, args.threshold_grid, estimator=args.estimator)
    out_path = args.out or args.raw.parent / "postselect.csv"
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ("n_th", "accepted", "acceptance_probability", "mean_infidelity", "median_infidelity")
        )
        for entry in table:
            writer.writerow(
                [
                    _fmt(entry["n_th"]),
                    entry["accepted"],
                    _fmt(entry["acceptance_probability"]),
                    _fmt(entry["mean_infidelity"]),
                    _fmt(entry["median_infidelity"]),
                ]
            )
    print(out_path)
    return EXIT_OK


def _ess_floors(raw_path: Path, rows: list[dict]) -> dict[int, float]:
    """Exact floors from the sidecar when available, else min checkpoint ESS."""
    sidecar_path = raw_path.parent / "run.json"
    if sidecar_path.exists():
        sidecar = read_sidecar(sidecar_path)
        floors = {
            entry["trial"]: entry["ess_floor_seen"]
            for entry in sidecar.get("trials", [])
            if entry.get("ess_floor_seen") is not None
        }
        if floors:
            return floors
    floors: dict[int, float] = {}
    for row in rows:
        if row["ess"] is not None:
            trial = row["trial"]
            floors[trial] = min(floors.get(trial, float("inf")), row["ess"])
    if not floors:
        raise PaqtError(f"{raw_path}: no effective-sample-size data to postselect on")
    return floors


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"paqt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"paqt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PaqtError, OSError, ValueError) as exc:
        print(f"paqt: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
