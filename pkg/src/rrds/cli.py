"""Command-line interface.

Subcommands mirror the pipeline stages plus ``simulate`` for the whole run:

    rrds generate  --config C [--rep K] [--seed S] [--out D]
    rrds recruit   --config C [--rep K] [--arm A] ...
    rrds estimate  --config C [--rep K] [--arm A] [--estimator E] ...
    rrds metrics   --config C [--rep K] [--arm A] ...
    rrds simulate  --config C [--reps N] [--seed S] [--out D] [--workers W] ...

``--config`` takes a TOML path, or the name of a packaged preset when no such
file exists (``baseline`` ships with the package). Exit codes: 0 success,
1 invalid configuration, 2 runtime or data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ScenarioConfig, load_config, preset_path, with_run_overrides
from .errors import ConfigurationError, EstimationError, InputError
from .files import read_json
from .scenario import (
    ARMS,
    POINT_ESTIMATORS,
    rep_dir,
    run_scenario,
    stage_estimate,
    stage_generate,
    stage_metrics,
    stage_recruit,
)


def _add_common(sub: argparse.ArgumentParser, stage: bool) -> None:
    sub.add_argument("--config", required=True, help="TOML config path or preset name")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--out", default=None, help="output directory override")
    sub.add_argument(
        "--workers", type=int, default=None, help="worker process count override"
    )
    sub.add_argument(
        "-v", "--verbose", action="store_true", help="log progress to stderr"
    )
    if stage:
        sub.add_argument(
            "--rep", type=int, default=0, help="replication index (default 0)"
        )
    else:
        sub.add_argument(
            "--reps", type=int, default=None, help="replication count override"
        )


def _add_arm(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--arm",
        choices=[*ARMS, "both"],
        default="both",
        help="recruitment design(s) to run (default both)",
    )


def _add_estimator(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--estimator",
        choices=[*POINT_ESTIMATORS, "both"],
        default="both",
        help="estimator(s) to run; the naive baseline is always included",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrds",
        description="Chain-referral sampling simulator and estimation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"rrds {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("generate", help="population and contact graph")
    _add_common(gen, stage=True)

    rec = commands.add_parser("recruit", help="seeds and recruitment forests")
    _add_common(rec, stage=True)
    _add_arm(rec)

    est = commands.add_parser("estimate", help="attribute estimates with intervals")
    _add_common(est, stage=True)
    _add_arm(est)
    _add_estimator(est)

    met = commands.add_parser("metrics", help="wave statistics and metric cells")
    _add_common(met, stage=True)
    _add_arm(met)

    sim = commands.add_parser("simulate", help="full pipeline over all replications")
    _add_common(sim, stage=False)
    _add_arm(sim)
    _add_estimator(sim)
    return parser


def _resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    path = Path(args.config)
    if not path.is_file() and "/" not in args.config and "\\" not in args.config:
        path = preset_path(args.config)
    config = load_config(path)
    return with_run_overrides(
        config,
        master_seed=args.seed,
        replications=getattr(args, "reps", None),
        out_dir=args.out,
        workers=args.workers,
    )


def _arms(args: argparse.Namespace) -> tuple[str, ...]:
    return ARMS if args.arm == "both" else (args.arm,)


def _estimators(args: argparse.Namespace) -> tuple[str, ...]:
    choice = getattr(args, "estimator", "both")
    return POINT_ESTIMATORS if choice == "both" else (choice,)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _resolve_config(args)
        out = Path(config.run.out_dir)
        if args.command == "generate":
            graph = stage_generate(config, args.rep, out)
            print(
                f"wrote {rep_dir(out, args.rep)}: {graph.n} nodes, "
                f"{graph.edge_count} edges"
            )
        elif args.command == "recruit":
            result = stage_recruit(config, args.rep, out, _arms(args))
            for arm, (forest, _, sample) in result.items():
                print(
                    f"wrote {rep_dir(out, args.rep) / arm}: "
                    f"{len(forest.node_ids())} surveyed ({len(sample)} estimable), "
                    f"{forest.waves_realized()} waves"
                )
        elif args.command == "estimate":
            for arm in _arms(args):
                reports = stage_estimate(config, args.rep, out, arm, _estimators(args))
                print(f"wrote {rep_dir(out, args.rep) / arm / 'estimates.json'}:")
                for report in reports:
                    print(
                        f"  {arm} {report.estimator} {report.attribute}: "
                        f"{report.point:.4f} [{report.ci_low:.4f}, {report.ci_high:.4f}]"
                    )
        elif args.command == "metrics":
            for arm in _arms(args):
                result = stage_metrics(config, args.rep, out, arm)
                print(
                    f"wrote {rep_dir(out, args.rep) / arm / 'metrics.json'}: "
                    f"{len(result['cells'])} cells, "
                    f"{len(result['stats'])} waves"
                )
        else:
            manifest = run_scenario(config, _arms(args), _estimators(args))
            for failure in manifest["failures"]:
                print(
                    f"replication {failure['rep']} failed: {failure['error']}",
                    file=sys.stderr,
                )
            print(f"wrote {out / 'manifest.json'} ({manifest['status']})")
            if manifest["status"] != "ok":
                return 2
            aggregate = read_json(out / "aggregate.json")
            for arm in manifest["arms"]:
                stats = aggregate["arms"][arm]
                print(
                    f"{arm}: mean final size {stats['final_unique_mean']:.1f}, "
                    f"mean new per wave {stats['new_per_wave_mean']:.1f}"
                )
            ratios = aggregate["ratios_rrds_over_rds"]
            if ratios and ratios["final_unique"] is not None:
                print(f"rrds/rds final size ratio: {ratios['final_unique']:.2f}")
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, EstimationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
