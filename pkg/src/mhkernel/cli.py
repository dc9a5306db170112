"""Command-line experiment runner.

Exit codes: 0 when every verdict passes, 2 when any verdict fails, 1 on
configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .experiments import RUNNERS, ConfigError, ExperimentConfig, _version_string

_FLAG_TO_FIELD = {
    "seed": "seed",
    "out": "out",
    "dim": "dim",
    "q": "q",
    "ratio": "ratio",
    "samples": "n_mc",
    "threads": "threads",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhkernel",
        description="Desk-scale verification experiments for singular-kernel "
        "smoothing and hyperplane-arrangement ensembles on the sphere.",
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name in list(RUNNERS) + ["all"]:
        sub = subparsers.add_parser(name, help=f"run the {name} experiment(s)")
        sub.add_argument("--config", type=Path, help="JSON config file; flags override its values")
        sub.add_argument("--seed", type=int, help="root seed for all substreams")
        sub.add_argument("--out", type=str, help="output directory for CSV and summary files")
        sub.add_argument("--dim", type=int, help="sphere dimension d")
        sub.add_argument("--q", type=float, help="kernel exponent (negative)")
        sub.add_argument("--ratio", type=float, help="geometric ratio of the arrangement-size pmf")
        sub.add_argument("--samples", type=int, help="Monte Carlo sample count (n_mc)")
        sub.add_argument("--threads", type=int, help="worker threads; results do not depend on this")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        overrides = {field: getattr(args, flag) for flag, field in _FLAG_TO_FIELD.items()}
        config = config.with_overrides(**overrides)
        config.validate()

        names = list(RUNNERS) if args.experiment == "all" else [args.experiment]
        start = time.perf_counter()
        reports = []
        for name in names:
            report = RUNNERS[name](config)
            csv_path, _ = report.write(Path(config.out))
            print(f"{name}: {'pass' if report.passed else 'FAIL'} ({csv_path})")
            reports.append(report)
        if args.experiment == "all":
            payload = {
                "version": _version_string(),
                "seed": config.seed,
                "total_wall_time_seconds": time.perf_counter() - start,
                "experiments": {r.name: r.passed for r in reports},
                "passed": all(r.passed for r in reports),
            }
            all_path = Path(config.out) / "all.summary.json"
            with all_path.open("w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 0 if all(r.passed for r in reports) else 2
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
