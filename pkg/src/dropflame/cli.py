"""Command-line entry point.

The primary interface to this package is the library API plus the
narrative scripts in demos/; the CLI is a thin wrapper for running
bundled or user-written case files:

    dropflame run <case.cfg> [--restart <ckpt>] [--end-time s]
                  [--threads n] [--preset d2law|stefan|ign0d|case1|case2|case3]

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
abort. The output directory from the case file can be overridden with
the DROPFLAME_OUTPUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path


def _limit_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dropflame",
        description="Axisymmetric two-phase droplet evaporation, "
                    "boiling, and combustion on a fiber.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a case file or preset")
    run_p.add_argument("case", nargs="?", default=None,
                       help="path to a case.cfg (omit when using "
                            "--preset)")
    run_p.add_argument("--restart", metavar="CKPT", default=None,
                       help="continue from a checkpoint (.npz)")
    run_p.add_argument("--end-time", type=float, default=None,
                       metavar="S", help="override the end time [s]")
    run_p.add_argument("--threads", type=int, default=None, metavar="N",
                       help="cap BLAS/OpenMP thread counts")
    run_p.add_argument("--preset", default=None,
                       choices=["d2law", "stefan", "ign0d",
                                "case1", "case2", "case3"],
                       help="run a bundled case")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.threads:
        _limit_threads(args.threads)

    # deferred so --threads can act before numpy spins up thread pools
    from . import case as case_mod

    if args.case is None and args.preset is None:
        print("error: provide a case file or --preset", file=sys.stderr)
        return case_mod.EXIT_VALIDATION
    path = Path(args.case) if args.case else case_mod.preset_path(
        args.preset)
    try:
        cfg = case_mod.load_case(path)
        if args.restart:
            if not Path(args.restart).is_file():
                raise case_mod.CaseValidationError(
                    [f"--restart: checkpoint not found: {args.restart}"])
            cfg.run_restart = args.restart
        report = case_mod.run(cfg, end_time=args.end_time,
                              base_dir=path.parent)
    except case_mod.CaseValidationError as exc:
        print(str(exc), file=sys.stderr)
        return case_mod.EXIT_VALIDATION

    for key in ("status", "reason", "time", "step", "wall_time",
                "output_dir", "ignition_delay", "m_area"):
        if report.get(key) not in (None, ""):
            print(f"{key}: {report[key]}")
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
