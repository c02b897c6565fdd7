"""Command line entry point: ``run``, ``inject-lesson`` and ``report``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .backend import BackendError, FixtureError
from .evaluation import ReportError
from .harness import RunConfig, Strategy, inject_lesson, run
from .memory import TraceError
from .report import render_tables, report
from .scheduler import ConfigurationError
from .textworld import bundled_suite_path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexreflect", description="Mentor-actor planning with flexible reflection.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a strategy over a scenario suite")
    r.add_argument("--suite", default=str(bundled_suite_path()), help="suite directory or suite.json (default: bundled)")
    r.add_argument("--strategy", default="FCRF", help=", ".join(s.value for s in Strategy))
    r.add_argument("--episodes", type=int, default=5, help="trial budget per task")
    r.add_argument("--backend", default="scripted:fcrf_demo", help="scripted:PATH|NAME or live:URL")
    r.add_argument("--model", default="gpt-4o-mini", help="model id for live backends")
    r.add_argument("--k-window", type=int, default=3, help="reflections shown to the actor")
    r.add_argument("--pool-cap", type=int, default=50, help="lesson pool capacity")
    r.add_argument("--pool", default=None, help="initial lesson pool (JSONL)")
    r.add_argument("--max-steps", type=int, default=50)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--parallel", action="store_true", help="run tasks concurrently on a pool snapshot")

    i = sub.add_parser("inject-lesson", help="add a human-written lesson to a pool file")
    i.add_argument("--pool", required=True)
    i.add_argument("--text", required=True)
    i.add_argument("--pool-cap", type=int, default=50)

    rep = sub.add_parser("report", help="render tables for one run or compare several")
    rep.add_argument("dirs", nargs="+", help="run directories")
    rep.add_argument("--out", default=None, help="write comparison CSVs and figure here")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            config = RunConfig(
                suite=args.suite,
                strategy=args.strategy,
                ep_total=args.episodes,
                backend=args.backend,
                k_window=args.k_window,
                pool_capacity=args.pool_cap,
                out_dir=args.out,
                seed=args.seed,
                parallel=args.parallel,
                max_steps=args.max_steps,
                pool_path=args.pool,
                model_id=args.model,
            )
            result = run(config)
            print(render_tables([result]), end="")
            print(f"\nwrote {args.out}")
        elif args.command == "inject-lesson":
            lesson = inject_lesson(args.pool, args.text, args.pool_cap)
            if lesson is None:
                print("notice: an equivalent lesson is already in the pool; nothing added")
            else:
                print(f"added lesson {lesson.id}")
        else:
            print(report(args.dirs, args.out), end="")
    except (ValueError, KeyError, ConfigurationError, FixtureError) as exc:
        if isinstance(exc, (ReportError, TraceError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
