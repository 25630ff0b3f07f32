"""``frfilter`` command-line entry point.

    frfilter [--out DIR] [--threads N] [--seed-offset K] converge CONFIG.json
    frfilter [--out DIR] geometry CONFIG.json
    frfilter selftest [--suite NAME ...] [--tamper]

Exit status is 0 on success, 1 on a failed self-test and 2 on invalid
input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .errors import ConfigError, FRFilterError


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frfilter", description="Fisher-Rao proximal filter experiments")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for convergence cells")
    p.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("converge", help="proximal filter vs Kalman-Bucy oracle over step sizes")
    c.add_argument("config", type=Path)

    g = sub.add_parser("geometry", help="tabulate distances, geodesics and gradient checks")
    g.add_argument("config", type=Path)

    s = sub.add_parser("selftest", help="run invariant suites with fixed seeds")
    s.add_argument("--suite", action="append", choices=sorted(bench.SUITES), help="repeatable; default all")
    s.add_argument("--tamper", action="store_true", help=argparse.SUPPRESS)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        if args.command == "converge":
            cfg = bench.ExperimentConfig.from_dict(args.config)
            result = bench.run_convergence(cfg, threads=args.threads, seed_offset=args.seed_offset)
            out = args.out if args.out is not None else Path(cfg.out_dir)
            csv_path, summary_path = bench.write_convergence(result, out)
            sys.stdout.write(result.summary())
            print(f"wrote {csv_path} and {summary_path}")
        elif args.command == "geometry":
            cfg = bench.GeometryConfig.from_dict(args.config)
            out = args.out if args.out is not None else Path(cfg.out_dir)
            path = bench.write_geometry(bench.run_geometry(cfg), out)
            print(f"wrote {path}")
        else:
            report = bench.run_selftest(args.suite, tamper=args.tamper)
            sys.stdout.write(report.format())
            return 0 if report.ok else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FRFilterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
