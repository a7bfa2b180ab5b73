"""Command line entry point ``mhd``.

    mhd converge|conserve|adapt|compare --config FILE [--out DIR] [--threads N]
        [--set key=value ...] [--no-plots] [-v]

On failure a single JSON line ``{"error": code, "type": ..., "message": ...}``
goes to stderr and the exit status is nonzero (2 for bad input, 3 for
numerical failures, 1 for anything unexpected).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import InvalidArgument, MHDError
from .experiments import KINDS, RunConfig, run

EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_INTERNAL = 1


def _parse_set(items):
    """``key=value`` pairs; values are parsed as JSON when possible."""
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidArgument(f"--set expects key=value, got {item!r}")
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mhd", description="Run PIM/BDF2-AB2 MHD experiments and write CSV tables.")
    p.add_argument("kind", choices=KINDS, help="experiment to run")
    p.add_argument("--config", required=True, help="JSON experiment file")
    p.add_argument("--out", default=None, help="output directory (default: config value or .)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for the two field solves of a sweep")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry (repeatable)")
    p.add_argument("--no-plots", action="store_true", help="write CSV files only")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _error_line(exc: BaseException, code: str) -> str:
    return json.dumps({"error": code, "type": type(exc).__name__, "message": str(exc)})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = _parse_set(args.set)
        overrides["kind"] = args.kind
        if args.out is not None:
            overrides["out"] = args.out
        if args.threads is not None:
            overrides["threads"] = args.threads
        if args.no_plots:
            overrides["plots"] = False
        cfg = RunConfig.from_file(args.config, **overrides)
        result = run(cfg)
    except InvalidArgument as exc:
        print(_error_line(exc, exc.code), file=sys.stderr)
        return EXIT_INPUT
    except MHDError as exc:
        print(_error_line(exc, exc.code), file=sys.stderr)
        return EXIT_NUMERICAL
    except (TypeError, ValueError) as exc:
        # malformed config values surface here (e.g. a string where a number goes)
        print(_error_line(exc, "invalid-argument"), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - the contract is one error line
        print(_error_line(exc, "internal"), file=sys.stderr)
        return EXIT_INTERNAL
    for path in result.get("files", ()):
        print(path)
    if "summary" in result:
        summary = {k: (None if isinstance(v, float) and v != v else v)
                   for k, v in result["summary"].items()}
        print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
