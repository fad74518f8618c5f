"""Command-line entry point.

Exit status: 0 pass, 1 certificate failure, 2 config error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from .config import SIEVE_ENV, load_config
from .errors import JarnikError
from .pipeline import Pipeline

SUBCOMMANDS = ("run", "synthesize", "build", "verify", "path", "witness", "sample", "probe", "export")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jarnik", description="Jarnik-type Cantor sets with exact certificates.",
                                epilog=f"The {SIEVE_ENV} environment variable overrides the sieve ceiling.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--mode", choices=("strict", "demo"))
    common.add_argument("--depth", type=str)
    common.add_argument("--seed", type=str)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "path":
            sp.add_argument("--path-mode", choices=("classical", "effective"))
    return p


def _overrides(ns) -> dict:
    out = {"mode": ns.mode, "depth": ns.depth, "seed": ns.seed, "out_dir": ns.out_dir}
    for item in ns.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise JarnikError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def execute(command: str, pipe: Pipeline, path_mode: Optional[str] = None):
    if pipe.singleton:
        return [pipe.singleton_note()]
    if command == "run":
        return pipe.run()
    if command == "path":
        pipe.path(path_mode)
    else:
        getattr(pipe, command)()
    pipe.write_summary()
    return pipe.results


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            cfg = load_config(ns.config, _overrides(ns))
        except JarnikError as exc:
            if type(exc) is JarnikError:  # malformed --set
                exc.code, exc.exit_status = "cli.config", EXIT_CONFIG
            raise
        pipe = Pipeline(cfg)
        results = execute(ns.command, pipe, getattr(ns, "path_mode", None))
    except JarnikError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_status
    for r in results:
        print(json.dumps(r.to_record(), sort_keys=True))
    if pipe.singleton:
        print(results[0].summary["note"])
    return EXIT_PASS if all(r.passed for r in results) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
