from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from typing import Optional, Sequence

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, FloquetError
from .harness import COMMANDS, CommandResult

logger = logging.getLogger("floquet_well")


def _parse_seeds(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip().replace(" ", "")
        if not part:
            continue
        try:
            z = complex(part)
        except ValueError:
            raise ConfigError(f"--seeds: cannot read {part!r} as a complex number") from None
        if z.imag > 0.0:
            raise ConfigError(f"--seeds: {part} has Im > 0")
        out.append(z)
    if not out:
        raise ConfigError("--seeds: empty list")
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-well",
        description="Floquet quasienergies and decay of a driven metastable well.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for solver detail")
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="directory for output files (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="table format")
    parser.add_argument("--seeds", help="comma-separated complex seeds, e.g. 3.2205-0.0011j,11.12-0.25j")
    parser.add_argument("--sidebands", type=int, help="side-band truncation N")
    parser.add_argument("command", choices=sorted(COMMANDS))
    return parser


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.seeds:
        cfg = dataclasses.replace(cfg, seeds=_parse_seeds(args.seeds))
    if args.sidebands is not None:
        if args.sidebands < 0:
            raise ConfigError("--sidebands: must be >= 0")
        cfg = dataclasses.replace(cfg, drive=dataclasses.replace(cfg.drive, sidebands=args.sidebands))
    if args.format or args.out:
        cfg = dataclasses.replace(cfg, output=dataclasses.replace(
            cfg.output,
            format=args.format or cfg.output.format,
            directory=args.out or cfg.output.directory,
        ))
    return cfg


def _emit(result: CommandResult, directory: Optional[str]) -> None:
    if result.stdout:
        sys.stdout.write(result.stdout)
    if directory is None:
        if not result.stdout:
            sys.stdout.write(result.primary)
        return
    os.makedirs(directory, exist_ok=True)
    for name, text in result.files.items():
        with open(os.path.join(directory, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        logger.info("wrote %s", os.path.join(directory, name))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")

    try:
        cfg = _apply_overrides(load_config(args.config), args)
        result = COMMANDS[args.command](cfg)
        _emit(result, cfg.output.directory)
    except FloquetError as exc:
        print(f"{args.command}: {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
