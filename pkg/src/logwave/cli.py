"""Command line entry point: ``logwave {analyze,simulate,sweep,verify}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ConfigurationError, ProblemConfig, parse_config, preset_config, tomllib
from .runner import cmd_analyze, cmd_simulate, cmd_sweep, format_items
from .verify import FAULTS, cmd_verify

log = logging.getLogger("logwave")


def load(source: str, seed: int | None) -> ProblemConfig:
    """A config file path, or the name of a shipped preset."""
    if not Path(source).exists() and source in PRESETS:
        cfg = preset_config(source)
    else:
        cfg = parse_config(source)
    return cfg.with_seed(seed) if seed is not None else cfg


def parse_axis(text: str) -> tuple[str, tuple]:
    """``key=v1,v2,...`` or ``key=lo:hi:n`` (n evenly spaced values)."""
    key, sep, vals = text.partition("=")
    if not sep or not vals:
        raise argparse.ArgumentTypeError(f"axis {text!r} is not KEY=VALUES")
    if vals.count(":") == 2 and "," not in vals:
        lo, hi, n = vals.split(":")
        return key.strip(), tuple(float(x) for x in np.linspace(float(lo), float(hi), int(n)))
    out = []
    for v in vals.split(","):
        try:
            out.append(tomllib.loads(f"v = {v.strip()}")["v"])
        except tomllib.TOMLDecodeError:
            out.append(v.strip())
    return key.strip(), tuple(out)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logwave", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="config file, or a preset name: " + ", ".join(PRESETS))
        sp.add_argument("--seed", type=int, default=None, help="overrides well.seed")
        sp.add_argument("--out", default=None, help="output directory (default: output.dir)")

    common(sub.add_parser("analyze", help="well depth, embedding constants, regime of the initial data"))
    common(sub.add_parser("simulate", help="analyze, integrate, audit bounds"))
    sw = sub.add_parser("sweep", help="run a grid of simulations")
    common(sw)
    sw.add_argument("--axis", action="append", type=parse_axis, default=None,
                    help="KEY=v1,v2,... or KEY=lo:hi:n; repeatable; overrides sweep.* keys of the config")
    sw.add_argument("--workers", type=int, default=1)
    vf = sub.add_parser("verify", help="run the property suite; exit status 1 on any failure")
    common(vf, config=False)
    vf.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(0 if args.seed is None else args.seed, args.out, args.inject_fault)
        cfg = load(args.config, args.seed)
        if args.command == "analyze":
            well, regime = cmd_analyze(cfg, args.out)
            print(format_items([(f"well.{k}", v) for k, v in well.as_items()]
                               + [(f"regime.{k}", v) for k, v in regime.as_items()]), end="")
            return 0
        if args.command == "simulate":
            s = cmd_simulate(cfg, args.out)
            rep = s.report
            print(f"termination = {s.termination}")
            if rep.T_num_bracket:
                print(f"T_num bracket = [{rep.T_num_bracket[0]!r}, {rep.T_num_bracket[1]!r}]")
            for name, v in rep.verdicts.items():
                print(f"{name}: {v.status}  {v.detail}")
            log.info("wall clock %.2fs", s.wall_clock)
            return 1 if s.failed else 0
        rows = cmd_sweep(cfg, args.axis, args.out, args.workers)
        bad = [r for r in rows if r["status"] != "ok"]
        print(f"{len(rows)} points, {len(bad)} failed")
        for r in bad:
            print(f"  point {r['index']}: {r['error']}")
        return 1 if bad else 0
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
