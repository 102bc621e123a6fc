"""Simulate every shipped preset and print one line per run.

    python scripts/run_presets.py [--out out/presets] [--names negative_energy ...]
"""
import argparse
from pathlib import Path

from logwave.config import PRESETS, preset_config
from logwave.runner import cmd_simulate


def fmt(v, w):
    return f"{v:{w}.5g}" if v is not None else "-".rjust(w)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/presets")
    ap.add_argument("--names", nargs="*", default=list(PRESETS))
    args = ap.parse_args()
    print(f"{'preset':22s} {'E0':>10s} {'termination':>12s} {'T_num':>10s} {'T_lower':>10s} {'T_upper':>10s}  failed")
    for name in args.names:
        s = cmd_simulate(preset_config(name), Path(args.out) / name)
        rep = s.report
        lower = rep.lower.T_lower if rep.lower else None
        print(f"{name:22s} {s.regime.E0:10.5g} {s.termination:>12s} {fmt(rep.T_num, 10)} {fmt(lower, 10)} "
              f"{fmt(rep.T_upper, 10)}  {','.join(s.failed) or '-'}  ({s.wall_clock:.1f}s)")


if __name__ == "__main__":
    main()
