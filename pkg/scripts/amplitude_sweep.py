"""Run configs/amplitude_sweep.toml and compare the E(0), I(u0) crossings
with the closed forms for u0 = c sin x on (0, pi), p = 3.

    python scripts/amplitude_sweep.py [--workers 2] [--out out/amplitude_sweep]
"""
import argparse
import math
from pathlib import Path

from scipy.optimize import brentq

from logwave.config import parse_config
from logwave.runner import cmd_sweep

ROOT = Path(__file__).resolve().parent.parent


def closed_forms(c):
    lg = 4.0 / 3.0 * c**3 * (math.log(c) + math.log(2.0) - 5.0 / 6.0)
    E0 = 0.5 * math.pi * c**2 - lg / 3.0 + 4.0 / 27.0 * c**3
    I0 = math.pi * c**2 - lg
    return E0, I0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "amplitude_sweep.toml"))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    cfg = parse_config(args.config)
    rows = cmd_sweep(cfg, out=args.out, workers=args.workers)
    print(f"{'c':>5s} {'E0':>10s} {'E0 exact':>10s} {'I0':>10s} {'termination':>12s} {'T_num':>8s}")
    for r in rows:
        c = r["initial.amplitude"]
        E, _ = closed_forms(c)
        T = f"{r['T_num']:8.4f}" if r.get("T_num") is not None else f"{'-':>8s}"
        print(f"{c:5.2f} {r['E0']:10.5f} {E:10.5f} {r['I0']:10.4f} {r['termination']:>12s} {T}")
    cE = brentq(lambda c: closed_forms(c)[0], 3.0, 6.0)
    cI = brentq(lambda c: closed_forms(c)[1], 1.0, 3.5)
    print(f"closed-form roots: E0 = 0 at c = {cE:.6f}, I0 = 0 at c = {cI:.6f} (lambda* of sin x)")
    out = Path(args.out if args.out is not None else cfg.output.dir)
    print((out / "sweep_summary.txt").read_text(), end="")


if __name__ == "__main__":
    main()
