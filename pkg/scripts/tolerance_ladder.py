"""Dissipation residual against integrator tolerance on small_data_global.

Each 4x tightening should cut the residual by about 4x while the mean step
halves, i.e. a measured order near 2. Below ~1e-9 the residual reaches the
roundoff floor (~1e-12) and the ratio flattens.

    python scripts/tolerance_ladder.py [--tols 1e-6 2.5e-7 ...]
"""
import argparse
import math

import numpy as np

from logwave.config import preset_config
from logwave.dynamics import max_relative_residual, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tols", type=float, nargs="*", default=[1e-6, 2.5e-7, 6.25e-8, 1.5625e-8, 1e-10])
    ap.add_argument("--preset", default="small_data_global")
    args = ap.parse_args()
    prev = None
    print(f"{'tol':>10s} {'steps':>7s} {'mean dt':>10s} {'residual':>10s} {'shrink':>7s} {'order':>6s}")
    for tol in args.tols:
        rec, _ = simulate(preset_config(args.preset, **{"integrator.tolerance": tol}))
        r, dt = max_relative_residual(rec), float(np.mean(np.diff(rec["t"])))
        shrink = order = ""
        if prev is not None:
            shrink = f"{prev[0] / r:7.2f}"
            order = f"{math.log(prev[0] / r) / math.log(prev[1] / dt):6.3f}"
        print(f"{tol:10.3g} {len(rec) - 1:7d} {dt:10.3e} {r:10.3e} {shrink:>7s} {order:>6s}")
        prev = (r, dt)


if __name__ == "__main__":
    main()
