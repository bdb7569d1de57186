"""Exponent sweep on perturbed caps: log dist(Sigma, S_theta) against log epsilon.

The fitted slope is an empirical rate to compare with 1/(n+2)^2; it is
reported, not asserted.
"""

from __future__ import annotations

import argparse
import math

from caplab.gauge import Gauge
from caplab.report import write_csv
from caplab.shapes import cap
from caplab.stability import StabilityConfig, exponent_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=math.pi / 2)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[0.01, 0.02, 0.04, 0.08])
    ap.add_argument("--res", type=int, default=4)
    ap.add_argument("--budget", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", help="write the sweep table here")
    args = ap.parse_args(argv)

    cfg = StabilityConfig(budget=args.budget, seed=args.seed, admission=2.0)
    sw = exponent_sweep(cap(theta=args.theta), sorted(args.amplitudes), Gauge(args.theta), args.res, cfg)
    print(f"{'amplitude':>10} {'epsilon':>10} {'dist':>10} {'ratio':>10}  status")
    for r in sw.rows:
        print(f"{r.amplitude:10.4f} {r.epsilon:10.4f} {r.dist:10.5f} {r.ratio:10.5f}  {r.status}")
    print(f"slope {sw.slope:.4f} vs 1/16 = {1 / 16:.4f}; C_max {sw.c_max:.4f}; "
          f"bound holds: {sw.bound_holds}; monotone: {sw.monotone}")
    if args.csv:
        write_csv(args.csv, ["amplitude", "epsilon", "dist", "ratio", "status"],
                  [[r.amplitude, r.epsilon, r.dist, r.ratio, r.status] for r in sw.rows])


if __name__ == "__main__":
    main()
