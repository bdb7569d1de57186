"""Calibrate the corpus constants C_fit (stability margins) and delta_emp (density floor).

C_fit: for every exact corpus entry the pipeline must classify and separate
correctly with tau_h = C_fit eps^{1/(n+2)^2}; the tau each entry needs is the
largest of its center-location error, height-class shortfall and separation
shortfall.  The default is twice the worst need.

delta_emp: half the smallest V_Wulff(x, r)/r^n over exact single caps, vertices x
and r <= 0.3/lambda.
"""

from __future__ import annotations

import argparse
import json
import math

import numpy as np

from caplab import corpus
from caplab.curvature import estimate_curvature
from caplab.inequalities import density_floor
from caplab.shapes import generate
from caplab.stability import StabilityConfig, deficit, run_stability


def tau_needed(entry, rep, g):
    R = rep.config.R
    need = 0.0
    truth = np.array(entry.centers)
    for cl in rep.config.clusters:
        err = float(np.min(np.linalg.norm(truth - cl.center, axis=1)))
        h = float(cl.center[-1])
        top = (1 + g.cos_theta) * R
        need = max(need, err, min(h, max(top - h, 0.0)))
    for s in rep.separations:
        need = max(need, 0.5 * (2 * R - s.value))
    return need / rep.deficit.rate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--res", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=200_000)
    args = ap.parse_args(argv)

    needs, floors = {}, {}
    for e in corpus.entries():
        if not e.exact:
            continue
        g = e.gauge()
        mesh = generate(e.spec, args.res)
        fld = estimate_curvature(mesh, g)
        if e.dimension == 2:
            rep = run_stability(mesh, g, StabilityConfig(seed=args.seed, budget=args.budget), fld=fld)
            if rep.config.N != len(e.centers):
                raise SystemExit(f"{e.name}: expected {len(e.centers)} clusters, got {rep.config.N}")
            needs[e.name] = tau_needed(e, rep, g)
        if e.name.startswith("cap_"):
            lam = deficit(mesh, fld, g).lam
            floors[e.name] = density_floor(mesh, g, lam)
        print(e.name, needs.get(e.name), floors.get(e.name), flush=True)
    c_fit = 2 * max(needs.values())
    delta = 0.5 * min(floors.values())
    print(json.dumps({"c_fit": c_fit, "delta_emp": delta, "needs": needs, "floors": floors}, indent=2))


if __name__ == "__main__":
    main()
