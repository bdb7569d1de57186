"""Run the identity, inequality and stability checks over the standard corpus.

Prints one line per entry and writes the full table as JSON when --out is given.
"""

from __future__ import annotations

import argparse
import time

from caplab import corpus
from caplab.curvature import estimate_curvature
from caplab.identities import heintze_karcher_deficit, verify_identities
from caplab.inequalities import DELTA_EMP, dichotomy_check, michael_simon_check, topping_check
from caplab.report import write_json
from caplab.shapes import generate
from caplab.shifted_distance import build_sampling
from caplab.stability import StabilityConfig, run_stability


def run_entry(entry, res, budget, seed):
    g = entry.gauge()
    mesh = generate(entry.spec, res)
    fld = estimate_curvature(mesh, g)
    row = {"name": entry.name, "dimension": entry.dimension, "vertices": mesh.n_vertices,
           "identities_max_rel": max(r.relative for r in verify_identities(mesh, fld, g))}
    hk = heintze_karcher_deficit(mesh, fld, g)
    row["hk_relative"] = hk.relative if hk.applicable else None
    row["topping_ratio"] = topping_check(mesh, fld).ratio
    row["dichotomy"] = dichotomy_check(mesh, fld, DELTA_EMP).passed
    if entry.dimension >= 2:
        row["michael_simon_slack"] = michael_simon_check(mesh, fld, g, 1.0 + mesh.vertices[:, -1]).slack
        rep = run_stability(mesh, g, StabilityConfig(budget=budget, seed=seed, admission=2.0), fld,
                            build_sampling(mesh, g))
        row.update(epsilon=rep.deficit.epsilon, clusters=rep.config.N, hausdorff=rep.hausdorff.dist,
                   status=rep.config.status)
    return row


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--res", type=int, default=3)
    ap.add_argument("--budget", type=int, default=50_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", nargs="*", help="entry names to run")
    ap.add_argument("--out", help="JSON output path")
    args = ap.parse_args(argv)

    rows = []
    for e in corpus.entries():
        if args.only and e.name not in args.only:
            continue
        start = time.perf_counter()
        row = run_entry(e, args.res, args.budget, args.seed)
        row["seconds"] = round(time.perf_counter() - start, 2)
        rows.append(row)
        summary = " ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items())
        print(summary, flush=True)
    if args.out:
        write_json(args.out, {"resolution": args.res, "rows": rows})


if __name__ == "__main__":
    main()
