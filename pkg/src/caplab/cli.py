"""Command-line entry point.

Exit codes: 0 success, 1 validation or usage failure, 2 a check outside its
tolerance.  Settings come from defaults, then a JSON ``--config`` file, then
explicit flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import report
from .curvature import contact_angle_profile, estimate_curvature
from .gauge import Gauge
from .identities import heintze_karcher_deficit, montiel_ros_integral, verify_identities
from .inequalities import (C_TOP, DELTA_EMP, density_floor, density_profile, dichotomy_check, michael_simon_check,
                           topping_check)
from .mesh import MeshError, load_mesh, save_mesh
from .region import region_quantities
from .shapes import CapSpec, CompositeSpec, PerturbationSpec, ProbeSpec, ShapeError, cap, generate
from .shifted_distance import build_sampling, level_profile
from .stability import C_FIT, StabilityConfig, deficit, exponent_sweep, run_stability

COMMANDS = ("generate", "analyze", "verify-identities", "profile", "stability", "inequalities", "sweep")
MC_COMMANDS = {"analyze", "profile", "stability", "sweep"}
DEFAULT_BUDGET = {"analyze": 20_000, "profile": 1_000_000, "stability": 200_000, "sweep": 200_000}
DEFAULT_TOL = {"verify-identities": 0.01, "profile": 0.02}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    out: str | None = None
    csv: str | None = None
    theta: float | None = None
    dimension: int | None = None
    lam: float | None = None
    budget: int | None = None
    seed: int | None = None
    threads: int | None = None
    resolution: int = 4
    shape: str = "cap"
    radius: float = 1.0
    center: list | None = None
    amplitude: float = 0.0
    n_bumps: int = 3
    width: float = 0.5
    delta_gamma: float = 0.5
    eps_radius: float | None = None
    amplitudes: list = field(default_factory=lambda: [0.02, 0.04, 0.08])
    r_grid: list | None = None
    rho_grid: list = field(default_factory=lambda: [0.25])
    tolerance: float | None = None
    dilated_tolerance: float = 0.03
    tol_plane: float | None = None
    tol_touch: float | None = None
    h_target: float | None = None
    delta_regime: float = 0.1
    admission: float = 0.5
    c_fit: float = C_FIT
    gamma: float | None = None
    r0: float | None = None
    force: bool = False
    delta_emp: float = DELTA_EMP
    c_top: float = C_TOP
    beta0: float = 0.25
    density_points: int = 8

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown subcommand {self.command!r}")
        if self.theta is None:
            raise UsageError("--theta is required")
        Gauge(self.theta, self.dimension or 2)  # raises "theta out of range"
        for name in ("tolerance", "tol_plane", "tol_touch", "h_target", "delta_regime", "admission", "c_fit",
                     "delta_emp", "c_top", "dilated_tolerance", "radius"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise UsageError(f"{name} must be positive")
        if self.command in MC_COMMANDS and self.seed is None:
            raise UsageError(f"{self.command} uses Monte-Carlo sampling; --seed is required")
        if self.command == "generate" and not self.out:
            raise UsageError("generate needs --out")
        if self.command not in ("generate", "sweep") and not self.input:
            raise UsageError(f"{self.command} needs an input mesh")
        if self.budget is not None and self.budget < 1:
            raise UsageError("budget must be positive")
        if self.tolerance is None:
            self.tolerance = DEFAULT_TOL.get(self.command, 0.01)
        if self.budget is None:
            self.budget = DEFAULT_BUDGET.get(self.command, 0)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=None)
    common.add_argument("--config", help="JSON file with RunConfig fields; flags take precedence")
    common.add_argument("--theta", type=float, help="contact angle in radians")
    common.add_argument("--dimension", type=int, choices=(1, 2))
    common.add_argument("--out", help="output path (JSON report or mesh); stdout when omitted")
    common.add_argument("--csv", help="CSV output path")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    common.add_argument("--budget", type=int, help="Monte-Carlo sample budget")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--tolerance", type=float)
    common.add_argument("--tol-plane", dest="tol_plane", type=float)
    common.add_argument("--h-target", dest="h_target", type=float)

    p = _Parser(prog="caplab", description="Numerical laboratory for capillary surfaces resting on a hyperplane.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a cap, sphere, perturbation or probe mesh")
    g.add_argument("--shape", choices=("cap", "sphere", "perturbed", "probe", "two-caps"))
    g.add_argument("--radius", type=float)
    g.add_argument("--center", type=_floats, help="Wulff center (cap) or Euclidean center (sphere), comma-separated")
    g.add_argument("--res", dest="resolution", type=int)
    g.add_argument("--amplitude", type=float)
    g.add_argument("--n-bumps", dest="n_bumps", type=int)
    g.add_argument("--width", type=float)
    g.add_argument("--delta-gamma", dest="delta_gamma", type=float)
    g.add_argument("--eps-radius", dest="eps_radius", type=float)

    for name, helptext in (("analyze", "mesh, curvature, contact-angle and region summary"),
                           ("verify-identities", "integral identity residuals"),
                           ("profile", "super-level set volume profile"),
                           ("stability", "stability pipeline report"),
                           ("inequalities", "Michael-Simon, Topping and density checks")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("input", help="OFF (n=2) or CSV (n=1) mesh")
        if name == "profile":
            s.add_argument("--r-grid", dest="r_grid", type=_floats)
            s.add_argument("--rho-grid", dest="rho_grid", type=_floats)
            s.add_argument("--dilated-tolerance", dest="dilated_tolerance", type=float)
        if name == "stability":
            s.add_argument("--c-fit", dest="c_fit", type=float)
            s.add_argument("--admission", type=float)
            s.add_argument("--delta-regime", dest="delta_regime", type=float)
            s.add_argument("--gamma", type=float)
            s.add_argument("--r0", type=float)
            s.add_argument("--force", action="store_true", default=None,
                           help="extract clusters even when the deficit exceeds the admission threshold")
        if name == "inequalities":
            s.add_argument("--delta-emp", dest="delta_emp", type=float)
            s.add_argument("--c-top", dest="c_top", type=float)
            s.add_argument("--density-points", dest="density_points", type=int)
        if name == "analyze":
            s.add_argument("--beta0", type=float)

    w = sub.add_parser("sweep", parents=[common], help="exponent sweep over perturbation amplitudes")
    w.add_argument("--amplitudes", type=_floats)
    w.add_argument("--res", dest="resolution", type=int)
    w.add_argument("--radius", type=float)
    w.add_argument("--c-fit", dest="c_fit", type=float)
    w.add_argument("--admission", type=float)
    return p


def make_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("missing subcommand; choose one of " + ", ".join(COMMANDS))
    values = {}
    if getattr(args, "config", None):
        try:
            values = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(values, dict):
            raise UsageError("config must be a JSON object")
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for k, v in vars(args).items():
        if k in names and v is not None:
            values[k] = v
    values["command"] = args.command
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc))
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _gauge(cfg, mesh=None):
    return Gauge(cfg.theta, mesh.dimension if mesh is not None else (cfg.dimension or 2))


def _load(cfg):
    kw = {} if cfg.tol_plane is None else {"tol_plane": cfg.tol_plane}
    mesh = load_mesh(cfg.input, cfg.dimension, **kw)
    return mesh, _gauge(cfg, mesh)


def _emit(cfg, payload):
    payload = {"schema_version": report.SCHEMA_VERSION, "command": cfg.command, **payload}
    text = report.dumps(payload)
    if cfg.out:
        report.write_text(cfg.out, text)
    else:
        sys.stdout.write(text)


def cmd_generate(cfg) -> int:
    n = cfg.dimension or 2
    o = tuple(cfg.center) if cfg.center else (0.0,) * (n + 1)
    if len(o) != n + 1:
        raise UsageError(f"--center needs {n + 1} coordinates")
    base = cap(o, cfg.radius, cfg.theta, n)
    if cfg.shape == "cap":
        spec = base
    elif cfg.shape == "sphere":
        spec = CapSpec.sphere(o, cfg.radius, cfg.theta)
    elif cfg.shape == "perturbed":
        spec = PerturbationSpec(base, cfg.amplitude, cfg.n_bumps, cfg.width, cfg.delta_gamma, cfg.seed or 0)
    elif cfg.shape == "probe":
        spec = ProbeSpec(base, cfg.eps_radius)
    else:
        shift = np.zeros(n + 1)
        shift[0] = 4.0 * cfg.radius
        spec = CompositeSpec((base, cap(tuple(np.array(o) + shift), cfg.radius, cfg.theta, n)))
    mesh = generate(spec, cfg.resolution)
    save_mesh(mesh, cfg.out)
    return 0


def cmd_analyze(cfg) -> int:
    mesh, g = _load(cfg)
    fld = estimate_curvature(mesh, g)
    prof = contact_angle_profile(mesh, fld)
    H = fld.mean_curvature[fld.valid]
    region = region_quantities(mesh, g, cfg.beta0, cfg.budget, cfg.seed)
    _emit(cfg, {
        "mesh": {"dimension": mesh.dimension, "vertices": mesh.n_vertices, "elements": len(mesh.elements),
                 "components": mesh.n_components, "flipped_components": list(mesh.flipped_components)},
        "contact_angle": {"target": prof.target, "max_deviation": prof.max_deviation,
                          "mean_deviation": prof.mean_deviation, "no_contact": prof.no_contact},
        "curvature": {"valid": int(fld.valid.sum()), "H_min": float(H.min()) if len(H) else None,
                      "H_max": float(H.max()) if len(H) else None,
                      "H_mean": float(np.sum(mesh.vertex_areas[fld.valid] * H) / mesh.vertex_areas[fld.valid].sum())
                      if len(H) else None},
        "region": region,
    })
    return 0


def cmd_verify(cfg) -> int:
    mesh, g = _load(cfg)
    fld = estimate_curvature(mesh, g)
    res = verify_identities(mesh, fld, g, cfg.lam)
    hk = heintze_karcher_deficit(mesh, fld, g)
    mr = montiel_ros_integral(mesh, fld, g)
    ok = all(r.relative < cfg.tolerance for r in res)
    _emit(cfg, {
        "tolerance": cfg.tolerance,
        "residuals": res,
        "heintze_karcher": {"applicable": hk.applicable, "deficit": hk.deficit, "relative": hk.relative,
                            "volume": hk.volume, "bound": hk.bound, "offending": hk.offending[:50]},
        "montiel_ros": {"slab": mr.slab, "volume": mr.volume, "bound": mr.bound,
                        "slack_volume_slab": mr.slack_volume_slab, "slack_slab_bound": mr.slack_slab_bound,
                        "monotone": mr.monotone, "flagged": len(mr.flagged), "t_max": mr.t_max},
        "pass": ok,
    })
    return 0 if ok else 2


def cmd_profile(cfg) -> int:
    mesh, g = _load(cfg)
    lam = cfg.lam
    if lam is None:
        lam = deficit(mesh, estimate_curvature(mesh, g), g).lam
    R = mesh.dimension / lam
    r_grid = cfg.r_grid or [R * k / 10 for k in range(1, 10)]
    sampling = build_sampling(mesh, g, cfg.h_target)
    prof = level_profile(mesh, sampling, g, lam, r_grid, cfg.rho_grid, cfg.budget, cfg.seed, workers=cfg.threads)
    ok = prof.max_residual < cfg.tolerance and prof.max_dilated_residual < cfg.dilated_tolerance
    if cfg.csv:
        rows = [(r, e, s, m, q) for r, e, s, m, q in zip(prof.r, prof.estimate, prof.stderr, prof.model, prof.residual)]
        report.write_csv(cfg.csv, ["r", "volume", "stderr", "model", "residual"], rows)
    _emit(cfg, {"lambda": lam, "seed": cfg.seed, "budget": cfg.budget, "h_s": sampling.h_s, "profile": prof,
                "pass": ok})
    return 0 if ok else 2


def _stability_config(cfg) -> StabilityConfig:
    return StabilityConfig(lam=cfg.lam, budget=cfg.budget, seed=cfg.seed, c_fit=cfg.c_fit, admission=cfg.admission,
                           delta_regime=cfg.delta_regime, gamma=cfg.gamma, h_target=cfg.h_target, r0=cfg.r0,
                           force=cfg.force, workers=cfg.threads)


def stability_payload(rep) -> dict:
    d = rep.deficit
    return {
        "deficit": {"lambda": d.lam, "R": d.R, "epsilon": d.epsilon, "r0": d.r0, "fitted": d.fitted,
                    "lp_norms": {f"L{p:g}": v for p, v in d.lp_norms.items()}, "lambda_window": list(d.window),
                    "lambda_in_window": d.in_window, "admitted": d.admitted, "proven_regime": d.proven_regime},
        "status": rep.config.status,
        "gamma": rep.config.gamma,
        "clusters": [{"center": c.center, "depth": c.depth, "samples": c.n_samples, "height_class": c.height_class,
                      "margin": c.margin} for c in rep.config.clusters],
        "separations": [{"i": s.i, "j": s.j, "metric": s.metric, "value": s.value, "bound": s.bound,
                         "pass": s.passed} for s in rep.separations],
        "hausdorff": {"dist": rep.hausdorff.dist, "ratio": rep.hausdorff.ratio,
                      "sigma_to_s": rep.hausdorff.sigma_to_s, "s_to_sigma": rep.hausdorff.s_to_sigma},
        "c_fit": rep.c_fit,
        "checks": rep.checks,
    }


def cmd_stability(cfg) -> int:
    mesh, g = _load(cfg)
    rep = run_stability(mesh, g, _stability_config(cfg))
    _emit(cfg, {"seed": cfg.seed, "budget": cfg.budget, **stability_payload(rep)})
    c = rep.checks
    return 0 if (c["clusters_found"] and c["classified"] and c["separated"]) else 2


def cmd_inequalities(cfg) -> int:
    mesh, g = _load(cfg)
    fld = estimate_curvature(mesh, g)
    records = []
    if mesh.dimension >= 2:
        rng = np.random.default_rng(cfg.seed or 0)
        records.append(michael_simon_check(mesh, fld, g, np.ones(mesh.n_vertices)))
        records.append(michael_simon_check(mesh, fld, g, 1.0 + mesh.vertices[:, -1]))
        records.append(michael_simon_check(mesh, fld, g, rng.uniform(0.5, 1.5, mesh.n_vertices)))
        names = ["michael_simon[f=1]", "michael_simon[f=1+x_n+1]", "michael_simon[f=random]"]
        records = [dataclasses.replace(r, name=nm) for r, nm in zip(records, names)]
    else:
        records.append(michael_simon_check(mesh, fld, g, np.ones(mesh.n_vertices)))
    top = topping_check(mesh, fld, cfg.c_top)
    records.append(top.record)
    lam = cfg.lam if cfg.lam is not None else deficit(mesh, fld, g).lam
    dich = dichotomy_check(mesh, fld, cfg.delta_emp)
    floor = density_floor(mesh, g, lam)
    sampling = build_sampling(mesh, g, cfg.h_target)
    ids = np.unique(np.linspace(0, mesh.n_vertices - 1, cfg.density_points).astype(int))
    rows = []
    for i in ids:
        prof = density_profile(mesh, sampling, g, mesh.vertices[i], 0.3 / lam, fld)
        rows.extend(prof.csv_rows(int(i)))
    if cfg.csv:
        report.write_csv(cfg.csv, ["x_id", "r", "V_wulff_over_rn", "V_euclid_over_rn"], rows)
    ok = all(r.passed for r in records) and dich.passed
    _emit(cfg, {"records": records, "topping_ratio": top.ratio, "topping_edge_error": top.edge_error,
                "dichotomy": dich, "density_floor": floor, "delta_emp": cfg.delta_emp, "pass": ok})
    return 0 if ok else 2


def cmd_sweep(cfg) -> int:
    n = cfg.dimension or 2
    g = Gauge(cfg.theta, n)
    base = cap(None, cfg.radius, cfg.theta, n)
    scfg = dataclasses.replace(_stability_config(cfg), lam=None)
    res = exponent_sweep(base, sorted(cfg.amplitudes), g, cfg.resolution, scfg)
    if cfg.csv:
        report.write_csv(cfg.csv, ["amplitude", "epsilon", "dist", "ratio", "status"],
                         [(r.amplitude, r.epsilon, r.dist, r.ratio, r.status) for r in res.rows])
    ok = res.bound_holds and res.monotone
    _emit(cfg, {"seed": cfg.seed, "rows": res.rows, "slope": res.slope, "intercept": res.intercept,
                "c_max": res.c_max, "bound_holds": res.bound_holds, "monotone": res.monotone,
                "exponent": 1.0 / (n + 2) ** 2, "pass": ok})
    return 0 if ok else 2


HANDLERS = {"generate": cmd_generate, "analyze": cmd_analyze, "verify-identities": cmd_verify,
            "profile": cmd_profile, "stability": cmd_stability, "inequalities": cmd_inequalities, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        cfg = make_config(sys.argv[1:] if argv is None else argv)
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"caplab: error: {exc}", file=sys.stderr)
        return 1
    except (MeshError, ShapeError, ValueError) as exc:
        print(f"caplab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
