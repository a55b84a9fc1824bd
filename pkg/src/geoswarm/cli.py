"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 run aborted by a domain
violation (partial outputs kept), 3 an audit found a violated inequality.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, kernels, potentials, transport
from .config import Config
from .dynamics import DiskSample, SimConfig, simulate
from .errors import ConfigError, DomainViolation, HypothesisUnmet
from .manifolds import Sphere

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_AUDIT = 0, 1, 2, 3


def fmt(x):
    return format(float(x), ".17g")


def _threads(args):
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GEOSWARM_THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _pool_map(fn, items, threads):
    # results keep input order whatever the completion order
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


class Manifest:
    """Run manifest, written when a command starts and rewritten when it ends."""

    def __init__(self, out_dir, command, cfg=None, seed=None):
        self.path = os.path.join(out_dir, "manifest.json")
        self.data = {
            "command": command,
            "config": None if cfg is None else cfg.raw,
            "config_hash": None if cfg is None else cfg.hash,
            "seed": seed,
            "backend": kernels.BACKEND,
            "start_time": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "end_time": None,
            "status": "running",
            "outputs": [],
            "abort": None,
        }
        self.write()

    def add(self, path):
        self.data["outputs"].append(os.path.abspath(path))
        self.write()

    def finish(self, status, abort=None):
        self.data["status"] = status
        self.data["abort"] = abort
        self.data["end_time"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        self.write()

    def write(self):
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(args):
    if not args.config:
        raise ConfigError("--config is required")
    return Config.from_file(args.config)


# -- simulate ------------------------------------------------------------------


def write_trajectory_csv(path, rec):
    M = rec.manifold
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t", "particle_index"] + [f"x{k}" for k in range(M.ambient_dim)]
        if M.has_chart:
            header += [f"chart{k}" for k in range(M.point_dim)]
        w.writerow(header)
        for t, state in zip(rec.times, rec.states):
            amb = M.to_ambient(state.points)
            for i in range(state.n):
                row = [fmt(t), str(i)] + [fmt(c) for c in amb[i]]
                if M.has_chart:
                    row += [fmt(c) for c in state.points[i]]
                w.writerow(row)


def cmd_simulate(args):
    cfg = _load(args)
    sim = cfg.sim_config(seed=args.seed)
    man = Manifest(args.out, "simulate", cfg, sim.seed)
    rec = simulate(sim)
    traj = os.path.join(args.out, "trajectory.csv")
    diag = os.path.join(args.out, "diagnostics.json")
    write_trajectory_csv(traj, rec)
    man.add(traj)
    _dump_json(diag, {"records": rec.diagnostics, "abort": rec.abort, "z_extent": rec.z_extent})
    man.add(diag)
    if rec.aborted:
        man.finish("aborted", rec.abort)
        print(f"run aborted: {rec.abort['message']}", file=sys.stderr)
        return EXIT_DOMAIN
    man.finish("ok")
    return EXIT_OK


# -- consensus scan ---------------------------------------------------------------

SCAN_COLUMNS = ["potential", "r", "epsilon", "n", "seed", "time_to_tol", "final_diameter", "invariant_ok"]


def _potential_label(P):
    extra = [f"{k}={v}" for k, v in P.params().items() if k not in ("profile", "name")]
    return f"{P.name}({';'.join(extra)})" if extra else P.name


def cmd_consensus_scan(args):
    cfg = _load(args)
    base = cfg.manifold()
    if not isinstance(base, Sphere):
        raise ConfigError("consensus scans run on the sphere", field="manifold.type")
    exp = cfg.section("experiment", required=False)
    scan = exp.get("scan", {})
    if not isinstance(scan, dict):
        raise cfg.error("scan must be an object", "experiment.scan")
    integ = cfg.section("integrator", required=False)
    h = cfg.number(integ, "integrator", "h", 1e-2, positive=True)
    t_end = cfg.number(integ, "integrator", "t_end", 10.0)
    every = cfg.number(integ, "integrator", "record_every", 1, positive=True, integer=True)
    scheme = integ.get("scheme", "geodesic_euler")
    pots = [cfg.potential(p, "experiment.scan.potentials") for p in scan.get("potentials", [cfg.raw.get("potential")])
            if p is not None]
    radii = [float(r) for r in scan.get("r", [])]
    epss = [float(e) for e in scan.get("epsilon", [base.epsilon])]
    n = cfg.number(scan, "experiment.scan", "n", 50, positive=True, integer=True)
    tol = cfg.number(scan, "experiment.scan", "tol", 1e-3, positive=True)
    seed0 = args.seed if args.seed is not None else cfg.number(exp, "experiment", "seed", 0, integer=True)
    seeds = scan.get("seeds", [seed0])
    for e in epss:
        if not 0 < e < math.pi / 2:
            raise cfg.error("sphere epsilon must lie in (0, pi/2)", "experiment.scan.epsilon")
    for r in radii:
        for e in epss:
            if not 0 <= r < math.pi / 2 - e:
                raise cfg.error(f"r = {r} must lie in [0, pi/2 - epsilon) for epsilon = {e}", "experiment.scan.r")
    cells = [(P, r, e, int(s)) for P in pots for r in radii for e in epss for s in seeds]
    man = Manifest(args.out, "consensus-scan", cfg, seed0)

    def run(cell):
        idx, (P, r, e, s) = cell
        M = Sphere(base.k, e)
        cell_seed = int(np.random.SeedSequence([s, idx]).generate_state(1)[0])
        sim = SimConfig(M, P, DiskSample(r, n, M.north), h=h, t_end=t_end, scheme=scheme, record_every=every,
                        seed=cell_seed)
        rec = simulate(sim)
        rep = analysis.consensus_report(rec, tol)
        vb = analysis.constants_report(P, e, times=()).velocity_bound
        ok = (not rec.aborted) and bool(np.all(rec.series("d_max") <= r + 10 * h * vb))
        return [_potential_label(P), fmt(r), fmt(e), str(n), str(s),
                "" if rep.time_to_tol is None else fmt(rep.time_to_tol), fmt(rep.final_diameter),
                "true" if ok else "false"]

    rows = _pool_map(run, list(enumerate(cells)), _threads(args))
    path = os.path.join(args.out, "consensus_scan.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        w.writerows(rows)
    man.add(path)
    man.finish("ok")
    return EXIT_OK


# -- mean field --------------------------------------------------------------------

MEANFIELD_COLUMNS = ["n", "seed", "w1_initial", "w1_sup", "ratio", "r_bound"]


def cmd_meanfield(args):
    cfg = _load(args)
    sim = cfg.sim_config(seed=args.seed)
    if not isinstance(sim.initial, DiskSample):
        raise cfg.error("mean-field runs need a disk initial law", "initial.type")
    exp = cfg.section("experiment", required=False)
    mf = exp.get("meanfield", {})
    n_list = [int(n) for n in mf.get("n_list", [])]
    ref_n = cfg.number(mf, "experiment.meanfield", "reference_n", max(n_list, default=1), positive=True,
                       integer=True)
    if n_list and ref_n < max(n_list):
        raise cfg.error("reference_n must be at least max(n_list)", "experiment.meanfield.reference_n")
    seeds = [int(s) for s in mf.get("seeds", [sim.seed])]
    man = Manifest(args.out, "meanfield", cfg, sim.seed)
    rows = transport.meanfield_experiment(sim, n_list, ref_n, seeds,
                                          reference_seed=sim.seed, threads=_threads(args))
    path = os.path.join(args.out, "meanfield.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEANFIELD_COLUMNS)
        for row in rows:
            w.writerow([str(row["n"]), str(row["seed"])] + [fmt(row[k]) for k in MEANFIELD_COLUMNS[2:]])
    man.add(path)
    man.finish("ok")
    return EXIT_OK


# -- constants ------------------------------------------------------------------------


def cmd_constants(args):
    if args.config:
        cfg = Config.from_file(args.config)
        P = cfg.potential()
        M = cfg.manifold()
        eps = args.epsilon if args.epsilon is not None else getattr(M, "epsilon", None)
    else:
        spec = {"profile": args.potential or "half_quadratic"}
        if args.q is not None:
            spec["q"] = args.q
        if args.c is not None:
            spec["c"] = args.c
        try:
            P = potentials.from_spec(spec)
        except ValueError as exc:
            raise ConfigError(str(exc), field="potential") from None
        eps = args.epsilon
        cfg = None
    if eps is None or not 0 < eps < math.pi / 2:
        raise ConfigError("epsilon must lie in (0, pi/2)", field="epsilon")
    times = [0.0] + [float(t) for t in (args.times or [])]
    rep = analysis.constants_report(P, eps, grid=args.grid, times=times)
    out = {"potential": P.params(), **rep.to_dict()}
    man = Manifest(args.out, "constants", cfg)
    path = os.path.join(args.out, "constants.json")
    _dump_json(path, out)
    man.add(path)
    man.finish("ok")
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


# -- audit ------------------------------------------------------------------------------


def cmd_audit(args):
    cfg = _load(args)
    M = cfg.manifold()
    if not isinstance(M, Sphere):
        raise ConfigError("audits run on the sphere", field="manifold.type")
    P = cfg.potential()
    exp = cfg.section("experiment", required=False)
    aud = exp.get("audit", {})
    r = cfg.number(aud, "experiment.audit", "r", 0.6)
    if not 0 <= r < M.bound:
        raise cfg.error("support radius must lie in [0, pi/2 - epsilon)", "experiment.audit.r")
    C = cfg.number(aud, "experiment.audit", "C", 1.0, positive=True)
    seed = args.seed if args.seed is not None else cfg.number(exp, "experiment", "seed", 0, integer=True)
    man = Manifest(args.out, "audit", cfg, seed)
    try:
        reports = analysis.audit_suite(
            P, M, r, C,
            measures=cfg.number(aud, "experiment.audit", "measures", 100, integer=True),
            support_n=cfg.number(aud, "experiment.audit", "support_n", 10, positive=True, integer=True),
            trials_per_measure=cfg.number(aud, "experiment.audit", "trials_per_measure", 100, integer=True),
            cone_configs=cfg.number(aud, "experiment.audit", "cone_configs", 1000, integer=True),
            cone_n=cfg.number(aud, "experiment.audit", "cone_n", 10, positive=True, integer=True),
            seed=seed,
        )
    except HypothesisUnmet as exc:
        out = {"hypothesis": str(exc), "ok": False}
        path = os.path.join(args.out, "audit.json")
        _dump_json(path, out)
        man.add(path)
        man.finish("violation")
        print(str(exc), file=sys.stderr)
        return EXIT_AUDIT
    hyp = potentials.g_hypothesis_report(P, M.epsilon, C)
    out = {"potential": P.params(), "g_hypotheses": hyp, **{k: v.to_dict() for k, v in reports.items()}}
    ok = all(rep.ok for rep in reports.values())
    out["ok"] = ok
    path = os.path.join(args.out, "audit.json")
    _dump_json(path, out)
    man.add(path)
    man.finish("ok" if ok else "violation")
    print(json.dumps({k: v.to_dict()["worst_margins"] for k, v in reports.items()}, sort_keys=True))
    return EXIT_OK if ok else EXIT_AUDIT


# -- entry point --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="geoswarm", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $GEOSWARM_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one simulation").set_defaults(func=cmd_simulate)
    sub.add_parser("consensus-scan", parents=[common], help="sweep radius, epsilon and potential").set_defaults(
        func=cmd_consensus_scan)
    sub.add_parser("meanfield", parents=[common], help="W1 of n-atom runs against a reference").set_defaults(
        func=cmd_meanfield)
    sub.add_parser("audit", parents=[common], help="randomized inequality audits").set_defaults(func=cmd_audit)
    cp = sub.add_parser("constants", parents=[common], help="Lipschitz and stability constants")
    cp.add_argument("--potential", choices=["half_quadratic", "power_law", "lohe"])
    cp.add_argument("--q", type=float)
    cp.add_argument("--c", type=float)
    cp.add_argument("--epsilon", type=float)
    cp.add_argument("--grid", type=int, default=100_000)
    cp.add_argument("--times", type=float, nargs="*", help="times at which to tabulate r(eps, t)")
    cp.set_defaults(func=cmd_constants)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        os.makedirs(args.out, exist_ok=True)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainViolation as exc:
        print(f"domain violation: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
