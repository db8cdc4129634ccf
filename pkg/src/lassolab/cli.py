"""Command-line interface: ``lassolab <command> ...``.

Matrices and vectors are read and written as CSV (see :mod:`lassolab.io`);
reports go to stdout as JSON unless ``--out`` is given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certificate import check_stationarity, lambda_reference
from .config import ConfigError, load_config, parse_config
from .ensembles import (EnsembleSpec, calibrated_noise, default_scale, generate_matrix,
                        mix_seed, random_conditioned_B, sparse_ground_truth)
from .harness import run_experiment, write_report
from .io import dump_json, read_matrix, read_vector, write_matrix, write_vector
from .model import ProblemInstance, ProblemParams
from .rip import (BudgetExceeded, NspParams, nsp_constants_from_rip, nsp_falsify, rip_estimate,
                  rip_exact_l2)
from .solver import SolverOptions, default_lambda_grid, solve, solve_path


def _add_exponents(ap, lam=True):
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=2.0)
    ap.add_argument("--r", type=float, default=1.0)
    if lam:
        ap.add_argument("--lambda", dest="lam", type=float, required=True)


def _add_problem(ap, obs=True):
    ap.add_argument("--matrix", required=True, help="CSV file holding A")
    ap.add_argument("--dict", dest="dictionary", help="CSV file holding B (default identity)")
    if obs:
        ap.add_argument("--obs", required=True, help="vector file holding y")


def _add_solver(ap):
    ap.add_argument("--tol-kkt", type=float, default=1e-6)
    ap.add_argument("--eta", type=float, default=1e-6)
    ap.add_argument("--max-iters", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)


def _instance(args, obs=True):
    A = read_matrix(args.matrix)
    B = read_matrix(args.dictionary) if args.dictionary else None
    y = read_vector(args.obs) if obs else np.zeros(A.shape[0])
    return ProblemInstance(A, y, B)


def _opts(args):
    return SolverOptions(max_iters=args.max_iters, tol_kkt=args.tol_kkt, eta=args.eta,
                         seed=args.seed)


def _emit(obj, out):
    text = dump_json(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solution_dict(sol):
    return {"z": sol.z, "objective": sol.objective, "support": list(sol.support),
            "iterations": sol.iterations, "kkt_residual": sol.kkt_residual,
            "certified": sol.certified, "status": sol.status}


def cmd_solve(args):
    inst = _instance(args)
    sol = solve(ProblemParams(args.p, args.q, args.r, args.lam), inst, _opts(args))
    if args.out_z:
        write_vector(args.out_z, sol.z)
    _emit(_solution_dict(sol), args.out)
    return 0 if sol.certified else 1


def cmd_certify(args):
    inst = _instance(args)
    z = read_vector(args.point)
    cert = check_stationarity(ProblemParams(args.p, args.q, args.r, args.lam), inst, z,
                              tol=args.tol_kkt, eta=args.eta)
    _emit(cert.as_dict(), args.out)
    return 0 if cert.passed else 1


def cmd_path(args):
    inst = _instance(args)
    base = ProblemParams(args.p, args.q, args.r, 1.0)
    if args.grid:
        grid = np.array([float(x) for x in args.grid.split(",")])
    else:
        grid = default_lambda_grid(lambda_reference(base, inst), args.lo, args.hi, args.per_decade)
    path = solve_path(base.with_lam(float(grid[0])), inst, grid, _opts(args))
    _emit({"lambda": path.lam_grid, "residual_p": path.residual_p_norms,
           "support_size": [len(s.support) for s in path.solutions],
           "certified": [s.certified for s in path.solutions],
           "objective": [s.objective for s in path.solutions]}, args.out)
    return 0 if path.all_certified else 1


def cmd_rip(args):
    inst = _instance(args, obs=False)
    try:
        if args.mode == "exact":
            rep = rip_exact_l2(inst.A, inst.B, args.t, args.budget)
        else:
            rep = rip_estimate(inst.A, inst.B, args.t, args.p, args.trials, args.seed)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(rep.as_dict(), args.out)
    return 0


def cmd_nsp(args):
    inst = _instance(args, obs=False)
    if args.tau is not None:
        nsp = NspParams(args.rho, args.tau, args.s)
        derived = None
    else:
        rep = (rip_exact_l2(inst.A, inst.B, args.t, args.budget) if args.mode == "exact"
               else rip_estimate(inst.A, inst.B, args.t, args.p, args.trials, args.seed))
        derived = nsp_constants_from_rip(rep, inst.norms(), args.rho, args.s)
        nsp = derived.nsp
    found = nsp_falsify(inst.A, inst.B, nsp, args.p, args.budget, args.seed)
    out = {"rho": nsp.rho, "tau": nsp.tau, "s": nsp.s, "falsified": found is not None}
    if derived is not None:
        out.update(t_required=derived.t_required, applicable=derived.applicable)
    if found is not None:
        out.update(vector=found[0], S=list(found[1]))
    _emit(out, args.out)
    return 1 if found is not None else 0


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scale = args.scale if args.scale is not None else default_scale(args.m, args.p)
    spec = EnsembleSpec(args.kind, args.m, args.N, scale, mix_seed(args.seed, 0))
    A = generate_matrix(spec)
    B = (np.eye(args.N) if args.kappa == 1.0
         else random_conditioned_B(args.N, args.kappa, mix_seed(args.seed, 1)))
    x = sparse_ground_truth(args.N, args.s, B, args.amplitude, mix_seed(args.seed, 2))
    e, y = calibrated_noise(A, x, args.p, args.noise, mix_seed(args.seed, 3))
    write_matrix(out / "A.csv", A)
    write_matrix(out / "B.csv", B)
    write_vector(out / "x.csv", x)
    write_vector(out / "e.csv", e)
    write_vector(out / "y.csv", y)
    dump_json({"ensemble": spec.as_dict(), "kappa_target": args.kappa, "s": args.s,
               "amplitude_law": args.amplitude, "noise_ratio": args.noise, "p": args.p,
               "base_seed": args.seed, "version": __version__}, out / "spec.json")
    return 0


def cmd_experiment(args):
    try:
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment != args.name:
                raise ConfigError(f"config is for {cfg.experiment!r}, not {args.name!r}")
        else:
            cfg = parse_config({"experiment": args.name})
        overrides = {k: v for k, v in (("trials", args.trials), ("base_seed", args.seed),
                                       ("workers", args.workers)) if v is not None}
        if overrides:
            cfg = cfg.replace(**overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(cfg)
    write_report(report, args.out)
    s = report.summary
    print(f"{cfg.experiment}: {s['records']} records written to {args.out}")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lassolab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"lassolab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="minimize the program for one weight")
    _add_problem(p)
    _add_exponents(p)
    _add_solver(p)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--out-z", help="write the solution vector here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="check the first-order characterization at a point")
    _add_problem(p)
    _add_exponents(p)
    _add_solver(p)
    p.add_argument("--point", required=True, help="vector file holding z")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("path", help="solve along a weight grid")
    _add_problem(p)
    _add_exponents(p, lam=False)
    _add_solver(p)
    p.add_argument("--grid", help="comma-separated weights (default: log grid)")
    p.add_argument("--lo", type=float, default=-3.0, help="decades below the reference weight")
    p.add_argument("--hi", type=float, default=1.0)
    p.add_argument("--per-decade", type=int, default=25)
    p.add_argument("--out")
    p.set_defaults(func=cmd_path)

    for name, fn, hlp in (("rip", cmd_rip, "isometry constants of order t"),
                          ("nsp", cmd_nsp, "search for null space property violations")):
        p = sub.add_parser(name, help=hlp)
        _add_problem(p, obs=False)
        p.add_argument("--t", type=int, required=name == "rip", default=None)
        p.add_argument("--p", type=float, default=2.0)
        p.add_argument("--mode", choices=("exact", "estimate"), default="estimate")
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--budget", type=int, default=2_000_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if name == "nsp":
            p.add_argument("--s", type=int, required=True)
            p.add_argument("--rho", type=float, default=0.5)
            p.add_argument("--tau", type=float, help="skip the isometry derivation")
        p.set_defaults(func=fn)

    p = sub.add_parser("generate", help="write a seeded synthetic instance")
    p.add_argument("--kind", default="gaussian", choices=("gaussian", "rademacher", "laplace"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", type=float, default=2.0, help="sets the default scale and noise norm")
    p.add_argument("--scale", type=float)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0, help="||e||_p / ||y||_p")
    p.add_argument("--amplitude", default="sign", choices=("sign", "gaussian"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="run a verification campaign")
    p.add_argument("name", choices=("thm1", "thm2", "lemma5", "msparsity", "rip_rate"))
    p.add_argument("--config", help="JSON configuration")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "nsp" and args.tau is None and args.t is None:
        print("error: nsp needs --tau or --t", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
