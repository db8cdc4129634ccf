"""Acceptance criteria, each checked at its stated tolerance.

Every test logs one PASS/FAIL line (shown in the terminal summary).
"""

import itertools
import json
import math
import subprocess
import sys
import time

import numpy as np

from lassolab.certificate import check_stationarity, zero_solution_threshold
from lassolab.config import parse_config
from lassolab.harness import run_experiment
from lassolab.model import ProblemInstance, ProblemParams, support
from lassolab.prox import fidelity_subgradient, lp_norm, prox_l1_power
from lassolab.rip import embed_inequality_check, stechkin_row_select, theta_root
from lassolab.solver import coordinate_descent_lasso, solve

from conftest import acceptance_line, gaussian_instance

ORACLE_CASES = 50


def _oracle_pairs():
    """50 LASSO instances (m=20, N=40), weights spread over three decades.

    The grid stops one step short of the zero-solution threshold itself,
    where zero and rounding noise are equally valid outputs.
    """
    out = []
    for k in range(ORACLE_CASES):
        inst = gaussian_instance(20, 40, 1000 + k, s=3)
        lam = 10 ** (-3 + 3 * k / ORACLE_CASES) * zero_solution_threshold(ProblemParams(), inst)
        out.append((inst, lam))
    return out


def test_01_oracle_equivalence():
    t0 = time.perf_counter()
    worst, mismatches = 0.0, 0
    for inst, lam in _oracle_pairs():
        sol = solve(ProblemParams(2, 2, 1, lam), inst)
        ref = coordinate_descent_lasso(inst, lam)
        worst = max(worst, abs(sol.objective - ref.objective) / abs(ref.objective))
        mismatches += support(sol.z) != support(ref.z)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and mismatches == 0 and elapsed <= 60
    acceptance_line(1, ok, f"oracle equivalence: max rel objective gap {worst:.2e}, "
                           f"{mismatches} support mismatches, {elapsed:.1f} s")
    assert ok


def test_02_certificate_suite():
    rng = np.random.default_rng(2024)
    oracle_fail, caught = 0, 0
    pairs = _oracle_pairs()
    for i in range(100):
        inst, lam = pairs[i % ORACLE_CASES]
        prm = ProblemParams(2, 2, 1, lam)
        ref = coordinate_descent_lasso(inst, lam)
        if i < ORACLE_CASES:
            oracle_fail += not check_stationarity(prm, inst, ref.z, tol=1e-6).passed
        scale = 1e-3 * max(1.0, np.abs(ref.z).max())
        z = ref.z + scale * rng.standard_normal(inst.N)
        caught += not check_stationarity(prm, inst, z, tol=1e-6).passed
    ok = oracle_fail == 0 and caught >= 95
    acceptance_line(2, ok, f"certificate suite: {ORACLE_CASES - oracle_fail}/{ORACLE_CASES} oracle "
                           f"outputs pass, {caught}/100 perturbed outputs rejected")
    assert ok


EXACT_DIMS = {"m": 10, "N": 14, "s": 1}
EXACT_GRID = {"multipliers": list(np.logspace(-3, 0.5, 20))}
P2_REGIMES = [[2, 2, 1], [2, 1, 1], [2, 2, 2]]


def _cap_check(report):
    certified = [r for r in report.records if r.certified]
    bad = [r for r in certified if r.sparsity_cap is not None and r.support_w > r.sparsity_cap]
    exact = all(r.gamma_mode == "exact" and r.rip_order == 4 for r in report.records)
    return certified, bad, exact


def test_03_sparsity_bound_noiseless_exact():
    t0 = time.perf_counter()
    cfg = parse_config({"experiment": "thm1", "params": P2_REGIMES, "dims": EXACT_DIMS,
                        "kappa_target": 2.0, "trials": 20, "lambda_grid": EXACT_GRID,
                        "rip": {"mode": "exact", "order": 4}, "base_seed": 3})
    rep = run_experiment(cfg)
    certified, bad, exact = _cap_check(rep)
    elapsed = time.perf_counter() - t0
    caps = [r.sparsity_cap for r in certified]
    ok = not bad and exact and elapsed <= 300 and len(certified) > 0
    acceptance_line(3, ok, f"noiseless cap (exact ratio, order 4): {len(certified)}/"
                           f"{len(rep.records)} certified, {len(bad)} over cap, "
                           f"caps {min(caps)}..{max(caps)}, "
                           f"max support {max(r.support_w for r in certified)}, {elapsed:.1f} s")
    assert ok


def test_04_sparsity_bound_noisy_exact():
    lines, ok = [], True
    for noise in (0.1, 1 / 3):
        cfg = parse_config({"experiment": "thm2", "params": P2_REGIMES, "dims": EXACT_DIMS,
                            "kappa_target": 2.0, "trials": 20, "noise_ratio": noise,
                            "lambda_grid": {"scale": "star", "lo": 0.0, "hi": 2.0,
                                            "per_decade": 5},
                            "rip": {"mode": "exact", "order": 4}, "base_seed": 3})
        rep = run_experiment(cfg)
        certified, bad, exact = _cap_check(rep)
        above = all(r.lam >= r.lam_star * (1 - 1e-12) for r in rep.records)
        ok &= not bad and exact and above and len(certified) > 0
        lines.append(f"noise {noise:.3g}: {len(certified)}/{len(rep.records)} certified, "
                     f"{len(bad)} over cap")
    acceptance_line(4, ok, "noisy cap above threshold weight: " + "; ".join(lines))
    assert ok


def test_05_residual_path():
    lines, ok = [], True
    for pqr in ([2, 2, 1], [2, 1, 1], [1, 1, 1], [2, 2, 2]):
        cfg = parse_config({"experiment": "lemma5", "params": [pqr],
                            "dims": {"m": 12, "N": 24, "s": 2}, "kappa_target": 2.0,
                            "noise_ratio": 0.1, "trials": 20, "base_seed": 5})
        rep = run_experiment(cfg)
        s = rep.summary
        violated = sum(not r.check_ok for r in rep.records)
        ok &= violated == 0
        lines.append(f"{tuple(pqr)} {s['certified']}/{s['records']} certified, "
                     f"{violated} violations, {s['unresolved']} unresolved")
    acceptance_line(5, ok, "residual path monotone with endpoint limits: " + "; ".join(lines))
    assert ok


def test_06_m_sparsity():
    cfg = parse_config({"experiment": "msparsity", "params": [[2, 2, 1], [2, 1, 1], [1, 1, 1]],
                        "dims": {"m": 10, "N": 50, "s": 1}, "trials": 100,
                        "lambda_grid": {"lo": -3, "hi": 0, "per_decade": 2}, "base_seed": 6})
    rep = run_experiment(cfg)
    certified = [r for r in rep.records if r.certified]
    worst = max(r.support_w for r in certified)
    ok = worst <= 10 and len(certified) > 0
    acceptance_line(6, ok, f"m-sparsity: {len(certified)}/{len(rep.records)} certified, "
                           f"largest support {worst} <= 10")
    assert ok


def test_07_zero_threshold_law():
    wrong = 0
    for k in range(20):
        inst = gaussian_instance(15, 30, 700 + k, s=2)
        for q in (2.0, 1.0):
            thr = zero_solution_threshold(ProblemParams(2, q, 1), inst)
            wrong += solve(ProblemParams(2, q, 1, 1.001 * thr), inst).support != ()
            wrong += solve(ProblemParams(2, q, 1, 0.9 * thr), inst).support == ()
    ok = wrong == 0
    acceptance_line(7, ok, f"zero-threshold law: {80 - wrong}/80 supports as predicted")
    assert ok


def test_08_kernel_properties():
    rng = np.random.default_rng(8)
    fails = []
    # prox against a grid oracle
    g = np.linspace(-4, 4, 401)
    grid = np.array(list(itertools.product(g, g)))
    worst_gap = 0.0
    for r in (1.0, 1.5, 2.0, 3.0):
        for _ in range(10):
            v, mu = rng.normal(size=2) * 1.5, rng.uniform(0.05, 2.0)
            z = prox_l1_power(v, mu, r).z
            h = np.linspace(-0.01, 0.01, 101)
            local = z + np.array(list(itertools.product(h, h)))

            def obj(x):
                return 0.5 * np.sum((x - v) ** 2, -1) + mu / r * np.abs(x).sum(-1) ** r

            worst_gap = max(worst_gap, obj(z) - min(obj(grid).min(), obj(local).min()))
    if worst_gap > 1e-6:
        fails.append(f"prox gap {worst_gap:.1e}")
    # firm nonexpansiveness
    for _ in range(2000):
        u, v = rng.normal(size=(2, 6)) * 3
        mu, r = rng.uniform(0.01, 3), rng.uniform(1, 3)
        d = prox_l1_power(u, mu, r).z - prox_l1_power(v, mu, r).z
        if d @ d > d @ (u - v) + 1e-9:
            fails.append("firm nonexpansiveness")
            break
    # fidelity gradient against central differences
    worst_fd = 0.0
    for p, q in ((2, 2), (2, 1), (1.5, 2), (1.5, 1), (1, 1), (1.2, 3)):
        A, y = rng.standard_normal((8, 5)), rng.standard_normal(8)
        inst = ProblemInstance(A, y)
        w = rng.standard_normal(5)
        gr, _ = fidelity_subgradient(ProblemParams(p, q, 1, 1), inst, w)
        f = lambda x: lp_norm(y - A @ x, p) ** q / q  # noqa: E731
        fd = np.array([(f(w + 1e-6 * e) - f(w - 1e-6 * e)) / 2e-6 for e in np.eye(5)])
        worst_fd = max(worst_fd, np.linalg.norm(gr - fd) / max(1.0, np.linalg.norm(fd)))
    if worst_fd > 1e-5:
        fails.append(f"gradient rel error {worst_fd:.1e}")
    # norm comparison and Stechkin estimates
    bad_ineq = 0
    for pp, p in ((1.0, 2.0), (1.0, 1.5), (1.5, 2.0)):
        for _ in range(10_000):
            m = int(rng.integers(2, 40))
            v = rng.standard_normal(m) * rng.exponential(size=m) ** 2
            bad_ineq += not embed_inequality_check(v, pp, p)[2]
            bad_ineq += not stechkin_row_select(v, rng.uniform(1 / m, 0.99), p, pp)[1]
    if bad_ineq:
        fails.append(f"{bad_ineq} inequality failures")
    worst_theta = max(abs(c * (1 - t) - t * math.log(math.e / t) - c / 2)
                      for c in np.logspace(-3, 3, 61) for t in [theta_root(c)])
    if worst_theta > 1e-10:
        fails.append(f"theta residual {worst_theta:.1e}")
    ok = not fails
    acceptance_line(8, ok, f"kernels: prox gap {worst_gap:.1e}, gradient error {worst_fd:.1e}, "
                           f"{bad_ineq} inequality failures on 6e4 draws, theta residual "
                           f"{worst_theta:.1e}" + ("" if ok else f" ({'; '.join(fails)})"))
    assert ok


def test_09_homogeneity():
    worst = 0.0
    for pqr in ((2, 1, 1), (2, 2, 2)):
        for k in range(5):
            inst = gaussian_instance(12, 24, 900 + k, s=2)
            lam = 0.1 * zero_solution_threshold(ProblemParams(pqr[0], pqr[1], 1), inst)
            prm = ProblemParams(*pqr, lam)
            base = solve(prm, inst)
            for c in (0.5, 2.0, 10.0):
                sc = solve(prm, inst.with_y(c * inst.y))
                worst = max(worst, np.linalg.norm(sc.z - c * base.z) / np.linalg.norm(c * base.z))
    ok = worst <= 1e-6
    acceptance_line(9, ok, f"homogeneity for q = r: max relative deviation {worst:.1e}")
    assert ok


def test_10_determinism(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "thm2", "params": [[2, 2, 1], [1, 1, 1]],
                               "dims": {"m": 10, "N": 14, "s": 1}, "kappa_target": 2.0,
                               "noise_ratio": 0.1, "trials": 3, "base_seed": 77,
                               "lambda_grid": {"scale": "star", "lo": 0, "hi": 1,
                                               "per_decade": 3}}))
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        proc = subprocess.run([sys.executable, "-m", "lassolab.cli", "experiment", "thm2",
                               "--config", str(cfg), "--out", str(out)], capture_output=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(((out / "records.csv").read_bytes(), (out / "summary.json").read_bytes()))
    ok = outs[0] == outs[1]
    acceptance_line(10, ok, "determinism: records.csv and summary.json byte-identical "
                            f"across two CLI runs ({len(outs[0][0])} + {len(outs[0][1])} bytes)")
    assert ok
