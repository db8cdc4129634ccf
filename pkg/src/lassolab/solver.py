"""Minimizers of the LASSO-type program.

All iterations run in ``w = B^{-1} z`` coordinates against ``M = A B``;
the returned ``z`` is ``B w``. Regimes:

* ``p > 1`` -- monotone accelerated proximal gradient with backtracking.
  For ``p = 2`` an active-set Newton polish on the detected support takes
  the iterate to machine precision.
* ``p = 1`` -- with ``polish`` on, an exact vertex solution: the
  ``q = r = 1`` case is a linear program, other ``(q, r)`` reduce to it by
  a scalar search on the effective weight. With ``polish`` off, a
  proximal subgradient method with steps ``sigma0 / sqrt(k)`` keeps the
  best iterate.

Stopping is decided by the first-order certificate, not by iteration
counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.optimize import brentq, linprog, minimize_scalar

from .certificate import certify_w, check_stationarity
from .model import (DEFAULT_ETA, ProblemInstance, ProblemParams, Solution,
                    objective_value, support)
from .prox import fidelity_gradient, lp_norm, prox_l1_power, sgn_power

STEP_MODES = ("auto", "backtracking", "diminishing")


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 20000
    tol_kkt: float = 1e-6
    tol_obj: float = 1e-13
    step_mode: str = "auto"
    acceleration: bool = True
    polish: bool = True
    seed: int = 0
    eta: float = DEFAULT_ETA
    check_every: int = 10
    record_history: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.tol_kkt > 0 and self.tol_obj > 0):
            raise ValueError("tolerances must be positive")
        if self.step_mode not in STEP_MODES:
            raise ValueError(f"step_mode must be one of {STEP_MODES}")


@dataclass(frozen=True)
class PathResult:
    lam_grid: np.ndarray
    solutions: tuple
    residual_p_norms: np.ndarray

    @property
    def all_certified(self) -> bool:
        return all(s.certified for s in self.solutions)


def operator_norm_estimate(M, iters: int = 30, seed: int = 0) -> float:
    """Power-method estimate of ``||M||_{2->2}``."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        u = M.T @ (M @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        est = math.sqrt(nu)
        v = u / nu
    return est


class _Problem:
    """Objective pieces in ``w`` coordinates."""

    def __init__(self, params: ProblemParams, instance: ProblemInstance):
        self.p, self.q, self.r, self.lam = params.p, params.q, params.r, params.lam
        self.params = params
        self.instance = instance
        self.M = instance.M
        self.y = instance.y

    def fid(self, res) -> float:
        return lp_norm(res, self.p) ** self.q / self.q

    def pen(self, w) -> float:
        return np.abs(w).sum() ** self.r / self.r

    def F(self, w, res=None) -> float:
        if res is None:
            res = self.y - self.M @ w
        return self.fid(res) + self.lam * self.pen(w)


def solve(params: ProblemParams, instance: ProblemInstance, opts: SolverOptions | None = None,
          warm_start=None) -> Solution:
    """Minimize ``(1/q)||y - Az||_p^q + (lam/r)||B^{-1}z||_1^r``.

    Parameters
    ----------
    params : ProblemParams
        Exponents and weight; ``lam`` must be positive.
    instance : ProblemInstance
    opts : SolverOptions, optional
    warm_start : array, optional
        Starting point in ``z`` coordinates.

    Returns
    -------
    Solution
        Non-convergence is reported through ``certified=False``.
    """
    opts = opts or SolverOptions()
    if not params.lam > 0:
        raise ValueError("solve requires lam > 0")
    prob = _Problem(params, instance)
    N = instance.N
    if not np.any(instance.y):
        return _finish(prob, np.zeros(N), 0, opts, "zero data", (0.0,), exact_zero=True)
    if warm_start is None:
        w0 = np.zeros(N)
    else:
        w0 = instance.apply_Binv(np.asarray(warm_start, dtype=float))

    mode = opts.step_mode
    if mode == "auto":
        mode = "diminishing" if params.p == 1.0 else "backtracking"
    if params.p == 1.0 and opts.polish:
        w, iters, status = _solve_l1_exact(prob)
        hist = (prob.F(w),)
        return _finish(prob, w, iters, opts, status, hist)
    if params.q == 1.0 and opts.polish:
        # a norm fidelity may be minimized at zero residual, where it has a kink
        w_bp = _basis_pursuit(prob.M, prob.y)
        if w_bp is not None:
            res = prob.y - prob.M @ w_bp
            if certify_w(params, instance, w_bp, res, opts.tol_kkt, opts.eta).passed:
                return _finish(prob, w_bp, 0, opts, "exact (minimal l1 interpolant)",
                               (prob.F(w_bp),))
            if lp_norm(prob.y - prob.M @ w0, params.p) <= 1e-6 * lp_norm(prob.y, params.p):
                w0 = np.zeros(N)
    if mode == "diminishing":
        w, iters, status, hist = _solve_diminishing(prob, w0, opts)
    else:
        w, iters, status, hist = _solve_accelerated(prob, w0, opts)
        if status != "certified" and opts.polish and params.q < params.p:
            w2, it2 = _solve_effective_weight(prob, w, opts)
            if w2 is not None and prob.F(w2) <= prob.F(w) + 1e-12 * abs(prob.F(w)):
                w, status = w2, "effective weight search"
            iters += it2
    return _finish(prob, w, iters, opts, status, hist)


def _solve_effective_weight(prob: _Problem, w_start, opts: SolverOptions):
    """Minimizer via the ``(p, p, 1)`` program at an effective weight (p > 1)."""
    inner_opts = replace(opts, record_history=False)
    state = {"w": np.array(w_start, dtype=float)}

    def inner(lw):
        sub = _Problem(ProblemParams(prob.p, prob.p, 1.0, lw), prob.instance)
        w, it, _, _ = _solve_accelerated(sub, state["w"], inner_opts)
        state["w"] = w
        return w, it

    return _effective_weight_search(prob, inner)


def _pattern(w, res, res_tol):
    wt = 1e-9 * max(float(np.max(np.abs(w), initial=0.0)), 1e-300)
    return (tuple(np.sign(w) * (np.abs(w) > wt)), tuple(np.sign(res) * (np.abs(res) > res_tol)))


def _effective_weight_search(prob: _Problem, inner):
    """Solve ``phi(l) = lam`` where ``inner(l)`` minimizes the ``(p, p, 1)`` program.

    Any minimizer of the ``(p, p, 1)`` program at weight ``l`` minimizes the
    original program at ``phi(l) = l ||res||_p^(q-p) ||w||_1^(1-r)``. The
    root is bracketed in ``log l`` and refined with Brent's method; the
    answer is the best point on the segment joining the bracketing
    solutions. Returns ``(w or None, inner iterations)``.
    """
    p, q, r, lam = prob.p, prob.q, prob.r, prob.lam
    M, y = prob.M, prob.y
    seen = {}
    total = 0

    def g(u):
        nonlocal total
        lw = math.exp(u)
        w, it = inner(lw)
        total += it
        rn, wl = lp_norm(y - M @ w, p), float(np.abs(w).sum())
        if wl == 0.0 and r > 1.0:
            val = math.inf
        else:
            val = lw * (rn ** (q - p) if rn > 0 else math.inf) / (wl ** (r - 1.0) if wl else 1.0)
        seen[u] = (val, w)
        return math.log(val) - math.log(lam) if 0 < val < math.inf else \
            (math.inf if val > 0 else -math.inf)

    hi = math.log(float(np.max(np.abs(M.T @ sgn_power(y, p)))))
    if g(hi) < 0:
        return None, total
    lo = hi
    for _ in range(40):
        lo -= math.log(10.0)
        if g(lo) < 0:
            break
    else:
        return None, total
    if p in (1.0, 2.0):
        # the inner path is piecewise linear: bisect until both ends share a piece
        y_tol = 1e-9 * max(1.0, float(np.max(np.abs(y))))
        for _ in range(200):
            wl, wh = seen[lo][1], seen[hi][1]
            if _pattern(wl, y - M @ wl, y_tol) == _pattern(wh, y - M @ wh, y_tol) \
                    or hi - lo < 1e-13:
                break
            mid = 0.5 * (lo + hi)
            if g(mid) < 0:
                lo = mid
            else:
                hi = mid
    elif math.isfinite(g(lo)) and math.isfinite(seen[hi][0]):
        try:
            brentq(g, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=100)
        except (ValueError, RuntimeError):
            pass
    below = max((u for u, (v, _) in seen.items() if v < lam), default=None)
    above = min((u for u, (v, _) in seen.items() if v >= lam and u > (below or -math.inf)),
                default=None)
    if below is None or above is None:
        return None, total
    w_lo, w_hi = seen[below][1], seen[above][1]
    seg = minimize_scalar(lambda th: prob.F((1 - th) * w_lo + th * w_hi),
                          bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    cands = [w_lo, w_hi, (1 - seg.x) * w_lo + seg.x * w_hi]
    return min(cands, key=prob.F), total


def _finish(prob: _Problem, w, iters, opts, status, hist, exact_zero=False) -> Solution:
    inst = prob.instance
    z = inst.apply_B(w)
    obj = objective_value(prob.params, inst, z)
    if exact_zero:
        # y = 0: z = 0 attains the global lower bound 0
        return Solution(z, obj, (), iters, 0.0, True, w, status, tuple(hist))
    cert = check_stationarity(prob.params, inst, z, tol=opts.tol_kkt, eta=opts.eta)
    if cert.passed:
        status = status or "certified"
    elif not status:
        status = cert.reason
    return Solution(z=z, objective=obj, support=support(inst.apply_Binv(z), opts.eta),
                    iterations=iters, kkt_residual=cert.residual, certified=cert.passed,
                    w=w, status=status, history=tuple(hist) if opts.record_history else ())


def _prox_step(prob, v, g, sigma):
    return prox_l1_power(v - sigma * g, sigma * prob.lam, prob.r).z


def _solve_accelerated(prob: _Problem, w0, opts: SolverOptions):
    M, y, p, q = prob.M, prob.y, prob.p, prob.q
    L = operator_norm_estimate(M, 30, opts.seed) ** 2
    sigma = 1.0 / (L + 1.0)
    sigma_max = 1e6 * sigma
    grow = (p, q) != (2.0, 2.0)

    x = np.array(w0, dtype=float)
    res_x = y - M @ x
    Fx = prob.F(x, res_x)
    v, t = x.copy(), 1.0
    hist = [Fx]
    status = ""
    stalls = 0
    # with an exact polish available, aim well below the reporting tolerance
    target = opts.tol_kkt * (1e-4 if (opts.polish and p > 1.0) else 1.0)
    k = 0
    for k in range(1, opts.max_iters + 1):
        g, res_v, flagged = fidelity_gradient(M, y, v, p, q)
        if flagged:
            if v is x or np.array_equal(v, x):
                status = "nonsmooth point (zero residual, q < p)"
                break
            v, t = x.copy(), 1.0
            continue
        f_v = prob.fid(res_v)
        if grow:
            sigma = min(1.25 * sigma, sigma_max)
        while True:
            cand = _prox_step(prob, v, g, sigma)
            d = cand - v
            res_c = y - M @ cand
            f_c = prob.fid(res_c)
            if f_c <= f_v + g @ d + (d @ d) / (2.0 * sigma) + 1e-15 * abs(f_v):
                break
            sigma *= 0.5
            if sigma < 1e-300:
                break
        F_c = f_c + prob.lam * prob.pen(cand)

        # ties within rounding are accepted so that exact zeros can replace dust
        if F_c <= Fx + 4.0 * np.finfo(float).eps * abs(Fx):
            dec = Fx - F_c
            x_prev, x, res_x, Fx = x, cand, res_c, F_c
            if opts.acceleration:
                t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
                v = x + ((t - 1.0) / t_new) * (x - x_prev)
                t = t_new
            else:
                v = x
            stalls = stalls + 1 if dec <= opts.tol_obj * (1.0 + abs(Fx)) else 0
        else:
            # momentum overshoot: restart from the last accepted iterate
            restarted = t > 1.0
            v, t = x.copy(), 1.0
            stalls += 0 if restarted else 1
        if opts.record_history:
            hist.append(Fx)

        if k % opts.check_every == 0 or stalls >= 3:
            if opts.polish and p > 1.0:
                xr = _reduce_support(M, x, opts.eta)
                if xr is not x and prob.F(xr) <= Fx + 1e-13 * abs(Fx):
                    x = xr
                    res_x = y - M @ x
                    Fx = prob.F(x, res_x)
                xp = _polish_newton(prob, x, opts.eta)
                if xp is not None:
                    res_p = y - M @ xp
                    F_p = prob.F(xp, res_p)
                    if F_p <= Fx + 1e-13 * abs(Fx):
                        x, res_x, Fx = xp, res_p, min(F_p, Fx)
                        v, t = x.copy(), 1.0
            cert = certify_w(prob.params, prob.instance, x, res_x, target, opts.eta)
            if cert.passed:
                status = "certified"
                break
            if stalls >= 50:
                status = "stalled"
                break
    else:
        status = "max_iters reached"
    return x, k, status, hist


def _reduce_support(M, w, eta):
    """Drop support entries along null directions of ``M_S``.

    Moving along ``d`` with ``M_S d = 0`` leaves the fidelity unchanged;
    the sign of ``d`` is chosen so that ``||w||_1`` does not increase
    inside the orthant, and the step stops when an entry reaches zero.
    Returns ``w`` itself when ``M_S`` already has full column rank.
    """
    out = w
    for _ in range(w.shape[0]):
        amax = np.max(np.abs(out), initial=0.0)
        if amax == 0.0:
            break
        S = np.flatnonzero(np.abs(out) > eta * amax)
        MS = M[:, S]
        _, sv, Vt = np.linalg.svd(MS, full_matrices=True)
        tol = max(MS.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
        rank = int(np.sum(sv > tol))
        if rank == S.size:
            break
        d = Vt[-1]
        u = out[S]
        if np.sign(u) @ d > 0:
            d = -d
        shrink = u * d < 0
        if not np.any(shrink):
            d = -d
            shrink = u * d < 0
        steps = -u[shrink] / d[shrink]
        j = np.argmin(steps)
        new = out.copy()
        new[S] = u + steps[j] * d
        new[S[np.flatnonzero(shrink)[j]]] = 0.0
        # entries below the support threshold are not part of the active set
        new[np.abs(new) <= eta * amax] = 0.0
        out = new
    return out


def _polish_newton(prob: _Problem, w, eta):
    """Newton on the detected support with signs frozen (``p > 1``)."""
    M, y, p, q, r, lam = prob.M, prob.y, prob.p, prob.q, prob.r, prob.lam
    amax = np.max(np.abs(w), initial=0.0)
    if amax == 0.0:
        return None
    S = np.flatnonzero(np.abs(w) > eta * amax)
    if S.size > M.shape[0]:
        return None
    sg = np.sign(w[S])
    MS = M[:, S]
    u = w[S].copy()

    def f(u):
        return lp_norm(y - MS @ u, p) ** q / q + lam * (sg @ u) ** r / r

    fu = f(u)
    for _ in range(60):
        res = y - MS @ u
        nr = lp_norm(res, p)
        if nr == 0.0 or (p < 2.0 and np.min(np.abs(res)) == 0.0):
            return None
        a = sg @ u
        g = sgn_power(res, p)
        Mg = MS.T @ g
        sc = nr ** (q - p)
        grad = -sc * Mg + lam * a ** (r - 1.0) * sg
        if p == 2.0:
            H = sc * (MS.T @ MS)
        else:
            H = sc * (p - 1.0) * ((MS.T * np.abs(res) ** (p - 2.0)) @ MS)
        if q != p:
            H = H + (q - p) * nr ** (q - 2.0 * p) * np.outer(Mg, Mg)
        if r != 1.0:
            H = H + lam * (r - 1.0) * a ** (r - 2.0) * np.outer(sg, sg)
        try:
            step = np.linalg.solve(H, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -grad, rcond=None)[0]
        slope = grad @ step
        if not slope < 0:
            break
        s = 1.0
        while s > 1e-10:
            un = u + s * step
            if np.all(sg * un > 0):
                fn = f(un)
                if fn <= fu + 1e-4 * s * slope:
                    break
            s *= 0.5
        else:
            break
        done = np.linalg.norm(un - u) <= 1e-15 * max(1.0, np.linalg.norm(u))
        u, fu = un, fn
        if done:
            break
    out = np.zeros_like(w)
    out[S] = u
    return out


def _solve_diminishing(prob: _Problem, w0, opts: SolverOptions):
    M, y, p, q = prob.M, prob.y, prob.p, prob.q
    L = operator_norm_estimate(M, 30, opts.seed) ** 2
    sigma0 = 1.0 / (L + 1.0)
    w = np.array(w0, dtype=float)
    best, F_best = w.copy(), prob.F(w)
    hist = [F_best]
    status = "max_iters reached"
    k = 0
    for k in range(1, opts.max_iters + 1):
        g, res, flagged = fidelity_gradient(M, y, w, p, q)
        if flagged:
            status = "nonsmooth point (zero residual, q < p)"
            break
        sig = sigma0 / math.sqrt(k)
        w = _prox_step(prob, w, g, sig)
        Fw = prob.F(w)
        if Fw < F_best:
            best, F_best = w.copy(), Fw
        if opts.record_history:
            hist.append(F_best)
        if k % opts.check_every == 0:
            cert = certify_w(prob.params, prob.instance, best, y - M @ best,
                             opts.tol_kkt, opts.eta)
            if cert.passed:
                status = "certified"
                break
    return best, k, status, hist


# -- p = 1: exact vertex solutions -------------------------------------------

def _basis_pursuit(M, y):
    """``argmin ||w||_1`` subject to ``Mw = y``, or None if inconsistent."""
    m, N = M.shape
    sol = linprog(np.ones(2 * N), A_eq=np.hstack([M, -M]), b_eq=y,
                  bounds=[(0.0, None)] * (2 * N), method="highs-ds")
    if sol.status != 0:
        return None
    w = sol.x[:N] - sol.x[N:]
    if lp_norm(y - M @ w, 2.0) > 1e-9 * max(1.0, lp_norm(y, 2.0)):
        return None
    return w


def _lad_lasso(M, y, lam):
    """``argmin ||y - Mw||_1 + lam ||w||_1`` by dual simplex; returns (w, nit)."""
    m, N = M.shape
    I = np.eye(m)
    A_eq = np.hstack([M, -M, I, -I])
    c = np.concatenate([np.full(2 * N, lam), np.ones(2 * m)])
    sol = linprog(c, A_eq=A_eq, b_eq=y, bounds=(0, None), method="highs-ds")
    if sol.status != 0:
        raise RuntimeError(f"linear program failed: {sol.message}")
    w = sol.x[:N] - sol.x[N:2 * N]
    return _vertex_refine(M, y, w, lam), int(sol.nit)


def _vertex_refine(M, y, w, lam):
    # re-solve the active linear system so the vertex is exact to rounding
    amax = np.max(np.abs(w), initial=0.0)
    if amax == 0.0:
        return np.zeros_like(w)
    S = np.flatnonzero(np.abs(w) > 1e-9 * amax)
    w = np.where(np.abs(w) > 1e-9 * amax, w, 0.0)
    res = y - M @ w
    Z = np.flatnonzero(np.abs(res) <= 1e-7 * max(1.0, np.max(np.abs(y))))
    if Z.size < S.size:
        return w
    MZS = M[np.ix_(Z, S)]
    if np.linalg.matrix_rank(MZS) < S.size:
        return w
    u = np.linalg.lstsq(MZS, y[Z], rcond=None)[0]
    if not np.all(np.sign(u) == np.sign(w[S])):
        return w
    cand = np.zeros_like(w)
    cand[S] = u
    F = lambda v: np.abs(y - M @ v).sum() + lam * np.abs(v).sum()  # noqa: E731
    return cand if F(cand) <= F(w) + 1e-12 * max(1.0, F(w)) else w


def _solve_l1_exact(prob: _Problem):
    M, y, q, r, lam = prob.M, prob.y, prob.q, prob.r, prob.lam
    if q == 1.0 and r == 1.0:
        w, nit = _lad_lasso(M, y, lam)
        return w, nit, "exact (linear program)"

    l_zero = float(np.max(np.abs(M.T @ np.sign(y))))
    if r == 1.0 and lam >= l_zero * np.abs(y).sum() ** (q - 1.0):
        return np.zeros(M.shape[1]), 0, "exact (zero solution)"
    w, total = _breakpoint_search(prob)
    if w is None:
        w, nit = _lad_lasso(M, y, lam)
        return w, total + nit, "effective weight search failed to bracket"
    return w, total, "exact (effective weight search)"


def _breakpoint_search(prob: _Problem):
    """Effective-weight search for p = 1 over the vertices of the LP path.

    The LP solution is piecewise constant in the weight ``l``, so
    ``phi(l) = l ||res||_1^(q-1) ||w||_1^(1-r)`` jumps at breakpoints. Each
    bracketing pair of vertices is split at the crossing of their objective
    lines; when no third vertex is optimal there the pair is adjacent and
    the minimizer lies on the segment between them.
    """
    M, y, q, r, lam = prob.M, prob.y, prob.q, prob.r, prob.lam
    total = 0

    def vertex(lw):
        nonlocal total
        w, nit = _lad_lasso(M, y, lw)
        total += nit
        R, W = float(np.abs(y - M @ w).sum()), float(np.abs(w).sum())
        if W == 0.0:
            ph = math.inf if r > 1.0 else lw * R ** (q - 1.0)
        else:
            ph = lw * R ** (q - 1.0) / W ** (r - 1.0)
        return lw, w, R, W, ph

    hi = vertex(float(np.max(np.abs(M.T @ np.sign(y)))))
    if hi[4] < lam:
        return None, total
    lo = hi
    for _ in range(40):
        lo = vertex(lo[0] * 0.1)
        if lo[4] < lam:
            break
    else:
        return None, total
    for _ in range(500):
        (l0, w0, R0, W0, _), (l1, w1, R1, W1, _) = lo, hi
        if np.allclose(w0, w1, rtol=1e-12, atol=1e-14):
            return w0, total
        lx = (R1 - R0) / (W0 - W1) if W0 > W1 else 0.5 * (l0 + l1)
        if not l0 < lx < l1:
            lx = math.sqrt(l0 * l1)
        mid = vertex(lx)
        best_known = min(R0 + lx * W0, R1 + lx * W1)
        if mid[2] + lx * mid[3] >= best_known - 1e-12 * (1.0 + best_known) or l1 / l0 - 1 < 1e-14:
            break
        if mid[4] < lam:
            lo = mid
        else:
            hi = mid
    w0, w1 = lo[1], hi[1]
    seg = minimize_scalar(lambda th: prob.F((1 - th) * w0 + th * w1),
                          bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    cands = [w0, w1, (1 - seg.x) * w0 + seg.x * w1]
    return min(cands, key=prob.F), total


def solve_path(params: ProblemParams, instance: ProblemInstance, lam_grid,
               opts: SolverOptions | None = None) -> PathResult:
    """Solve along an increasing weight grid, warm-starting each point."""
    grid = np.asarray(lam_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lam_grid must be a nonempty 1-D sequence")
    if not np.all(grid > 0):
        raise ValueError("lam_grid must be positive")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("lam_grid must be strictly increasing")
    sols = []
    warm = None
    for lam in grid:
        sol = solve(params.with_lam(float(lam)), instance, opts, warm_start=warm)
        sols.append(sol)
        warm = sol.z
    res = np.array([lp_norm(instance.y - instance.A @ s.z, params.p) for s in sols])
    return PathResult(grid, tuple(sols), res)


def default_lambda_grid(lam_ref: float, lo_decades: float = -3.0, hi_decades: float = 1.0,
                        per_decade: int = 25) -> np.ndarray:
    """Logarithmic grid ``lam_ref * 10^[lo, hi]`` with ``per_decade`` points per decade."""
    num = int(round((hi_decades - lo_decades) * per_decade)) + 1
    return lam_ref * np.logspace(lo_decades, hi_decades, num)


@njit(cache=True)
def _cd_sweeps(At, y, lam, max_sweeps):
    # At is A transposed (C-contiguous) so columns of A are rows here
    N = At.shape[0]
    col_sq = np.zeros(N)
    for j in range(N):
        col_sq[j] = At[j] @ At[j]
    z = np.zeros(N)
    res = y.copy()
    obj = 0.5 * (res @ res)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for j in range(N):
            cj = col_sq[j]
            if cj == 0.0:
                continue
            old = z[j]
            rho = At[j] @ res + cj * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / cj
            if new != old:
                res -= At[j] * (new - old)
                z[j] = new
        if sweeps % 50 == 0:
            res = y - At.T @ z
        new_obj = 0.5 * (res @ res) + lam * np.abs(z).sum()
        if obj - new_obj < 1e-14 * (1.0 + new_obj):
            break
        obj = new_obj
    return z, sweeps


def coordinate_descent_lasso(instance: ProblemInstance, lam: float, max_sweeps: int = 1000000,
                             tol_kkt: float = 1e-6) -> Solution:
    """Cyclic coordinate descent for ``0.5||y - Az||_2^2 + lam ||z||_1`` (B = I).

    Each coordinate update is an exact soft threshold; stops when a sweep
    lowers the objective by less than ``1e-14 (1 + objective)``.
    """
    if not instance.is_identity:
        raise ValueError("coordinate_descent_lasso requires B = identity")
    if not lam > 0:
        raise ValueError("lam must be positive")
    At = np.ascontiguousarray(instance.A.T)
    z, sweeps = _cd_sweeps(At, np.array(instance.y), float(lam), int(max_sweeps))
    params = ProblemParams(2.0, 2.0, 1.0, lam)
    cert = check_stationarity(params, instance, z, tol=tol_kkt)
    return Solution(z=z, objective=objective_value(params, instance, z),
                    support=support(z), iterations=int(sweeps), kkt_residual=cert.residual,
                    certified=cert.passed, w=z.copy(), status="coordinate descent")


def with_options(opts: SolverOptions | None, **kw) -> SolverOptions:
    return replace(opts or SolverOptions(), **kw)
