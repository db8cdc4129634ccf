"""Restricted isometry constants measured through a dictionary, the
deterministic inequalities used to move between l_p norms, and the robust
null space property.

The isometry condition is ``alpha ||z||_2 <= ||Az||_p <= beta ||z||_2``
for every ``z = B w`` with ``w`` t-sparse, so on a support ``S`` the ratio
of interest is ``||A B_S w||_p / ||B_S w||_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .ensembles import rng_for
from .model import OperatorNorms
from .prox import lp_norm, sgn_power

DEFAULT_BUDGET = 2_000_000
_CHUNK = 4096


class BudgetExceeded(RuntimeError):
    """Raised when exact enumeration would exceed the support budget."""


@dataclass(frozen=True)
class RipReport:
    """Isometry constants of order ``t``.

    In ``estimated`` mode ``alpha`` is an upper bound on the true lower
    constant and ``beta`` a lower bound on the true upper constant, so
    ``gamma`` under-estimates the true ratio.
    """

    t: int
    p: float
    alpha: float
    beta: float
    mode: str
    trials: int = 0
    supports_enumerated: int = 0

    @property
    def gamma(self) -> float:
        if self.alpha <= 0.0:
            return math.inf
        return max(1.0, self.beta / self.alpha)

    @property
    def bound_direction(self) -> str:
        if self.mode == "exact_l2":
            return "exact"
        return "alpha over-estimated, beta under-estimated, gamma optimistic"

    def as_dict(self) -> dict:
        return {"t": self.t, "p": self.p, "alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "mode": self.mode, "trials": self.trials,
                "supports_enumerated": self.supports_enumerated,
                "bound_direction": self.bound_direction}


def _dictionary(A, B):
    A = np.asarray(A, dtype=float)
    B = np.eye(A.shape[1]) if B is None else np.asarray(B, dtype=float)
    return A, B, A @ B


def rip_exact_l2(A, B=None, t: int = 1, budget: int = DEFAULT_BUDGET) -> RipReport:
    """Exact l2 constants by enumerating every support of size ``t``.

    Per support the extremal values of the generalized Rayleigh quotient
    ``w^T G_M w / w^T G_B w`` are found from a Cholesky-whitened
    eigenproblem. Supports are visited in lexicographic order.
    """
    A, B, M = _dictionary(A, B)
    N = A.shape[1]
    if not 1 <= t <= N:
        raise ValueError(f"need 1 <= t <= N, got t={t}")
    count = math.comb(N, t)
    if count > budget:
        raise BudgetExceeded(f"C({N},{t}) = {count} supports exceeds the budget {budget}; "
                             "use rip_estimate")
    GM = M.T @ M
    GB = B.T @ B
    lo, hi = math.inf, 0.0
    it = combinations(range(N), t)
    while True:
        chunk = list(islice(it, _CHUNK))
        if not chunk:
            break
        idx = np.array(chunk)
        rows = idx[:, :, None]
        cols = idx[:, None, :]
        Gm = GM[rows, cols]
        L = np.linalg.cholesky(GB[rows, cols])
        X = np.linalg.solve(L, Gm)
        C = np.linalg.solve(L, np.swapaxes(X, 1, 2))
        C = 0.5 * (C + np.swapaxes(C, 1, 2))
        ev = np.linalg.eigvalsh(C)
        lo = min(lo, float(ev[:, 0].min()))
        hi = max(hi, float(ev[:, -1].max()))
    alpha = math.sqrt(max(lo, 0.0))
    beta = math.sqrt(max(hi, 0.0))
    return RipReport(t=t, p=2.0, alpha=alpha, beta=beta, mode="exact_l2",
                     supports_enumerated=count)


def _log_ratio_and_grad(MS, BS, w, p):
    Mw = MS @ w
    Bw = BS @ w
    nm = lp_norm(Mw, p)
    nb2 = Bw @ Bw
    if nm == 0.0 or nb2 == 0.0:
        return -math.inf, np.zeros_like(w)
    val = math.log(nm) - 0.5 * math.log(nb2)
    grad = MS.T @ sgn_power(Mw, p) / nm ** p - BS.T @ Bw / nb2
    return val, grad


def _polish_on_sphere(MS, BS, w, p, sign, steps):
    # sign=+1 ascends the log ratio, sign=-1 descends it
    val, grad = _log_ratio_and_grad(MS, BS, w, p)
    seen = [val]
    step = 1.0
    for _ in range(steps):
        improved = False
        while step > 1e-8:
            cand = w + sign * step * grad
            nc = np.linalg.norm(cand)
            if nc == 0.0:
                step *= 0.5
                continue
            cand /= nc
            cval, cgrad = _log_ratio_and_grad(MS, BS, cand, p)
            if sign * (cval - val) > 0:
                w, val, grad = cand, cval, cgrad
                seen.append(val)
                step *= 2.0
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return seen


def rip_estimate(A, B=None, t: int = 1, p: float = 2.0, trials: int = 200, seed: int = 0,
                 polish_steps: int = 30) -> RipReport:
    """Sampled isometry constants with local polish on each support sphere.

    ``alpha`` is the smallest ratio seen and ``beta`` the largest, so the
    estimate is optimistic: ``alpha`` over- and ``beta`` under-estimates.
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    A, B, M = _dictionary(A, B)
    N = A.shape[1]
    if not 1 <= t <= N:
        raise ValueError(f"need 1 <= t <= N, got t={t}")
    rng = rng_for(seed)
    lo, hi = math.inf, -math.inf
    for _ in range(trials):
        S = np.sort(rng.choice(N, size=t, replace=False))
        MS, BS = M[:, S], B[:, S]
        w = rng.standard_normal(t)
        w /= np.linalg.norm(w)
        down = _polish_on_sphere(MS, BS, w, p, -1.0, polish_steps)
        up = _polish_on_sphere(MS, BS, w, p, +1.0, polish_steps)
        lo = min(lo, min(down))
        hi = max(hi, max(up))
    return RipReport(t=t, p=p, alpha=math.exp(lo), beta=math.exp(hi), mode="estimated",
                     trials=trials)


def embed_inequality_check(v, p_prime: float, p: float):
    """``||v||_{p'} <= m^(1/p' - 1/p) ||v||_p`` for ``p' <= p``."""
    if not 1.0 <= p_prime <= p <= 2.0:
        raise ValueError("need 1 <= p' <= p <= 2")
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    lhs = lp_norm(v, p_prime)
    rhs = m ** (1.0 / p_prime - 1.0 / p) * lp_norm(v, p)
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-12)


def stechkin_row_select(v, theta: float, p: float, p_prime: float):
    """Drop the ``ceil(theta m)`` largest entries and check the Stechkin bound.

    Returns ``(I, ok)`` where ``I`` (sorted, 0-based) indexes the
    ``m - ceil(theta m)`` smallest-magnitude entries and ``ok`` reports
    ``||v_I||_p <= (theta m)^-(1/p' - 1/p) ||v||_{p'}``.
    """
    if not 1.0 <= p_prime <= p <= 2.0:
        raise ValueError("need 1 <= p' <= p <= 2")
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    if not (0.0 < theta < 1.0 and theta * m >= 1.0 - 1e-12):
        raise ValueError("need theta in (0, 1) and theta m >= 1")
    k = math.ceil(theta * m - 1e-9)
    order = np.argsort(np.abs(v), kind="stable")
    I = np.sort(order[: m - k])
    lhs = lp_norm(v[I], p)
    rhs = (theta * m) ** -(1.0 / p_prime - 1.0 / p) * lp_norm(v, p_prime)
    return tuple(int(i) for i in I), lhs <= rhs * (1.0 + 1e-12)


def theta_root(c: float) -> float:
    """Root in (0, 1) of ``c (1 - theta) - theta ln(e / theta) = c / 2``."""
    if not c > 0:
        raise ValueError("c must be positive")

    def f(th):
        return c * (1.0 - th) - th * (1.0 - math.log(th)) - 0.5 * c

    lo, hi = 0.0, 1.0  # f(0+) = c/2 > 0, f(1) = -1 - c/2 < 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        return hi
    return lo if abs(f(lo)) <= abs(f(hi)) else hi


@dataclass(frozen=True)
class NspParams:
    rho: float
    tau: float
    s: int

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.s < 1:
            raise ValueError("s must be >= 1")


@dataclass(frozen=True)
class NspDerivation:
    nsp: NspParams
    t_required: int
    applicable: bool


def nsp_constants_from_rip(rip: RipReport, norms: OperatorNorms, rho: float,
                           s: int) -> NspDerivation:
    """Null space constants implied by isometry constants.

    ``t_required = ceil(((1 + rho) gamma kappa_B / rho)^2 s)`` and
    ``tau = (1 + rho) ||B^{-1}|| sqrt(s) / alpha``; ``applicable`` is false
    when the report's order is below ``t_required``.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must lie in (0, 1]")
    if s < 1:
        raise ValueError("s must be >= 1")
    if rip.alpha <= 0.0:
        return NspDerivation(NspParams(rho, math.inf, s), 0, False)
    ratio = (1.0 + rho) * rip.gamma * norms.kappa_B / rho
    t_req = math.ceil(ratio * ratio * s - 1e-9)
    tau = (1.0 + rho) * norms.norm_Binv * math.sqrt(s) / rip.alpha
    return NspDerivation(NspParams(rho, tau, s), t_req, rip.t >= t_req)


def nsp_check_vector(A, B, v, S, nsp: NspParams, p: float) -> float:
    """``rho ||(B^-1 v)_Sc||_1 + tau sqrt(s) ||Av||_p - ||(B^-1 v)_S||_1``."""
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    S = np.asarray(S, dtype=int)
    if S.size != nsp.s:
        raise ValueError(f"|S| must equal s={nsp.s}")
    u = v if B is None else np.linalg.solve(np.asarray(B, dtype=float), v)
    mask = np.zeros(u.shape[0], dtype=bool)
    mask[S] = True
    on = np.abs(u[mask]).sum()
    off = np.abs(u[~mask]).sum()
    return float(nsp.rho * off + nsp.tau * math.sqrt(nsp.s) * lp_norm(A @ v, p) - on)


def nsp_falsify(A, B, nsp: NspParams, p: float, budget: int, seed: int = 0):
    """Search for ``(v, S)`` violating the robust null space property.

    Candidates mix Gaussian vectors, null-space directions of ``A`` (when
    ``m < N``) and vectors with a dominant s-sparse part; each is tested on
    the index set of its ``s`` largest entries of ``B^-1 v``. Returns the
    first violation found or ``None``, which is not a proof of the property.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    A = np.asarray(A, dtype=float)
    m, N = A.shape
    B = np.eye(N) if B is None else np.asarray(B, dtype=float)
    s = nsp.s
    rng = rng_for(seed)
    null = None
    if m < N:
        _, _, Vt = np.linalg.svd(A)
        null = Vt[m:].T
    done = 0
    kinds = 3 if null is not None else 2
    while done < budget:
        K = min(_CHUNK, budget - done)
        W = rng.standard_normal((N, K))  # candidates in B^-1 coordinates
        kind = rng.integers(0, kinds, size=K)
        spiky = kind == 1
        if spiky.any():
            W[:, spiky] *= 0.1
            for col in np.flatnonzero(spiky):
                sel = rng.choice(N, size=s, replace=False)
                W[sel, col] += rng.standard_normal(s) * 10.0
        V = B @ W
        if null is not None:
            nl = kind == 2
            if nl.any():
                V[:, nl] = null @ rng.standard_normal((null.shape[1], int(nl.sum())))
                W[:, nl] = np.linalg.solve(B, V[:, nl])
        absW = np.abs(W)
        part = np.partition(absW, N - s, axis=0)
        on = part[N - s:].sum(axis=0)
        off = absW.sum(axis=0) - on
        AV = A @ V
        if p == 2.0:
            meas = np.linalg.norm(AV, axis=0)
        else:
            meas = (np.abs(AV) ** p).sum(axis=0) ** (1.0 / p)
        margin = nsp.rho * off + nsp.tau * math.sqrt(s) * meas - on
        bad = np.flatnonzero(margin < -1e-12 * np.maximum(1.0, on))
        if bad.size:
            j = int(bad[0])
            S = np.sort(np.argsort(-absW[:, j], kind="stable")[:s])
            return V[:, j].copy(), tuple(int(i) for i in S)
        done += K
    return None
