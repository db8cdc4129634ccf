"""Scalar and vector kernels: signed powers, norms, shrinkage and the prox
of the l1-power penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_BISECT_ITERS = 200


def sgn_power(v, p: float) -> np.ndarray:
    """Entrywise ``sgn(v) |v|^(p-1)`` with ``0 -> 0``."""
    v = np.asarray(v, dtype=float)
    if p == 2.0:
        return v.copy()
    if p == 1.0:
        return np.sign(v)
    return np.sign(v) * np.abs(v) ** (p - 1.0)


def lp_norm(v, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    v = np.asarray(v, dtype=float)
    if math.isinf(p):
        return float(np.max(np.abs(v), initial=0.0))
    return float(np.linalg.norm(v, ord=p))


def conjugate_exponent(p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def soft_threshold(v, tau: float) -> np.ndarray:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


@dataclass(frozen=True)
class ProxResult:
    z: np.ndarray
    tau: float
    fixed_point_residual: float


def prox_l1_power(v, mu: float, r: float) -> ProxResult:
    """Prox of ``z -> (mu/r) ||z||_1^r``.

    The minimizer of ``0.5||z - v||^2 + (mu/r)||z||_1^r`` is the soft
    threshold of ``v`` at the unique ``tau`` solving
    ``tau = mu * ||soft_threshold(v, tau)||_1^(r-1)``; the root is
    bracketed in ``[0, mu ||v||_1^(r-1)]`` and bisected.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if r < 1:
        raise ValueError("r must be >= 1")
    v = np.asarray(v, dtype=float)
    if mu == 0.0:
        return ProxResult(v.copy(), 0.0, 0.0)
    if r == 1.0:
        return ProxResult(soft_threshold(v, mu), float(mu), 0.0)
    a = np.abs(v)
    l1 = a.sum()
    if l1 == 0.0:
        return ProxResult(np.zeros_like(v), 0.0, 0.0)

    def h(tau):
        return tau - mu * np.maximum(a - tau, 0.0).sum() ** (r - 1.0)

    lo, hi = 0.0, mu * l1 ** (r - 1.0)
    tol = 1e-12 * max(1.0, l1)
    # h(lo) < 0 <= h(hi); h is strictly increasing
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    tau = hi if abs(h(hi)) <= abs(h(lo)) else lo
    resid = abs(h(tau))
    if resid > tol:
        # flat stretch of the nonincreasing side: pick the exact crossing
        # inside the bracket by solving on the active set
        tau = _refine_tau(a, mu, r, lo, hi, tau)
        resid = abs(h(tau))
    return ProxResult(soft_threshold(v, tau), float(tau), float(resid))


def _refine_tau(a, mu, r, lo, hi, tau):
    # On a piece with fixed active set K the equation is tau = mu (S - k tau)^(r-1)
    # with S = sum_{K} a, k = |K|; Newton from the bracket midpoint.
    act = a > tau
    S, k = a[act].sum(), act.sum()
    t = tau
    for _ in range(50):
        g = S - k * t
        if g <= 0:
            break
        f = t - mu * g ** (r - 1.0)
        df = 1.0 + mu * (r - 1.0) * k * g ** (r - 2.0) if r != 1 else 1.0
        t_new = min(max(t - f / df, lo), hi)
        if abs(t_new - t) <= 1e-17 * max(1.0, t):
            t = t_new
            break
        t = t_new
    return t


class NonsmoothPoint(ArithmeticError):
    """Zero residual with ``q < p``: the fidelity gradient does not exist."""


def fidelity_gradient(M, y, w, p: float, q: float):
    """Return ``(g, res, flagged)`` for ``(1/q)||y - Mw||_p^q`` at ``w``.

    ``g = -||res||_p^(q-p) M^T sgn_power(res, p)``. At zero residual the
    zero vector is returned; ``flagged`` is true when additionally
    ``q < p`` (the gradient scale diverges there).
    """
    res = y - M @ w
    nrm = lp_norm(res, p)
    if nrm == 0.0:
        return np.zeros(M.shape[1]), res, q < p
    scale = nrm ** (q - p) if q != p else 1.0
    return -scale * (M.T @ sgn_power(res, p)), res, False


def fidelity_subgradient(params, instance, w):
    """(Sub)gradient of ``(1/q)||y - ABw||_p^q`` in ``B^{-1}`` coordinates.

    Returns ``(g, flagged)``; see :func:`fidelity_gradient`.
    """
    g, _, flagged = fidelity_gradient(instance.M, instance.y,
                                      np.asarray(w, dtype=float), params.p, params.q)
    return g, flagged
