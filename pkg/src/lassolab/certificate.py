"""First-order certificate for minimizers of the LASSO-type program.

For ``p > 1`` a point ``z`` is a minimizer iff, with ``w = B^{-1} z``,
``res = y - A z``, ``c = B^T A^T sgn_power(res, p)`` and
``nu = lam ||res||_p^(p-q) ||w||_1^(r-1)``::

    c_j = nu * sgn(w_j)     for j in supp(w)
    |c_l| <= nu             for l outside supp(w)

For ``p = 1`` the sign of a zero residual entry is a free multiplier in
``[-1, 1]``; the multipliers are chosen by a small linear program that
minimizes the largest violation. When ``q = 1 < p`` and the residual
vanishes, ``sgn_power(res, p)`` is replaced by any ``g`` in the unit ball
of the dual norm and ``nu`` by ``lam ||w||_1^(r-1)``. Both variants extend
the ``p > 1`` characterization and reports are flagged accordingly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import BFGS, LinearConstraint, linprog, minimize

from .model import DEFAULT_ETA, ProblemInstance, ProblemParams, support
from .prox import lp_norm, sgn_power

#: Residual entries with ``|res_i| <= RES_ETA * max(1, ||y||_inf)`` count as zero.
RES_ETA = 1e-9


@dataclass(frozen=True)
class Certificate:
    nu_lambda: float
    S_lambda: tuple
    eq_violation: float
    ineq_violation: float
    passed: bool
    tol: float
    reason: str = ""
    generalized: bool = False

    @property
    def scale(self) -> float:
        return max(1.0, self.nu_lambda)

    @property
    def residual(self) -> float:
        """Largest violation divided by ``max(1, nu)``."""
        if math.isinf(self.nu_lambda):
            return math.inf
        return max(self.eq_violation, self.ineq_violation) / self.scale

    def as_dict(self) -> dict:
        return {
            "nu_lambda": self.nu_lambda,
            "S_lambda": list(self.S_lambda),
            "eq_violation": self.eq_violation,
            "ineq_violation": self.ineq_violation,
            "passed": self.passed,
            "tol": self.tol,
            "reason": self.reason,
            "generalized": self.generalized,
            "residual": self.residual,
        }


def _pow(base: float, expo: float) -> float:
    # 0^0 = 1; 0^(negative) = inf
    if expo == 0.0:
        return 1.0
    if base == 0.0:
        return math.inf if expo < 0 else 0.0
    return base ** expo


def _nu(params: ProblemParams, res_norm: float, w_l1: float) -> float:
    return params.lam * _pow(res_norm, params.p - params.q) * _pow(w_l1, params.r - 1.0)


def nu_lambda(params: ProblemParams, instance: ProblemInstance, z) -> float:
    """``lam ||y - Az||_p^(p-q) ||B^{-1}z||_1^(r-1)``; ``inf`` for ``0^(negative)``."""
    if not params.lam > 0:
        raise ValueError("nu_lambda requires lam > 0")
    z = np.asarray(z, dtype=float)
    res = instance.y - instance.A @ z
    return _nu(params, lp_norm(res, params.p), float(np.abs(instance.apply_Binv(z)).sum()))


def zero_solution_threshold(params: ProblemParams, instance: ProblemInstance) -> float:
    """Smallest ``lam`` for which ``z = 0`` is a minimizer when ``r = 1``."""
    if params.r != 1.0:
        raise ValueError("the zero-solution threshold exists only for r = 1")
    return lambda_reference(params, instance)


def lambda_reference(params: ProblemParams, instance: ProblemInstance) -> float:
    """``||B^T A^T sgn_power(y, p)||_inf ||y||_p^(q-p)``, whatever ``r`` is.

    Used as the natural scale of the regularization weight.
    """
    y = instance.y
    ny = lp_norm(y, params.p)
    if ny == 0.0:
        raise ValueError("y must be nonzero")
    c = instance.M.T @ sgn_power(y, params.p)
    return float(np.max(np.abs(c)) * _pow(ny, params.q - params.p))


def check_stationarity(params: ProblemParams, instance: ProblemInstance, z,
                       tol: float = 1e-6, eta: float = DEFAULT_ETA) -> Certificate:
    """Check the first-order characterization at ``z`` to tolerance ``tol``.

    Violations are compared against ``tol * max(1, nu)``. Entries of
    ``B^{-1} z`` at or below ``eta * ||B^{-1} z||_inf`` are treated as zero.
    """
    if not params.lam > 0:
        raise ValueError("certificates require lam > 0")
    z = np.asarray(z, dtype=float)
    return certify_w(params, instance, instance.apply_Binv(z),
                     instance.y - instance.A @ z, tol=tol, eta=eta)


def certify_w(params, instance, w, res, tol=1e-6, eta=DEFAULT_ETA) -> Certificate:
    """:func:`check_stationarity` given ``w = B^{-1}z`` and ``res = y - Az``."""
    p = params.p
    S = support(w, eta)
    w_l1 = float(np.abs(w).sum())
    res_norm = lp_norm(res, p)
    nu = _nu(params, res_norm, w_l1)
    generalized = p == 1.0

    if params.r > 1.0 and w_l1 == 0.0 and lp_norm(instance.y, p) > 0:
        return Certificate(0.0, S, math.inf, math.inf, False, tol,
                           "zero point with r > 1: characterization degenerates", generalized)
    if math.isinf(nu):
        return Certificate(math.inf, S, math.inf, math.inf, False, tol,
                           "nu is infinite (0 to a negative power)", generalized)
    y_inf = max(1.0, float(np.max(np.abs(instance.y), initial=0.0)))
    sgn_w = np.sign(w)
    in_S = np.zeros(w.shape[0], dtype=bool)
    in_S[list(S)] = True
    M = instance.M

    if p > 1.0 and params.q == 1.0 and res_norm <= RES_ETA * y_inf:
        # the fidelity term is a norm, nondifferentiable at zero residual
        nu0 = params.lam * _pow(w_l1, params.r - 1.0)
        eq, ineq = _violations_zero_residual(M, p, nu0, sgn_w, in_S, tol)
        scale = max(1.0, nu0)
        passed = eq <= tol * scale and ineq <= tol * scale
        return Certificate(nu0, S, eq, ineq, passed, tol,
                           "" if passed else "no dual-ball witness at zero residual", True)
    if res_norm <= 1e-14 * y_inf and params.q < p:
        return Certificate(nu, S, math.inf, math.inf, False, tol,
                           "zero residual with 1 < q < p: not stationary unless w = 0",
                           generalized)

    if p > 1.0:
        c = M.T @ sgn_power(res, p)
        eq, ineq = _violations(c, nu, sgn_w, in_S)
    else:
        eq, ineq = _violations_l1(M, res, instance.y, nu, sgn_w, in_S)

    scale = max(1.0, nu)
    passed = eq <= tol * scale and ineq <= tol * scale
    return Certificate(nu, S, eq, ineq, passed, tol, "" if passed else "violation above tolerance",
                       generalized)


def _violations(c, nu, sgn_w, in_S):
    eq = float(np.max(np.abs(c[in_S] - nu * sgn_w[in_S]), initial=0.0))
    ineq = float(np.max(np.maximum(np.abs(c[~in_S]) - nu, 0.0), initial=0.0))
    return eq, ineq


def _violations_zero_residual(M, p, nu, sgn_w, in_S, tol):
    """Violations for ``c = M^T g`` with ``||g||_{p'} <= 1`` chosen freely.

    The least-squares witness is tried first, then the witness of smallest
    l1 norm satisfying the linear conditions, then the one of smallest
    dual norm.
    """
    pc = p / (p - 1.0)
    MS = M[:, in_S]
    target = nu * sgn_w[in_S]

    def viol(g):
        eq, ineq = _violations(M.T @ g, nu, sgn_w, in_S)
        return eq, max(ineq, nu * max(lp_norm(g, pc) - 1.0, 0.0))

    g0 = np.linalg.lstsq(MS.T, target, rcond=None)[0] if MS.shape[1] else np.zeros(M.shape[0])
    eq, ineq = viol(g0)
    scale = max(1.0, nu)
    if max(eq, ineq) <= tol * scale:
        return eq, ineq
    # ||g||_{p'} <= ||g||_1, so an l1-minimal witness is sound for every p
    m = M.shape[0]
    off = M[:, ~in_S].T
    I = np.eye(m)
    # variables (g, u) with |g| <= u
    A_ub = np.vstack([np.hstack([I, -I]), np.hstack([-I, -I]),
                      np.hstack([off, np.zeros_like(off)]), np.hstack([-off, np.zeros_like(off)])])
    b_ub = np.concatenate([np.zeros(2 * m), np.full(2 * off.shape[0], nu)])
    A_eq = np.hstack([MS.T, np.zeros_like(MS.T)]) if MS.shape[1] else None
    b_eq = target if MS.shape[1] else None
    cost = np.concatenate([np.zeros(m), np.ones(m)])
    sol = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * m + [(0.0, None)] * m, method="highs")
    if sol.status == 0:
        eq1, ineq1 = viol(sol.x[:m])
        if max(eq1, ineq1) < max(eq, ineq):
            eq, ineq = eq1, ineq1
            g0 = sol.x[:m]
    if max(eq, ineq) <= tol * scale:
        return eq, ineq
    # smallest dual-norm witness; only reached near the zero-residual boundary
    cons = [LinearConstraint(off, -nu, nu)]
    if MS.shape[1]:
        cons.append(LinearConstraint(MS.T, target, target))
    hess = (lambda g: np.eye(m)) if pc == 2.0 else BFGS()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = minimize(lambda g: np.sum(np.abs(g) ** pc) / pc, g0, method="trust-constr",
                           jac=lambda g: sgn_power(g, pc), hess=hess, constraints=cons,
                           options={"gtol": 1e-12, "xtol": 1e-14, "maxiter": 2000})
    except (ValueError, np.linalg.LinAlgError):
        # degenerate constraint sets (e.g. more equalities than unknowns)
        return eq, ineq
    eq1, ineq1 = viol(res.x)
    return (eq1, ineq1) if max(eq1, ineq1) < max(eq, ineq) else (eq, ineq)


def _violations_l1(M, res, y, nu, sgn_w, in_S):
    thresh = RES_ETA * max(1.0, float(np.max(np.abs(y), initial=0.0)))
    Z = np.abs(res) <= thresh
    g = np.where(Z, 0.0, np.sign(res))
    c0 = M.T @ g
    nz = int(Z.sum())
    if nz == 0:
        return _violations(c0, nu, sgn_w, in_S)
    # minimize t over u in [-1,1]^nz subject to
    #   |c0_j + (M_Z^T u)_j - nu sgn_j| <= t   (j in S)
    #   |c0_l + (M_Z^T u)_l| <= nu + t         (l not in S)
    MZ = M[Z].T  # N x nz
    target = np.where(in_S, nu * sgn_w, 0.0)
    slack = np.where(in_S, 0.0, nu)
    N = M.shape[1]
    ones = np.ones((N, 1))
    A_ub = np.vstack([np.hstack([MZ, -ones]), np.hstack([-MZ, -ones])])
    b_ub = np.concatenate([target - c0 + slack, c0 - target + slack])
    cost = np.zeros(nz + 1)
    cost[-1] = 1.0
    bounds = [(-1.0, 1.0)] * nz + [(0.0, None)]
    sol = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    u = sol.x[:nz] if sol.status == 0 else np.zeros(nz)
    return _violations(c0 + MZ @ u, nu, sgn_w, in_S)
