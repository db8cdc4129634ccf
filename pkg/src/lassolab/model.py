"""Core problem types, objective evaluation and support extraction.

The program handled throughout the package is::

    minimize_z  (1/q) ||y - A z||_p^q + lam * (1/r) ||B^{-1} z||_1^r

with ``1 <= p <= 2``, ``q >= 1``, ``r >= 1`` and ``lam >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Default relative threshold below which entries count as zero.
DEFAULT_ETA = 1e-6

#: Smallest admissible singular value of B, relative to ||B||.
SINGULAR_FLOOR = 1e-10


class DimensionError(ValueError):
    """Raised when array shapes do not agree."""


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemParams:
    """Exponents and regularization weight ``(p, q, r, lam)``."""

    p: float = 2.0
    q: float = 2.0
    r: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(f"p must lie in [1, 2], got {self.p}")
        if self.q < 1.0:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.r < 1.0:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if not self.lam >= 0.0 or math.isinf(self.lam):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")

    def with_lam(self, lam: float) -> "ProblemParams":
        return ProblemParams(self.p, self.q, self.r, lam)


@dataclass(frozen=True)
class OperatorNorms:
    """Spectral norms of B and B^{-1} and the condition number of B."""

    norm_B: float
    norm_Binv: float

    def __post_init__(self):
        if not (self.norm_B > 0 and self.norm_Binv > 0):
            raise ValueError("operator norms must be positive")

    @property
    def kappa_B(self) -> float:
        return self.norm_B * self.norm_Binv


class ProblemInstance:
    """Measurement matrix ``A`` (m x N), dictionary ``B`` (N x N) and data ``y``.

    ``B`` is factored once by an SVD at construction; a smallest singular
    value below ``SINGULAR_FLOOR * ||B||`` is rejected. All arrays are
    stored as read-only copies.
    """

    __slots__ = ("A", "B", "y", "_U", "_s", "_Vt", "_identity", "_M")

    def __init__(self, A, y, B=None):
        A = _frozen(A, 2, "A")
        y = _frozen(y, 1, "y")
        m, N = A.shape
        if m < 1 or N < 1:
            raise DimensionError("A must have at least one row and one column")
        if y.shape[0] != m:
            raise DimensionError(f"y has length {y.shape[0]}, expected {m}")
        if B is None:
            B = np.eye(N)
        B = _frozen(B, 2, "B")
        if B.shape != (N, N):
            raise DimensionError(f"B has shape {B.shape}, expected {(N, N)}")
        U, s, Vt = np.linalg.svd(B)
        if s[-1] <= SINGULAR_FLOOR * s[0]:
            raise np.linalg.LinAlgError(
                f"B is numerically singular (sigma_min/sigma_max = {s[-1] / s[0]:.3e})")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "_U", U)
        object.__setattr__(self, "_s", s)
        object.__setattr__(self, "_Vt", Vt)
        object.__setattr__(self, "_identity", bool(np.array_equal(B, np.eye(N))))
        M = A if self._identity else A @ B
        M = np.array(M, copy=True)
        M.setflags(write=False)
        object.__setattr__(self, "_M", M)

    def __setattr__(self, name, value):
        raise AttributeError("ProblemInstance is immutable")

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def is_identity(self) -> bool:
        return self._identity

    @property
    def M(self) -> np.ndarray:
        """The product ``A @ B`` acting on ``B^{-1}``-coordinates."""
        return self._M

    def apply_Binv(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.N:
            raise DimensionError(f"vector has length {v.shape[0]}, expected {self.N}")
        if self._identity:
            return v.copy()
        return self._Vt.T @ ((self._U.T @ v) / self._s)

    def apply_B(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self._identity:
            return w.copy()
        return self.B @ w

    def norms(self) -> OperatorNorms:
        return OperatorNorms(float(self._s[0]), float(1.0 / self._s[-1]))

    def with_y(self, y) -> "ProblemInstance":
        return ProblemInstance(self.A, y, self.B)


@dataclass(frozen=True)
class GroundTruth:
    """Signal ``x`` with ``B^{-1} x`` s-sparse and measurement error ``e``."""

    x: np.ndarray
    e: np.ndarray
    s: int


@dataclass(frozen=True)
class Solution:
    """Candidate minimizer and its certification status.

    ``support`` holds 0-based indices of the thresholded support of
    ``B^{-1} z``. ``w`` is ``B^{-1} z`` as produced by the solver.
    """

    z: np.ndarray
    objective: float
    support: tuple
    iterations: int
    kkt_residual: float
    certified: bool
    w: np.ndarray | None = None
    status: str = ""
    history: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class TheoremBounds:
    """Derived sparsity bound quantities.

    ``sparsity_cap`` and ``t`` are ``None`` when ``chi`` is infinite (the
    isometry ratio is unbounded and the bound is vacuous).
    """

    chi: float
    sparsity_cap: int | None
    t: int | None
    lam_star: float
    noisy: bool

    @property
    def lam_star_infinite(self) -> bool:
        return math.isinf(self.lam_star)


def objective_value(params: ProblemParams, instance: ProblemInstance, z) -> float:
    """Evaluate ``(1/q)||y - Az||_p^q + (lam/r)||B^{-1}z||_1^r``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.shape[0] != instance.N:
        raise DimensionError(f"z has shape {z.shape}, expected ({instance.N},)")
    res = instance.y - instance.A @ z
    fid = np.linalg.norm(res, ord=params.p) ** params.q / params.q
    pen = np.abs(instance.apply_Binv(z)).sum() ** params.r / params.r
    return float(fid + params.lam * pen)


def support(v, eta: float = DEFAULT_ETA) -> tuple:
    """Indices ``j`` with ``|v_j| > eta * ||v||_inf`` (0-based)."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    v = np.abs(np.asarray(v, dtype=float))
    if v.size == 0:
        return ()
    vmax = v.max()
    if vmax == 0.0:
        return ()
    return tuple(int(j) for j in np.flatnonzero(v > eta * vmax))


def theorem_bounds(norms: OperatorNorms, gamma: float, s: int, noisy: bool,
                   params: ProblemParams, beta: float, e_norm: float = 0.0) -> TheoremBounds:
    """Sparsity cap, isometry order and regularization threshold.

    ``chi`` is ``2 gamma kappa_B`` without noise and ``6 gamma kappa_B`` with
    noise. The cap is ``floor(chi^2 s)`` and the order ``cap + 1``. In the
    noisy case ``lam_star = 2^(q-1) beta^r ||B||^r ||e||_p^(q-r)``; it is
    ``inf`` when ``q < r`` and ``e_norm == 0``.
    """
    if not gamma >= 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    if s < 1:
        raise ValueError("s must be >= 1")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if e_norm < 0:
        raise ValueError("e_norm must be nonnegative")
    factor = 6.0 if noisy else 2.0
    chi = factor * gamma * norms.kappa_B
    if math.isinf(chi):
        cap = t = None
    else:
        cap = math.floor(chi * chi * s)
        t = cap + 1
    lam_star = 0.0
    if noisy:
        q, r = params.q, params.r
        base = 2.0 ** (q - 1) * beta ** r * norms.norm_B ** r
        if e_norm == 0.0:
            lam_star = math.inf if q < r else (base if q == r else 0.0)
        else:
            lam_star = base * e_norm ** (q - r)
    return TheoremBounds(chi=chi, sparsity_cap=cap, t=t, lam_star=lam_star, noisy=noisy)
