"""Seeded generators for measurement matrices, dictionaries, sparse signals
and calibrated noise.

Every generator is a pure function of its arguments. Random streams come
from the PCG64 bit generator; per-trial seeds are derived with
:func:`mix_seed`, never from shared generator state.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .prox import lp_norm

KINDS = ("gaussian", "rademacher", "laplace")
AMPLITUDE_LAWS = ("sign", "gaussian")

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(base_seed: int, k: int) -> int:
    """Seed of sub-stream ``k``: ``splitmix64(splitmix64(base) XOR k)``."""
    return splitmix64(splitmix64(int(base_seed) & _MASK64) ^ (int(k) & _MASK64))


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def default_scale(m: int, p: float) -> float:
    """``m^(-1/p)``: ``1/sqrt(m)`` for p = 2, ``1/m`` for p = 1."""
    return float(m) ** (-1.0 / p)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    m: int
    N: int
    scale: float
    seed: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.m < 1 or self.N < 1:
            raise ValueError("m and N must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def as_dict(self) -> dict:
        return asdict(self)


def generate_matrix(spec: EnsembleSpec) -> np.ndarray:
    rng = rng_for(spec.seed)
    shape = (spec.m, spec.N)
    if spec.kind == "gaussian":
        G = rng.standard_normal(shape)
    elif spec.kind == "rademacher":
        G = 2.0 * rng.integers(0, 2, size=shape) - 1.0
    else:
        G = rng.laplace(0.0, 1.0, size=shape)
    return spec.scale * G


def _haar_orthogonal(rng, N):
    Q, R = np.linalg.qr(rng.standard_normal((N, N)))
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def random_conditioned_B(N: int, kappa_target: float, seed: int) -> np.ndarray:
    """``U diag(d) V^T`` with ``d`` log-spaced from 1 to ``kappa_target``."""
    if not kappa_target >= 1.0:
        raise ValueError("kappa_target must be >= 1")
    if N == 1 and kappa_target != 1.0:
        raise ValueError("a 1 x 1 dictionary has condition number 1")
    rng = rng_for(seed)
    U = _haar_orthogonal(rng, N)
    V = _haar_orthogonal(rng, N)
    d = np.geomspace(1.0, kappa_target, N)
    return (U * d) @ V.T


def sparse_ground_truth(N: int, s: int, B=None, amplitude_law: str = "sign",
                        seed: int = 0) -> np.ndarray:
    """``x = B w`` with ``w`` exactly s-sparse on a uniformly random support."""
    if not 1 <= s <= N:
        raise ValueError("need 1 <= s <= N")
    if amplitude_law not in AMPLITUDE_LAWS:
        raise ValueError(f"amplitude_law must be one of {AMPLITUDE_LAWS}")
    rng = rng_for(seed)
    S = rng.choice(N, size=s, replace=False)
    w = np.zeros(N)
    if amplitude_law == "sign":
        w[S] = 2.0 * rng.integers(0, 2, size=s) - 1.0
    else:
        vals = rng.standard_normal(s)
        vals[vals == 0.0] = 1.0
        w[S] = vals
    return w.copy() if B is None else np.asarray(B, dtype=float) @ w


def calibrated_noise(A, x, p: float, ratio: float, seed: int):
    """Return ``(e, y)`` with ``y = Ax + e`` and ``||e||_p = ratio ||y||_p``.

    ``e = sigma d`` for a Gaussian direction ``d`` normalized to unit
    ``p``-norm; ``sigma`` is bisected on ``[0, ratio ||Ax||_p / (1 - ratio)]``.
    """
    if not 0.0 <= ratio <= 1.0 / 3.0:
        raise ValueError("ratio must lie in [0, 1/3]")
    Ax = np.asarray(A, dtype=float) @ np.asarray(x, dtype=float)
    if ratio == 0.0:
        return np.zeros_like(Ax), Ax
    rng = rng_for(seed)
    d = rng.standard_normal(Ax.shape[0])
    d /= lp_norm(d, p)

    def g(sig):
        return sig - ratio * lp_norm(Ax + sig * d, p)

    lo, hi = 0.0, ratio * lp_norm(Ax, p) / (1.0 - ratio)
    # g is strictly increasing (slope >= 1 - ratio), g(lo) <= 0 <= g(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    sig = hi if abs(g(hi)) <= abs(g(lo)) else lo
    e = sig * d
    return e, Ax + e
