"""Experiment configuration: one JSON document, unknown keys rejected."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .ensembles import AMPLITUDE_LAWS, KINDS

EXPERIMENTS = ("thm1", "thm2", "lemma5", "msparsity", "rip_rate")
GRID_SCALES = ("ref", "star", "absolute")
RIP_MODES = ("auto", "exact", "estimate")


# per-experiment grids used when the config omits lambda_grid
DEFAULT_GRIDS = {
    "thm2": {"scale": "star", "lo": 0.0, "hi": 2.0, "per_decade": 10},
    "lemma5": {"scale": "ref", "lo": -3.0, "hi": 6.0, "per_decade": 3},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleCfg:
    kind: str = "gaussian"
    scale: float | None = None  # None: m^(-1/p)


@dataclass(frozen=True)
class DimsCfg:
    m: int = 80
    N: int = 200
    s: int = 3


@dataclass(frozen=True)
class GridCfg:
    """``base * 10^linspace(lo, hi, ...)`` or ``base * multipliers``.

    ``base`` is the zero-solution weight for ``ref``, the noisy threshold
    for ``star`` and 1 for ``absolute``.
    """

    scale: str = "ref"
    lo: float = -3.0
    hi: float = 0.0
    per_decade: int = 25
    multipliers: tuple | None = None


@dataclass(frozen=True)
class RipCfg:
    mode: str = "auto"
    order: int | None = None  # None: self-consistent theorem order
    trials: int = 200
    budget: int = 2_000_000
    polish_steps: int = 30


@dataclass(frozen=True)
class TolCfg:
    tol_kkt: float = 1e-6
    eta: float = 1e-6
    max_iters: int = 20000
    monotone_slack: float = 1e-8
    limit_rel: float = 1e-3


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: tuple = ((2.0, 2.0, 1.0),)
    ensemble: EnsembleCfg = field(default_factory=EnsembleCfg)
    dims: DimsCfg = field(default_factory=DimsCfg)
    kappa_target: float = 1.0
    noise_ratio: float = 0.0
    amplitude_law: str = "sign"
    lambda_grid: GridCfg = field(default_factory=GridCfg)
    trials: int = 10
    base_seed: int = 0
    rip: RipCfg = field(default_factory=RipCfg)
    tolerances: TolCfg = field(default_factory=TolCfg)
    gamma_target: float = 2.0
    rip_points: tuple = ()
    workers: int = 1

    def as_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.as_dict()
        d.update(kw)
        return parse_config(d)


_NESTED = {"ensemble": EnsembleCfg, "dims": DimsCfg, "lambda_grid": GridCfg,
           "rip": RipCfg, "tolerances": TolCfg}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    kw = {}
    for k, v in data.items():
        if cls is ExperimentConfig and k in _NESTED:
            v = v if isinstance(v, _NESTED[k]) else _build(_NESTED[k], v, f"{where}.{k}")
        kw[k] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _check(cond, msg):
    if not cond:
        raise ConfigError(msg)


def parse_config(data) -> ExperimentConfig:
    """Build and validate a config from a dict (or JSON text)."""
    if isinstance(data, str):
        data = json.loads(data)
    data = dict(data)
    if "lambda_grid" not in data and data.get("experiment") in DEFAULT_GRIDS:
        data["lambda_grid"] = dict(DEFAULT_GRIDS[data["experiment"]])
    if "params" in data:
        data["params"] = tuple(tuple(float(x) for x in t) for t in data["params"])
    if "rip_points" in data:
        data["rip_points"] = tuple(tuple(int(x) for x in t) for t in data["rip_points"])
    g = data.get("lambda_grid")
    if isinstance(g, dict) and g.get("multipliers") is not None:
        g = dict(g)
        g["multipliers"] = tuple(float(x) for x in g["multipliers"])
        data["lambda_grid"] = g
    cfg = _build(ExperimentConfig, data, "config")
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def validate(cfg: ExperimentConfig) -> None:
    _check(cfg.experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}")
    _check(len(cfg.params) >= 1, "params must list at least one (p, q, r) triple")
    for t in cfg.params:
        _check(len(t) == 3, f"params entry {t} is not a (p, q, r) triple")
        p, q, r = t
        _check(1.0 <= p <= 2.0 and q >= 1.0 and r >= 1.0, f"invalid exponents {t}")
    _check(cfg.ensemble.kind in KINDS, f"ensemble.kind must be one of {KINDS}")
    _check(cfg.ensemble.scale is None or cfg.ensemble.scale > 0, "ensemble.scale must be > 0")
    d = cfg.dims
    _check(d.m >= 1 and d.N >= 1, "dims.m and dims.N must be positive")
    _check(1 <= d.s <= d.N, "dims.s must lie in [1, N]")
    _check(cfg.kappa_target >= 1.0, "kappa_target must be >= 1")
    _check(d.N > 1 or cfg.kappa_target == 1.0, "N = 1 requires kappa_target = 1")
    _check(0.0 <= cfg.noise_ratio <= 1.0 / 3.0, "noise_ratio must lie in [0, 1/3]")
    if cfg.experiment == "thm1":
        _check(cfg.noise_ratio == 0.0, "thm1 requires noise_ratio = 0")
    if cfg.experiment == "thm2":
        _check(cfg.noise_ratio > 0.0, "thm2 requires 0 < noise_ratio <= 1/3")
    _check(cfg.amplitude_law in AMPLITUDE_LAWS, f"amplitude_law must be one of {AMPLITUDE_LAWS}")
    g = cfg.lambda_grid
    _check(g.scale in GRID_SCALES, f"lambda_grid.scale must be one of {GRID_SCALES}")
    if g.scale == "star":
        _check(cfg.experiment == "thm2", "lambda_grid.scale = star is only defined for thm2")
    if g.multipliers is not None:
        mult = g.multipliers
        _check(len(mult) >= 1 and all(x > 0 and math.isfinite(x) for x in mult),
               "lambda_grid.multipliers must be positive")
        _check(all(b > a for a, b in zip(mult, mult[1:])),
               "lambda_grid.multipliers must be strictly increasing")
    else:
        _check(g.hi >= g.lo and g.per_decade >= 1, "lambda_grid needs hi >= lo, per_decade >= 1")
    if cfg.experiment == "lemma5":
        span = (math.log10(g.multipliers[-1] / g.multipliers[0]) if g.multipliers is not None
                else g.hi - g.lo)
        _check(span >= 4.0 - 1e-12, "lemma5 needs a lambda grid spanning at least 4 decades")
    _check(cfg.trials >= 1, "trials must be >= 1")
    _check(isinstance(cfg.base_seed, int) and cfg.base_seed >= 0, "base_seed must be an int >= 0")
    _check(cfg.rip.mode in RIP_MODES, f"rip.mode must be one of {RIP_MODES}")
    _check(cfg.rip.order is None or cfg.rip.order >= 1, "rip.order must be >= 1")
    _check(cfg.rip.trials >= 1 and cfg.rip.budget >= 1, "rip.trials and rip.budget must be >= 1")
    tol = cfg.tolerances
    _check(tol.tol_kkt > 0 and tol.eta >= 0 and tol.max_iters >= 1, "invalid tolerances")
    _check(cfg.gamma_target >= 1.0, "gamma_target must be >= 1")
    if cfg.experiment == "rip_rate":
        _check(len(cfg.rip_points) >= 1, "rip_rate needs rip_points [[m, N, t], ...]")
        for pt in cfg.rip_points:
            _check(len(pt) == 3 and pt[0] >= 1 and 1 <= pt[2] <= pt[1],
                   f"invalid rip point {pt}")
    _check(cfg.workers >= 1, "workers must be >= 1")
    if cfg.rip.mode == "exact":
        _check(all(t[0] == 2.0 for t in cfg.params), "rip.mode = exact requires p = 2")
