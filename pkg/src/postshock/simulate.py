"""Synthetic donor pools and the Monte Carlo harness.

Three shock models are available:

``M1``   ``alpha_i = mu_alpha + e_i``
``M21``  ``alpha_i = mu_alpha + delta' x_{i,T*+1} + e_i`` with a common ``delta``
``M22``  as ``M21`` but ``delta_i ~ N(mu_delta, Sigma_delta)`` per series

with ``e_i ~ N(0, sigma_alpha^2)``.  The defaults follow the reference
simulation design: 25 covariates drawn from Gamma(shape 1, scale 2), lag
coefficients from Uniform(0, 1), theta ~ N(0, I), delta_i ~ N(1, 0.5 I),
series lengths ``max(90, round(100 * Gamma(shape 15, rate 10)))`` and the
last pre-shock time drawn uniformly from ``{p+4, ..., T-1}``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, Optional

import numpy as np

from . import rng
from .bootstrap import BootstrapConfig, assess_all
from .errors import InputError, NumericalError
from .estimators import METHODS
from .loocv import LoocvConfig, loocv
from .panel import DonorPool, TimeSeries

log = logging.getLogger(__name__)

MODELS = ("M1", "M21", "M22")
DISTANCE_KEYS = ("original",) + METHODS
MAX_REGENERATE = 20


@dataclass(frozen=True)
class SimConfig:
    model: str = "M22"
    n: int = 10
    p: int = 25
    mu_alpha: float = 2.0
    sigma_alpha: float = 5.0
    sigma: float = 10.0
    mu_delta: object = 1.0          # scalar (broadcast) or length-p sequence
    sigma_delta: object = 0.5       # variance: scalar (times I), length-p diagonal, or p x p
    sigma_eta: float = 1.0
    mu_theta: object = 0.0
    sigma_theta: object = 1.0
    phi_low: float = 0.0
    phi_high: float = 1.0
    t_shape: float = 15.0
    t_rate: float = 10.0
    t_multiplier: float = 100.0
    t_min: int = 90
    x_shape: float = 1.0
    x_scale: float = 2.0
    y0_init: str = "zero"
    procedure: str = "Bu"
    seed: int = 0
    mc_reps: int = 30
    B: int = 200
    k: int = 5

    def __post_init__(self):
        if self.model not in MODELS:
            raise InputError(f"model must be one of {MODELS}")
        if self.n < 1 or self.p < 1:
            raise InputError("n and p must be positive")
        if self.sigma < 0 or self.sigma_alpha < 0 or self.sigma_eta < 0:
            raise InputError("standard deviations must be non-negative")
        if not (-1 < self.phi_low < self.phi_high <= 1):
            raise InputError("lag coefficients must be drawn from an interval inside (-1, 1)")
        if self.t_min < self.p + 5:
            raise InputError("t_min must leave room for t_star in {p+4, ..., T-1}")
        if self.y0_init not in ("zero", "stationary-mean"):
            raise InputError("y0_init must be 'zero' or 'stationary-mean'")
        if self.mc_reps < 1 or self.B < 2 or self.k < 1:
            raise InputError("mc_reps >= 1, B >= 2 and k >= 1 are required")
        if self.k > self.n:
            raise InputError("k cannot exceed n")
        if self.seed < 0:
            raise InputError("seed must be non-negative")

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InputError(f"unknown simulation settings: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def vector(self, value):
        v = np.asarray(value, dtype=float)
        return np.full(self.p, float(v)) if v.ndim == 0 else v.reshape(self.p)

    def covariance(self, value):
        v = np.asarray(value, dtype=float)
        if v.ndim == 0:
            return float(v) * np.eye(self.p)
        if v.ndim == 1:
            return np.diag(v)
        return v.reshape(self.p, self.p)


def generate_series(sid, eta, phi, theta, alpha, x, t_star, sigma, y0, gen, end_t=None):
    """Run the shock-augmented AR(1) recursion on covariates ``x`` (rows t = 0..T)."""
    T = x.shape[0] - 1 if end_t is None else end_t
    eps = gen.normal(0.0, sigma, size=T) if sigma > 0 else np.zeros(T)
    y = np.empty(T + 1)
    y[0] = y0
    drift = eta + x[1:T + 1] @ theta
    for t in range(1, T + 1):
        y[t] = drift[t - 1] + phi * y[t - 1] + eps[t - 1] + (alpha if t == t_star + 1 else 0.0)
    return TimeSeries(sid, y, x[:T + 1], t_star)


@dataclass(frozen=True, eq=False)
class SimDraw:
    pool: DonorPool
    alpha: np.ndarray       # true shocks, target first
    mean_alpha: np.ndarray  # E[alpha_i | covariates], target first


def _psd_root(cov):
    """Symmetric square root of a positive semi-definite covariance."""
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < -1e-10 * max(1.0, abs(vals).max()):
        raise InputError("covariance matrix is not positive semi-definite")
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T


def draw_lengths(cfg: SimConfig, gen):
    T = int(max(cfg.t_min, round(gen.gamma(cfg.t_shape, 1.0 / cfg.t_rate) * cfg.t_multiplier)))
    t_star = int(gen.integers(cfg.p + 4, T))  # uniform on {p+4, ..., T-1}
    return T, t_star


def simulate_draw(cfg: SimConfig, rep_index: int, attempt: int = 0) -> SimDraw:
    if attempt == 0:
        gen = rng.stream(cfg.seed, rng.SIM_REP, rep_index)
    else:
        gen = rng.stream(cfg.seed, rng.SIM_RETRY, rep_index, attempt)
    mu_theta = cfg.vector(cfg.mu_theta)
    root_theta = _psd_root(cfg.covariance(cfg.sigma_theta))
    mu_delta = cfg.vector(cfg.mu_delta)
    root_delta = _psd_root(cfg.covariance(cfg.sigma_delta))
    series, alphas, means = [], [], []
    for i in range(cfg.n + 1):
        T, t_star = draw_lengths(cfg, gen)
        x = gen.gamma(cfg.x_shape, cfg.x_scale, size=(T + 1, cfg.p))
        eta = gen.normal(0.0, cfg.sigma_eta) if cfg.sigma_eta > 0 else 0.0
        phi = gen.uniform(cfg.phi_low, cfg.phi_high)
        theta = mu_theta + root_theta @ gen.standard_normal(cfg.p)
        x_s = x[t_star + 1]
        if cfg.model == "M1":
            mean = cfg.mu_alpha
        elif cfg.model == "M21":
            mean = cfg.mu_alpha + mu_delta @ x_s
        else:
            delta = mu_delta + root_delta @ gen.standard_normal(cfg.p)
            mean = cfg.mu_alpha + delta @ x_s
        alpha = mean + (gen.normal(0.0, cfg.sigma_alpha) if cfg.sigma_alpha > 0 else 0.0)
        if cfg.y0_init == "zero":
            y0 = 0.0
        else:
            y0 = (eta + cfg.x_shape * cfg.x_scale * theta.sum()) / (1 - phi)
        end_t = t_star + 1 if i == 0 else None
        sid = "target" if i == 0 else f"donor{i:03d}"
        series.append(generate_series(sid, eta, phi, theta, alpha, x, t_star, cfg.sigma, y0, gen, end_t))
        alphas.append(alpha)
        means.append(cfg.mu_alpha + mu_delta @ x_s if cfg.model != "M1" else cfg.mu_alpha)
    pool = DonorPool(tuple(series[1:]), series[0])
    return SimDraw(pool, np.array(alphas), np.array(means))


def simulate_pool(cfg: SimConfig, rep_index: int, attempt: int = 0) -> DonorPool:
    """Donor pool for Monte Carlo repetition ``rep_index``.

    The target keeps its true post-shock response at ``t_star + 1`` for
    scoring; its fit only ever uses the pre-shock window.
    """
    return simulate_draw(cfg, rep_index, attempt).pool


@dataclass(frozen=True)
class RepResult:
    rep: int
    guess: Dict[str, int]
    c_bar: Dict[str, float]
    distance: Dict[str, float]
    regenerated: int = 0


def bootstrap_config(cfg: SimConfig, rep: int) -> BootstrapConfig:
    return BootstrapConfig(procedure=cfg.procedure, B=cfg.B, seed=rng.derive_seed(cfg.seed, rng.SIM_REP, rep))


def run_rep(cfg: SimConfig, rep: int) -> RepResult:
    bcfg = bootstrap_config(cfg, rep)
    lcfg = LoocvConfig("k_draws", cfg.k, seed=bcfg.seed, bootstrap=bcfg)
    for attempt in range(MAX_REGENERATE + 1):
        pool = simulate_pool(cfg, rep, attempt)
        try:
            res = assess_all(pool, bcfg)
            cv = loocv(pool, lcfg)
        except NumericalError as exc:
            log.info("rep %d attempt %d regenerated: %s", rep, attempt, exc)
            continue
        return RepResult(rep, res.decisions, cv.c_bar, res.errors(), attempt)
    raise NumericalError(f"repetition {rep} failed {MAX_REGENERATE + 1} times")


@dataclass(frozen=True)
class SimRow:
    n: int
    sigma: float
    sigma_alpha: float
    mc_reps: int
    guess_mean: Dict[str, float]
    guess_se: Optional[Dict[str, float]]
    c_bar_mean: Dict[str, float]
    c_bar_se: Optional[Dict[str, float]]
    distance_mean: Dict[str, float]
    distance_se: Optional[Dict[str, float]]
    regenerated: int = 0

    def flat(self):
        """One flat record (for CSV); absent standard errors become ``None``."""
        out = {"n": self.n, "sigma": self.sigma, "sigma_alpha": self.sigma_alpha,
               "mc_reps": self.mc_reps, "regenerated": self.regenerated}
        for label, mean, se in (("guess", self.guess_mean, self.guess_se),
                                ("c_bar", self.c_bar_mean, self.c_bar_se),
                                ("distance", self.distance_mean, self.distance_se)):
            for k, v in mean.items():
                out[f"{label}_{k}"] = v
                out[f"{label}_{k}_se"] = None if se is None else se[k]
        return out


def _mean_se(values, keys):
    arr = {k: np.array([v[k] for v in values], dtype=float) for k in keys}
    mean = {k: float(a.mean()) for k, a in arr.items()}
    if len(values) < 2:
        return mean, None
    return mean, {k: float(a.std(ddof=1) / np.sqrt(a.size)) for k, a in arr.items()}


def aggregate(cfg: SimConfig, reps) -> SimRow:
    guess, guess_se = _mean_se([r.guess for r in reps], METHODS)
    cbar, cbar_se = _mean_se([r.c_bar for r in reps], METHODS)
    dist, dist_se = _mean_se([r.distance for r in reps], DISTANCE_KEYS)
    return SimRow(cfg.n, cfg.sigma, cfg.sigma_alpha, len(reps), guess, guess_se,
                  cbar, cbar_se, dist, dist_se, sum(r.regenerated for r in reps))


def _run_job(args):
    cfg, rep = args
    return run_rep(cfg, rep)


def run_monte_carlo(cfg: SimConfig, grid=None, workers: int = 1):
    """Run ``cfg.mc_reps`` repetitions for each grid point and summarize each.

    ``grid`` is a sequence of field overrides (e.g. ``[{"sigma_alpha": 5}]``);
    by default the single point ``cfg``.  Repetitions are keyed by
    ``(seed, rep)`` so results do not depend on ``workers``.
    """
    cfgs = [replace(cfg, **g) for g in (grid or [{}])]
    jobs = [(c, r) for c in cfgs for r in range(c.mc_reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_job, jobs, chunksize=1))
    else:
        results = [_run_job(j) for j in jobs]
    rows, pos = [], 0
    for c in cfgs:
        rows.append(aggregate(c, results[pos:pos + c.mc_reps]))
        pos += c.mc_reps
    return rows
