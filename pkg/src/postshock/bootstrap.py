"""Residual bootstrap of the aggregated shock estimators and the risk check.

Two procedures are supported:

``Bu``
    Donor indices are resampled with replacement in every replicate (the pool
    is treated as a draw from a larger population of potential donors).
``Bf``
    The donor pool is held fixed; only residuals are resampled.

In both, each selected donor's path is regenerated from its own fitted model
and its centered residuals, starting at the observed ``y_0``, and refitted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import kernels, rng
from .errors import (
    BootstrapFailure,
    DegenerateResidualsError,
    DegenerateVarianceError,
    InputError,
)
from .estimators import (
    METHODS,
    ShockEstimate,
    WeightVector,
    alpha_adj,
    alpha_ivw,
    alpha_wadj,
    donor_shock,
    solve_weights,
)
from .panel import (
    LAG,
    DonorPool,
    FitResult,
    TimeSeries,
    build_design,
    fit_donor,
    fit_target,
    forecast_one,
)

log = logging.getLogger(__name__)

PROCEDURES = ("Bu", "Bf")
MAX_RETRIES = 100
DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class BootstrapConfig:
    procedure: str = "Bf"
    B: int = 200
    seed: int = 0
    estimators: tuple = METHODS
    norm_order: float = 2.0
    standardize: bool = True
    allow_degenerate: bool = False

    def __post_init__(self):
        proc = {"bu": "Bu", "bf": "Bf"}.get(str(self.procedure).lower())
        if proc is None:
            raise InputError(f"unknown bootstrap procedure {self.procedure!r}")
        object.__setattr__(self, "procedure", proc)
        if int(self.B) < 2:
            raise InputError("B must be at least 2")
        object.__setattr__(self, "B", int(self.B))
        if int(self.seed) < 0:
            raise InputError("seed must be non-negative")
        ests = tuple(self.estimators)
        unknown = set(ests) - set(METHODS)
        if unknown or not ests:
            raise InputError(f"estimators must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "estimators", tuple(m for m in METHODS if m in ests))


@dataclass(frozen=True, eq=False)
class BootstrapDistribution:
    draws: Dict[str, np.ndarray]
    sample_var: Dict[str, float]
    sample_mean: Dict[str, float]
    procedure: str = "Bf"
    n_redrawn: int = 0


@dataclass(frozen=True)
class RiskAssessment:
    estimator: str
    delta_hat: float
    decision: int
    inputs: tuple  # (estimate, wadj plug-in, bootstrap variance)


class _DonorModel:
    """Fitted pieces of one donor needed to regenerate and refit its path."""

    __slots__ = ("series", "fit", "F", "FtF", "mean_path", "phi", "y0", "pool")

    def __init__(self, series: TimeSeries, fit: FitResult, allow_degenerate=False):
        U, y = build_design(series, True, series.T)
        keep = [c for c in range(U.shape[1]) if c != LAG]
        self.series = series
        self.fit = fit
        self.F = np.ascontiguousarray(U[:, keep])
        self.FtF = self.F.T @ self.F
        self.mean_path = self.F @ fit.coef[keep]
        self.phi = float(fit.coef[LAG])
        self.y0 = float(series.y[0])
        # the shock dummy fits its row exactly, so that residual is structurally zero
        resid = np.delete(np.asarray(fit.residuals), series.t_star)
        resid = resid - resid.mean()
        scale = max(1.0, float(np.max(np.abs(y))))
        if not allow_degenerate and not np.max(np.abs(resid)) > DEGENERATE_TOL * scale:
            raise DegenerateResidualsError(
                f"donor {series.id!r}: residuals have no spread to resample"
            )
        self.pool = resid

    def replicate(self, draws, backend=None):
        return kernels.bootstrap_alpha(
            self.F, self.FtF, self.mean_path, self.phi, self.y0, self.pool, draws,
            backend=backend,
        )


def _donor_models(pool: DonorPool, fits, allow_degenerate):
    if fits is None:
        fits = [fit_donor(d) for d in pool.donors]
    return [_DonorModel(d, f, allow_degenerate) for d, f in zip(pool.donors, fits)]


def _refit_donor(model, i, slots, seed, backend):
    """Bootstrap shock estimates for every (replicate, slot) occupied by donor ``i``."""
    m = len(slots)
    T = model.F.shape[0]
    R = model.pool.size
    draws = rng.stream(seed, rng.RESIDUALS, i).integers(0, R, size=(m, T))
    alpha, var, ok = model.replicate(draws, backend)
    redrawn = 0
    for j in np.nonzero(~ok)[0]:
        b, s = slots[j]
        for attempt in range(MAX_RETRIES):
            d = rng.stream(seed, rng.RETRY, i, b, s, attempt).integers(0, R, size=(1, T))
            a1, v1, ok1 = model.replicate(d, backend)
            redrawn += 1
            if ok1[0]:
                alpha[j], var[j] = a1[0], v1[0]
                break
        else:
            raise BootstrapFailure(
                f"donor {model.series.id!r}: replicate {b} stayed singular after "
                f"{MAX_RETRIES} redraws"
            )
    return alpha, var, redrawn


def bootstrap(
    pool: DonorPool,
    cfg: BootstrapConfig,
    fits=None,
    weights: Optional[WeightVector] = None,
    backend=None,
) -> BootstrapDistribution:
    """Bootstrap distribution of the requested aggregated shock estimators.

    ``fits`` (donor fits in pool order) and ``weights`` (the original
    similarity weights, reused by ``Bf``) may be passed to avoid recomputing
    them.
    """
    models = _donor_models(pool, fits, cfg.allow_degenerate)
    n, B = pool.n, cfg.B
    if cfg.procedure == "Bu":
        idx = rng.stream(cfg.seed, rng.DONOR_INDEX).integers(0, n, size=(B, n))
    else:
        idx = np.tile(np.arange(n), (B, 1))

    alpha = np.empty((B, n))
    var = np.empty((B, n))
    redrawn = 0
    for i, model in enumerate(models):
        bs, ss = np.nonzero(idx == i)
        if bs.size == 0:
            continue
        a, v, r = _refit_donor(model, i, list(zip(bs.tolist(), ss.tolist())), cfg.seed, backend)
        alpha[bs, ss] = a
        var[bs, ss] = v
        redrawn += r

    draws = {}
    if "adj" in cfg.estimators:
        draws["adj"] = alpha.mean(axis=1)
    if "ivw" in cfg.estimators:
        if not np.all(var > 0):
            raise DegenerateVarianceError("a bootstrap refit produced zero shock variance")
        prec = 1.0 / var
        draws["ivw"] = np.sum(prec * alpha, axis=1) / prec.sum(axis=1)
    if "wadj" in cfg.estimators:
        rows = np.array([m.series.x_shock for m in models])
        x1 = pool.target.x_shock
        if cfg.procedure == "Bf":
            if weights is None:
                weights = solve_weights(x1, rows, cfg.norm_order, cfg.standardize)
            draws["wadj"] = alpha @ weights.w
        else:
            wadj = np.empty(B)
            for b in range(B):
                w = solve_weights(x1, rows[idx[b]], cfg.norm_order, cfg.standardize)
                wadj[b] = alpha[b] @ w.w
            draws["wadj"] = wadj

    for d in draws.values():
        d.setflags(write=False)
    return BootstrapDistribution(
        draws=draws,
        sample_var={k: float(np.var(d, ddof=1)) for k, d in draws.items()},
        sample_mean={k: float(np.mean(d)) for k, d in draws.items()},
        procedure=cfg.procedure,
        n_redrawn=redrawn,
    )


def delta_hat(estimates: Dict[str, ShockEstimate], dist: BootstrapDistribution, method: str) -> RiskAssessment:
    """Plug-in estimate of the forecast risk reduction for ``method``.

    The similarity-weighted estimate stands in for the target's expected
    shock; it is treated as unbiased, so no bias term enters its own check.
    """
    if "wadj" not in estimates:
        raise InputError("the similarity-weighted estimate is required as the plug-in mean")
    plug = estimates["wadj"].value
    value = estimates[method].value
    s2 = dist.sample_var[method]
    if method == "wadj":
        d = plug ** 2 - s2
    else:
        d = plug ** 2 - s2 - (value - plug) ** 2
    return RiskAssessment(method, float(d), int(d > 0), (float(value), float(plug), float(s2)))


@dataclass(frozen=True, eq=False)
class Assessment:
    """Everything ``assess_all`` computes for one donor pool."""

    target_id: str
    shocks: tuple
    weights: WeightVector
    estimates: Dict[str, ShockEstimate]
    distribution: BootstrapDistribution
    risks: Dict[str, RiskAssessment]
    forecast1: float
    forecast2: Dict[str, float]
    target_fit: FitResult = field(repr=False)
    observed: Optional[float] = None

    @property
    def decisions(self):
        return {m: r.decision for m, r in self.risks.items()}

    def errors(self):
        """Absolute forecast errors, when the post-shock response is observed."""
        if self.observed is None:
            return None
        e = {"original": abs(self.forecast1 - self.observed)}
        e.update({m: abs(f - self.observed) for m, f in self.forecast2.items()})
        return e


def estimate_all(pool: DonorPool, cfg: BootstrapConfig, fits=None):
    """Donor fits, shocks, weights and the point estimates (no bootstrap)."""
    if fits is None:
        fits = [fit_donor(d) for d in pool.donors]
    shocks = tuple(donor_shock(d, f) for d, f in zip(pool.donors, fits))
    rows = np.array([s.x_shock for s in shocks])
    weights = solve_weights(pool.target.x_shock, rows, cfg.norm_order, cfg.standardize)
    estimates = {"wadj": alpha_wadj(shocks, weights)}
    if "adj" in cfg.estimators:
        estimates["adj"] = alpha_adj(shocks)
    if "ivw" in cfg.estimators:
        estimates["ivw"] = alpha_ivw(shocks)
    return fits, shocks, weights, estimates


def assess_all(pool: DonorPool, cfg: BootstrapConfig, backend=None) -> Assessment:
    """Fit, aggregate, bootstrap, decide and forecast for one pool."""
    fits, shocks, weights, estimates = estimate_all(pool, cfg)
    dist = bootstrap(pool, cfg, fits=fits, weights=weights, backend=backend)
    risks = {m: delta_hat(estimates, dist, m) for m in cfg.estimators}
    tfit = fit_target(pool.target)
    f1 = forecast_one(tfit, pool.target)
    f2 = {m: forecast_one(tfit, pool.target, estimates[m].value) for m in cfg.estimators}
    observed = pool.target.y_shock if pool.target.shocked else None
    return Assessment(
        target_id=pool.target.id,
        shocks=shocks,
        weights=weights,
        estimates={m: estimates[m] for m in cfg.estimators},
        distribution=dist,
        risks=risks,
        forecast1=f1,
        forecast2=f2,
        target_fit=tfit,
        observed=observed,
    )
