"""Shock-augmented AR(1) panel: design matrices, OLS fits and forecasts.

Every series follows

    y_t = eta + alpha * D_t + phi * y_{t-1} + theta' x_t + eps_t,

with ``D_t = 1`` only at ``t = t_star + 1``.  Design columns are always laid
out as ``[1, D, y_{t-1}, x_1 .. x_p]`` (the shock column is dropped for
target fits), so the shock coefficient sits at index 1 and its variance
factor at ``gram_inv[1, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, SingularDesignError

RCOND_MIN = 1e-12

INTERCEPT, SHOCK, LAG = 0, 1, 2


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """One unit's response path and covariates.

    ``y[t]`` and ``x[t]`` are indexed by time ``t = 0 .. T``; ``x[0]`` is
    carried along but never used.  A series whose post-shock response is not
    yet observed stores ``NaN`` at ``y[t_star + 1]`` (and ends there), so the
    covariate row needed for the forecast is always present.
    """

    id: str
    y: np.ndarray
    x: np.ndarray
    t_star: int

    def __post_init__(self):
        y = _frozen(self.y, 1, "y")
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        x = _frozen(x, 2, "x")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t_star", int(self.t_star))
        T = y.shape[0] - 1
        if T < 1:
            raise InputError(f"series {self.id!r}: need at least y_0 and y_1")
        if x.shape[0] != y.shape[0]:
            raise InputError(
                f"series {self.id!r}: x has {x.shape[0]} rows but y has {y.shape[0]}"
            )
        if x.shape[1] < 1:
            raise InputError(f"series {self.id!r}: at least one covariate is required")
        if not 1 <= self.t_star < T:
            raise InputError(
                f"series {self.id!r}: t_star={self.t_star} must satisfy 1 <= t_star < T={T}"
            )
        if not np.all(np.isfinite(x[1:])):
            raise InputError(f"series {self.id!r}: non-finite covariate values")
        missing = ~np.isfinite(y)
        if missing.any():
            allowed = np.zeros_like(missing)
            if T == self.t_star + 1:
                allowed[T] = True
            if (missing & ~allowed).any():
                raise InputError(
                    f"series {self.id!r}: only the post-shock response y[t_star+1] "
                    "at the end of the series may be missing"
                )

    @property
    def T(self) -> int:
        return self.y.shape[0] - 1

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def shocked(self) -> bool:
        """Whether the post-shock response ``y[t_star + 1]`` is observed."""
        return bool(np.isfinite(self.y[self.t_star + 1]))

    @property
    def x_shock(self) -> np.ndarray:
        return self.x[self.t_star + 1]

    @property
    def y_shock(self) -> float:
        return float(self.y[self.t_star + 1])

    def truncated(self, end_t: int) -> "TimeSeries":
        """Copy keeping ``t = 0 .. end_t``."""
        return replace(self, y=self.y[: end_t + 1], x=self.x[: end_t + 1])

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.id == other.id
            and self.t_star == other.t_star
            and np.array_equal(self.y, other.y, equal_nan=True)
            and np.array_equal(self.x, other.x)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DonorPool:
    """A target series plus ``n >= 1`` shocked donor series."""

    donors: tuple
    target: TimeSeries

    def __post_init__(self):
        donors = tuple(self.donors)
        object.__setattr__(self, "donors", donors)
        if not donors:
            raise InputError("donor pool is empty")
        ids = [d.id for d in donors]
        if len(set(ids)) != len(ids):
            raise InputError("donor ids must be distinct")
        if self.target.id in ids:
            raise InputError(f"target id {self.target.id!r} is also a donor id")
        for d in donors:
            if not d.shocked:
                raise InputError(f"donor {d.id!r} has no observed post-shock response")
            if d.p != self.target.p:
                raise InputError(
                    f"donor {d.id!r} has p={d.p} covariates, target has p={self.target.p}"
                )

    @property
    def n(self) -> int:
        return len(self.donors)

    @property
    def p(self) -> int:
        return self.target.p

    def without(self, index: int) -> "DonorPool":
        """Pool in which donor ``index`` becomes the target."""
        rest = self.donors[:index] + self.donors[index + 1:]
        return DonorPool(rest, self.donors[index])

    def __eq__(self, other):
        if not isinstance(other, DonorPool):
            return NotImplemented
        return self.target == other.target and self.donors == other.donors

    __hash__ = None


@dataclass(frozen=True, eq=False)
class FitResult:
    """OLS estimates for one series.

    ``coef`` is ordered ``(eta, alpha, phi, theta_1 .. theta_p)`` for donor
    fits and ``(eta, phi, theta_1 .. theta_p)`` for target fits.
    """

    coef: np.ndarray
    residuals: np.ndarray
    sigma2_hat: float
    gram_inv: np.ndarray
    n_obs: int
    n_params: int
    series_id: Optional[str] = None
    has_shock: bool = False
    rcond: float = field(default=np.nan, repr=False)

    @property
    def eta_hat(self) -> float:
        return float(self.coef[INTERCEPT])

    @property
    def phi_hat(self) -> float:
        return float(self.coef[LAG if self.has_shock else 1])

    @property
    def theta_hat(self) -> np.ndarray:
        return self.coef[LAG + 1 if self.has_shock else 2:]

    @property
    def alpha_hat(self) -> float:
        if not self.has_shock:
            raise InputError("target fits carry no shock coefficient")
        return float(self.coef[SHOCK])

    @property
    def alpha_var(self) -> float:
        """Estimated variance of the shock coefficient."""
        if not self.has_shock:
            raise InputError("target fits carry no shock coefficient")
        return float(self.sigma2_hat * self.gram_inv[SHOCK, SHOCK])


def build_design(series: TimeSeries, include_shock: bool, end_t: int):
    """Design matrix and response for rows ``t = 1 .. end_t``."""
    end_t = int(end_t)
    if not 1 <= end_t <= series.T:
        raise InputError(f"series {series.id!r}: end_t={end_t} outside 1..{series.T}")
    if include_shock and end_t < series.t_star + 1:
        raise InputError(
            f"series {series.id!r}: a shock column needs end_t >= t_star + 1"
        )
    response = np.array(series.y[1:end_t + 1])
    if not np.all(np.isfinite(response)):
        raise InputError(f"series {series.id!r}: unobserved response inside the fit window")
    cols = [np.ones(end_t)]
    if include_shock:
        d = np.zeros(end_t)
        d[series.t_star] = 1.0  # row index t - 1 for t = t_star + 1
        cols.append(d)
    cols.append(series.y[:end_t])
    design = np.column_stack(cols + [series.x[1:end_t + 1]])
    return design, response


def fit_ols(design, response, series_id=None) -> FitResult:
    """Least squares via a thin QR factorization.

    Raises :class:`SingularDesignError` when the design's reciprocal
    condition number is below ``1e-12``.
    """
    U = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if U.ndim != 2 or y.ndim != 1 or U.shape[0] != y.shape[0]:
        raise InputError(f"design {U.shape} and response {y.shape} do not conform")
    n_obs, n_params = U.shape
    if n_obs <= n_params:
        raise InputError(
            f"series {series_id!r}: {n_obs} rows cannot identify {n_params} coefficients"
        )
    s = np.linalg.svd(U, compute_uv=False)
    rcond = s[-1] / s[0] if s[0] > 0 else 0.0
    if not rcond >= RCOND_MIN:
        raise SingularDesignError(series_id, rcond)
    q, r = np.linalg.qr(U)
    coef = solve_triangular(r, q.T @ y)
    resid = y - U @ coef
    r_inv = solve_triangular(r, np.eye(n_params))
    gram_inv = r_inv @ r_inv.T
    gram_inv = 0.5 * (gram_inv + gram_inv.T)
    sigma2 = float(resid @ resid) / (n_obs - n_params)
    for a in (coef, resid, gram_inv):
        a.setflags(write=False)
    return FitResult(coef, resid, sigma2, gram_inv, n_obs, n_params, series_id, rcond=rcond)


def fit_donor(series: TimeSeries) -> FitResult:
    """Fit the full shocked model on ``t = 1 .. T``."""
    if not series.shocked:
        raise InputError(f"donor {series.id!r} has no observed post-shock response")
    U, y = build_design(series, True, series.T)
    return replace(fit_ols(U, y, series.id), has_shock=True)


def fit_target(series: TimeSeries) -> FitResult:
    """Fit the shock-free model on the pre-shock window ``t = 1 .. t_star``."""
    U, y = build_design(series, False, series.t_star)
    return fit_ols(U, y, series.id)


def forecast_one(fit: FitResult, series: TimeSeries, alpha: Optional[float] = None) -> float:
    """One-step forecast of ``y[t_star + 1]``; adds ``alpha`` when given."""
    if fit.has_shock:
        raise InputError("forecasts are made from a target (shock-free) fit")
    x_next = series.x[series.t_star + 1] if series.x.shape[0] > series.t_star + 1 else None
    if x_next is None or not np.all(np.isfinite(x_next)):
        raise InputError(f"series {series.id!r}: covariate row t_star+1 is missing")
    base = fit.eta_hat + fit.phi_hat * series.y[series.t_star] + float(fit.theta_hat @ x_next)
    return float(base) if alpha is None else float(base + alpha)


def fitted_path(fit: FitResult, series: TimeSeries) -> np.ndarray:
    """In-sample fitted values of a target fit for ``t = 1 .. t_star``."""
    U, _ = build_design(series, False, series.t_star)
    return U @ fit.coef
