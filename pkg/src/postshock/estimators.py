"""Aggregating donor shock estimates into a shock effect for the target."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from . import kernels
from .errors import DegenerateVarianceError, InputError, StandardizationError
from .panel import FitResult, TimeSeries

METHODS = ("adj", "ivw", "wadj")


@dataclass(frozen=True)
class DonorShock:
    donor_id: str
    alpha_hat: float
    var_hat: float
    x_shock: tuple

    def __post_init__(self):
        if not self.var_hat >= 0:
            raise InputError(f"donor {self.donor_id!r}: negative shock variance")
        object.__setattr__(self, "x_shock", tuple(float(v) for v in self.x_shock))


def donor_shock(series: TimeSeries, fit: FitResult) -> DonorShock:
    return DonorShock(series.id, fit.alpha_hat, fit.alpha_var, series.x_shock)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Simplex weights and the attained matching norm."""

    w: np.ndarray
    objective: float
    norm_order: float = 2.0

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.size


@dataclass(frozen=True, eq=False)
class ShockEstimate:
    value: float
    method: str
    weights: object = None
    components: tuple = ()

    @property
    def weight_array(self):
        if isinstance(self.weights, WeightVector):
            return self.weights.w
        return None if self.weights is None else np.asarray(self.weights)


def _alphas(shocks):
    if len(shocks) == 0:
        raise InputError("no donor shocks to aggregate")
    return np.array([s.alpha_hat for s in shocks], dtype=float)


def alpha_adj(shocks: Sequence[DonorShock]) -> ShockEstimate:
    """Plain average of the donor shock estimates."""
    a = _alphas(shocks)
    w = np.full(a.size, 1.0 / a.size)
    return ShockEstimate(float(np.mean(a)), "adj", w, tuple(shocks))


def alpha_ivw(shocks: Sequence[DonorShock]) -> ShockEstimate:
    """Inverse-variance weighted average.

    A donor with zero estimated variance would absorb all the weight; that is
    refused with :class:`DegenerateVarianceError` rather than silently done.
    """
    a = _alphas(shocks)
    v = np.array([s.var_hat for s in shocks], dtype=float)
    if not np.all(v > 0):
        bad = [s.donor_id for s in shocks if not s.var_hat > 0]
        raise DegenerateVarianceError(f"zero shock variance for donors {bad}")
    prec = 1.0 / v
    w = prec / prec.sum()
    return ShockEstimate(float(np.sum(prec * a) / prec.sum()), "ivw", w, tuple(shocks))


def standardize_rows(x_target, donor_rows):
    """Center and scale each covariate by mean/sd over donors and target together."""
    x_target = np.asarray(x_target, dtype=float)
    donor_rows = np.asarray(donor_rows, dtype=float)
    stacked = np.vstack([donor_rows, x_target[None, :]])
    mu = stacked.mean(axis=0)
    sd = stacked.std(axis=0, ddof=1)
    if not np.all(sd > 0):
        cols = np.nonzero(~(sd > 0))[0].tolist()
        raise StandardizationError(f"covariates {cols} have zero spread across the pool")
    return (x_target - mu) / sd, (donor_rows - mu) / sd


def _support_lsq(As, b):
    """Least squares over the affine set ``sum(v) = 1`` (minimum-norm if rank deficient)."""
    k = As.shape[1]
    v0 = np.full(k, 1.0 / k)
    if k == 1:
        return v0
    N = null_space(np.ones((1, k)))
    z = np.linalg.lstsq(As @ N, b - As @ v0, rcond=None)[0]
    return v0 + N @ z


def _polish(A, b, w):
    """Active-set refinement of a projected-gradient solution.

    Starting from the support of ``w``, alternately solves the
    equality-constrained least squares on the support (stepping back to the
    boundary and dropping a coordinate whenever the solution leaves the
    simplex) and adds the inactive coordinate with the most negative reduced
    gradient, until the KKT conditions hold.  The refined point is kept only
    if it is no worse.
    """
    n = w.size
    f0 = float(np.sum((A @ w - b) ** 2))
    cur = np.where(w > 1e-12, w, 0.0)
    if cur.sum() <= 0:
        cur = np.zeros(n)
        cur[int(np.argmax(w))] = 1.0
    cur /= cur.sum()
    support = cur > 0
    scale = max(1.0, float(np.abs(A).max()) ** 2, float(np.abs(b).max()) ** 2)
    for _ in range(10 * n + 10):
        idx = np.nonzero(support)[0]
        v = _support_lsq(A[:, idx], b)
        if np.any(v < 0):
            # move from the current point toward v until a coordinate hits zero
            c = cur[idx]
            neg = v < 0
            ratios = np.full(c.size, np.inf)
            ratios[neg] = c[neg] / (c[neg] - v[neg])
            blocking = int(np.argmin(ratios))
            step = float(np.clip(ratios[blocking], 0.0, 1.0))
            c = c + step * (v - c)
            c[neg & (c <= 1e-15)] = 0.0
            c[blocking] = 0.0
            c = np.maximum(c, 0.0)
            cur = np.zeros(n)
            cur[idx] = c / c.sum()
            support = cur > 0
            continue
        cur = np.zeros(n)
        cur[idx] = v
        g = A.T @ (A @ cur - b)
        lam = float(g[idx].mean())
        reduced = np.where(support, np.inf, g - lam)
        j = int(np.argmin(reduced))
        if reduced[j] >= -1e-12 * scale:
            break
        support[j] = True
    cur = np.maximum(cur, 0.0)
    cur /= cur.sum()
    f1 = float(np.sum((A @ cur - b) ** 2))
    return (cur, f1) if f1 <= f0 else (w, f0)


def _solve_general_norm(A, b, order):
    n = A.shape[1]
    p = A.shape[0]
    if order == 1 or np.isinf(order):
        # variables [w (n), s (p or 1)]
        if order == 1:
            c = np.concatenate([np.zeros(n), np.ones(p)])
            eye = np.eye(p)
            A_ub = np.block([[A, -eye], [-A, -eye]])
        else:
            c = np.concatenate([np.zeros(n), [1.0]])
            ones = np.ones((p, 1))
            A_ub = np.block([[A, -ones], [-A, -ones]])
        b_ub = np.concatenate([b, -b])
        m = c.size - n
        A_eq = np.concatenate([np.ones(n), np.zeros(m)])[None, :]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, 1)] * n + [(0, None)] * m, method="highs")
        w = np.clip(res.x[:n], 0, None)
        return w / w.sum()
    w0, _, _ = kernels.simplex_lsq(A, b)
    res = minimize(
        lambda w: np.sum(np.abs(A @ w - b) ** order),
        w0,
        method="SLSQP",
        bounds=[(0, 1)] * n,
        constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0}],
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    w = np.clip(res.x, 0, None)
    return w / w.sum()


def solve_weights(x_target, donor_rows, norm_order=2.0, standardize=True) -> WeightVector:
    """Simplex weights making the donors' shock-time covariates match the target's.

    Minimizes ``||x_target - sum_i w_i donor_rows[i]||`` over the unit
    simplex.  With ``standardize`` both sides are first centered and scaled by
    the per-covariate mean and standard deviation over donors and target, and
    the reported objective is measured in those units.

    The Euclidean case uses accelerated projected gradient from uniform
    weights followed by a support polish; when several weight vectors attain
    the minimum (fewer covariates than donors), the one reached from the
    uniform start is returned.
    """
    x_target = np.asarray(x_target, dtype=float).ravel()
    donor_rows = np.atleast_2d(np.asarray(donor_rows, dtype=float))
    if donor_rows.ndim != 2 or donor_rows.shape[0] < 1:
        raise InputError("donor_rows must be an n x p matrix with n >= 1")
    if donor_rows.shape[1] != x_target.size or x_target.size < 1:
        raise InputError(
            f"target has {x_target.size} covariates, donors have {donor_rows.shape[1]}"
        )
    order = float(norm_order)
    if not order >= 1:
        raise InputError("norm_order must be >= 1")
    if standardize:
        x_target, donor_rows = standardize_rows(x_target, donor_rows)
    A = donor_rows.T
    n = donor_rows.shape[0]
    if n == 1:
        w = np.ones(1)
    elif order == 2:
        w, _, _ = kernels.simplex_lsq(A, x_target)
        w, _ = _polish(A, x_target, w)
    else:
        w = _solve_general_norm(A, x_target, order)
    objective = float(np.linalg.norm(x_target - A @ w, ord=order))
    return WeightVector(w, objective, order)


def alpha_wadj(shocks: Sequence[DonorShock], weights: WeightVector) -> ShockEstimate:
    """Similarity-weighted average of the donor shock estimates."""
    a = _alphas(shocks)
    w = weights.w if isinstance(weights, WeightVector) else np.asarray(weights, dtype=float)
    if w.size != a.size:
        raise InputError(f"{w.size} weights for {a.size} donor shocks")
    return ShockEstimate(float(w @ a), "wadj", weights, tuple(shocks))


def compose_additive(parts: Sequence[ShockEstimate]) -> ShockEstimate:
    """Sum of separately estimated shock components."""
    parts = tuple(parts)
    if not parts:
        raise InputError("nothing to compose")
    return ShockEstimate(float(sum(p.value for p in parts)), "additive", None, parts)
