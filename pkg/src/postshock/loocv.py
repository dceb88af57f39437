"""Leave-one-out cross validation of the use/don't-use decision rule.

Each held-out donor plays the target: the remaining donors form the pool,
the full estimate/bootstrap/decide pipeline runs, and the decision is scored
against the held-out donor's observed post-shock response.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Tuple

import numpy as np

from . import rng
from .bootstrap import BootstrapConfig, assess_all
from .errors import InputError
from .panel import DonorPool


@dataclass(frozen=True)
class LoocvConfig:
    mode: str = "full"
    k: int = 0
    seed: int = 0
    bootstrap: BootstrapConfig = BootstrapConfig()

    def __post_init__(self):
        if self.mode not in ("full", "k_draws"):
            raise InputError(f"unknown LOOCV mode {self.mode!r}")
        if self.mode == "k_draws" and int(self.k) < 1:
            raise InputError("k must be a positive integer")
        if int(self.seed) < 0:
            raise InputError("seed must be non-negative")


@dataclass(frozen=True)
class LoocvRecord:
    held_out: str
    index: int
    decisions: Dict[str, int]
    e1: float
    e2: Dict[str, float]
    correct: Dict[str, int]


@dataclass(frozen=True)
class LoocvReport:
    c_bar: Dict[str, float]
    records: Tuple[LoocvRecord, ...]
    mode: str = "full"


def is_correct(decision: int, e1: float, e2: float) -> int:
    """Score one decision against realized errors.

    Using the adjustment is right when it strictly reduced the error; not
    using it is right otherwise (ties count as "did not help").
    """
    helped = e2 < e1
    return int(helped if decision == 1 else not helped)


def held_out_indices(n: int, cfg: LoocvConfig):
    if cfg.mode == "full":
        return list(range(n))
    if cfg.k > n:
        raise InputError(f"k={cfg.k} exceeds the donor count n={n}")
    picked = rng.stream(cfg.seed, rng.LOOCV_PICK).choice(n, size=cfg.k, replace=False)
    return sorted(int(i) for i in picked)


def iteration_seed(seed: int, m: int) -> int:
    return rng.derive_seed(seed, rng.LOOCV_ITER, m)


def loocv_iteration(pool: DonorPool, m: int, cfg: LoocvConfig, backend=None) -> LoocvRecord:
    pseudo = pool.without(m)
    bcfg = replace(cfg.bootstrap, seed=iteration_seed(cfg.seed, m))
    res = assess_all(pseudo, bcfg, backend=backend)
    errs = res.errors()
    e1 = errs["original"]
    e2 = {k: errs[k] for k in bcfg.estimators}
    dec = res.decisions
    correct = {k: is_correct(dec[k], e1, e2[k]) for k in bcfg.estimators}
    return LoocvRecord(pseudo.target.id, m, dec, e1, e2, correct)


def summarize(records, estimators, mode="full") -> LoocvReport:
    records = tuple(records)
    c_bar = {k: float(np.mean([r.correct[k] for r in records])) for k in estimators}
    return LoocvReport(c_bar, records, mode)


def loocv(pool: DonorPool, cfg: LoocvConfig, backend=None) -> LoocvReport:
    """Estimate how often the decision rule is correct, per estimator."""
    if pool.n < 2:
        raise InputError("cross validation needs at least two donors")
    records = [loocv_iteration(pool, m, cfg, backend) for m in held_out_indices(pool.n, cfg)]
    return summarize(records, cfg.bootstrap.estimators, cfg.mode)
