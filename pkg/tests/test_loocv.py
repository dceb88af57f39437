import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from postshock.bootstrap import BootstrapConfig
from postshock.errors import InputError
from postshock.loocv import (
    LoocvConfig,
    LoocvRecord,
    held_out_indices,
    is_correct,
    loocv,
    loocv_iteration,
    summarize,
)
from postshock.panel import DonorPool

from conftest import noiseless_pool, noisy_pool


@pytest.mark.parametrize(
    "decision,e1,e2,expected",
    [(1, 2.0, 1.0, 1), (1, 1.0, 2.0, 0), (0, 1.0, 2.0, 1), (0, 2.0, 1.0, 0), (0, 1.0, 1.0, 1), (1, 1.0, 1.0, 0)],
)
def test_decision_table(decision, e1, e2, expected):
    assert is_correct(decision, e1, e2) == expected


def test_config_validation():
    with pytest.raises(InputError):
        LoocvConfig("sometimes")
    with pytest.raises(InputError):
        LoocvConfig("k_draws", k=0)


def test_k_larger_than_n():
    with pytest.raises(InputError):
        held_out_indices(3, LoocvConfig("k_draws", k=4))


@given(st.integers(1, 30), st.integers(0, 2**32))
def test_held_out_indices_sorted_unique(n, seed):
    k = max(1, n // 2)
    idx = held_out_indices(n, LoocvConfig("k_draws", k=k, seed=seed))
    assert idx == sorted(set(idx)) and len(idx) == k and idx[-1] < n


def test_perfect_signal():
    pool = noiseless_pool(n=4)
    cfg = LoocvConfig(bootstrap=BootstrapConfig(B=5, estimators=("adj", "wadj"), allow_degenerate=True))
    rep = loocv(pool, cfg)
    assert rep.c_bar == {"adj": 1.0, "wadj": 1.0}
    for r in rep.records:
        assert r.decisions == {"adj": 1, "wadj": 1}
        assert r.e2["adj"] < 1e-8 < r.e1


def test_forced_wrong_decisions():
    recs = [LoocvRecord("d", i, {"adj": 0}, 2.0, {"adj": 1.0}, {"adj": is_correct(0, 2.0, 1.0)})
            for i in range(4)]
    assert summarize(recs, ("adj",)).c_bar["adj"] == 0.0


def test_k_equal_n_matches_full():
    pool = noisy_pool(n=4, seed=2)
    b = BootstrapConfig(B=15)
    full = loocv(pool, LoocvConfig("full", seed=3, bootstrap=b))
    kd = loocv(pool, LoocvConfig("k_draws", k=4, seed=3, bootstrap=b))
    assert full.c_bar == kd.c_bar
    assert [r.e2 for r in full.records] == [r.e2 for r in kd.records]


def test_c_bar_range_and_count():
    pool = noisy_pool(n=5, seed=4, sigma=3.0)
    rep = loocv(pool, LoocvConfig("k_draws", k=3, seed=1, bootstrap=BootstrapConfig(B=15)))
    assert len(rep.records) == 3
    for v in rep.c_bar.values():
        assert 0.0 <= v <= 1.0
        assert v * 3 == pytest.approx(round(v * 3))


def test_needs_two_donors():
    pool = noisy_pool(n=2)
    with pytest.raises(InputError):
        loocv(DonorPool(pool.donors[:1], pool.target), LoocvConfig())


def test_held_out_becomes_target():
    pool = noisy_pool(n=4, seed=7)
    rec = loocv_iteration(pool, 2, LoocvConfig(bootstrap=BootstrapConfig(B=10)))
    assert rec.held_out == pool.donors[2].id and rec.index == 2


def test_near_unbiased_under_independence():
    # average LOOCV correctness over seeded pools vs correctness measured on fresh targets
    from postshock.bootstrap import assess_all
    from postshock.simulate import SimConfig, simulate_draw

    b = BootstrapConfig(procedure="Bu", B=40, estimators=("adj", "wadj"))
    c_bar, fresh = [], []
    for seed in range(50):
        cfg = SimConfig(model="M1", n=6, p=3, mu_alpha=2.0, sigma=2.0, sigma_alpha=2.0, seed=seed)
        pool = simulate_draw(cfg, 0).pool
        c_bar.append(loocv(pool, LoocvConfig(seed=seed, bootstrap=b)).c_bar["adj"])
        hits = []
        for j in range(1, 7):
            target = simulate_draw(cfg, j).pool.target
            res = assess_all(DonorPool(pool.donors, target), b)
            e = res.errors()
            hits.append(is_correct(res.decisions["adj"], e["original"], e["adj"]))
        fresh.append(np.mean(hits))
    assert abs(np.mean(c_bar) - np.mean(fresh)) < 0.1
