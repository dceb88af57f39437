import numpy as np
import pytest

from postshock.bootstrap import (
    BootstrapConfig,
    BootstrapDistribution,
    assess_all,
    bootstrap,
    delta_hat,
    estimate_all,
)
from postshock.errors import DegenerateResidualsError, InputError
from postshock.estimators import ShockEstimate
from postshock.panel import DonorPool, TimeSeries, fit_donor
from postshock.simulate import SimConfig, simulate_pool

from conftest import ar_series, noiseless_pool

NOISELESS = dict(estimators=("adj", "wadj"), allow_degenerate=True)


def fake(estimates, variances):
    ests = {k: ShockEstimate(v, k) for k, v in estimates.items()}
    dist = BootstrapDistribution({}, dict(variances), {})
    return ests, dist


class TestConfig:
    def test_normalization(self):
        cfg = BootstrapConfig(procedure="bu", estimators=("wadj", "adj"))
        assert cfg.procedure == "Bu" and cfg.estimators == ("adj", "wadj")

    @pytest.mark.parametrize("kw", [dict(procedure="bx"), dict(B=1), dict(seed=-1),
                                    dict(estimators=()), dict(estimators=("median",))])
    def test_invalid(self, kw):
        with pytest.raises(InputError):
            BootstrapConfig(**kw)


class TestDeltaHat:
    def test_empirical_arithmetic(self):
        ests, dist = fake({"adj": -4.872, "wadj": -4.805}, {"adj": 0.419})
        r = delta_hat(ests, dist, "adj")
        assert r.delta_hat == pytest.approx(22.66, abs=1e-2)
        assert r.decision == 1

    def test_zero_plugin(self):
        ests, dist = fake({"wadj": 0.0}, {"wadj": 0.3})
        r = delta_hat(ests, dist, "wadj")
        assert r.delta_hat == pytest.approx(-0.3) and r.decision == 0

    def test_noiseless_limit(self):
        ests, dist = fake({"adj": 3.0, "wadj": 3.0}, {"adj": 0.0})
        r = delta_hat(ests, dist, "adj")
        assert r.delta_hat == 9.0 and r.decision == 1

    def test_exact_zero_is_no(self):
        ests, dist = fake({"wadj": 1.0}, {"wadj": 1.0})
        assert delta_hat(ests, dist, "wadj").decision == 0

    def test_needs_plugin(self):
        ests, dist = fake({"adj": 1.0}, {"adj": 1.0})
        with pytest.raises(InputError):
            delta_hat(ests, dist, "adj")


class TestBootstrap:
    @pytest.mark.parametrize("proc", ["Bf", "Bu"])
    def test_deterministic(self, small_pool, proc):
        cfg = BootstrapConfig(procedure=proc, B=40, seed=5)
        a = bootstrap(small_pool, cfg)
        b = bootstrap(small_pool, cfg)
        for k in a.draws:
            np.testing.assert_array_equal(a.draws[k], b.draws[k])
        c = bootstrap(small_pool, BootstrapConfig(procedure=proc, B=40, seed=6))
        assert not np.array_equal(a.draws["adj"], c.draws["adj"])

    def test_variance_ddof1(self, small_pool):
        d = bootstrap(small_pool, BootstrapConfig(B=30, seed=1))
        for k, v in d.sample_var.items():
            assert v == pytest.approx(np.var(d.draws[k], ddof=1))
            assert d.draws[k].shape == (30,)

    def test_bf_centered_on_estimate(self, small_pool):
        _, _, _, est = estimate_all(small_pool, BootstrapConfig())
        d = bootstrap(small_pool, BootstrapConfig(B=400, seed=2))
        se = np.sqrt(d.sample_var["adj"] / 400)
        # residual bootstrap of OLS is centred on the fitted shock up to O(1/T) bias
        assert abs(d.sample_mean["adj"] - est["adj"].value) < 5 * se + 0.05

    def test_degenerate_residuals(self):
        s = ar_series("d", 40, 20, sigma=1e-12, alpha=2.0)
        pool = DonorPool((s,), ar_series("t", 40, 20, observed=False))
        with pytest.raises(DegenerateResidualsError):
            bootstrap(pool, BootstrapConfig(B=5))

    def test_noiseless_allowed(self, toy_pool):
        d = bootstrap(toy_pool, BootstrapConfig(B=10, **NOISELESS))
        assert d.sample_var["adj"] < 1e-16

    def test_bf_analytic_variance(self):
        # fixed pool, so the only randomness is in the residuals: the Bf variance of the
        # average shock should track (1/n^2) sum_i sigma2_i (U_i'U_i)^{-1}_{22} at fitted values
        pool = simulate_pool(SimConfig(model="M1", n=10, sigma=10, sigma_alpha=5, seed=21), 0)
        d = bootstrap(pool, BootstrapConfig(procedure="Bf", B=1000, seed=3, estimators=("adj", "wadj")))
        fits = [fit_donor(s) for s in pool.donors]
        analytic = sum(f.alpha_var for f in fits) / pool.n ** 2
        assert d.sample_var["adj"] == pytest.approx(analytic, rel=0.25)


class TestAssessAll:
    def test_noiseless_decisions(self, toy_pool):
        res = assess_all(toy_pool, BootstrapConfig(B=10, **NOISELESS))
        assert res.decisions == {"adj": 1, "wadj": 1}
        err = res.errors()
        assert err["adj"] < 1e-8 and err["wadj"] < 1e-8 and err["original"] > 1

    def test_single_donor_collapse(self):
        d = ar_series("d", 60, 40, alpha=5.0, seed=3)
        pool = DonorPool((d,), ar_series("t", 60, 40, seed=4, observed=False))
        res = assess_all(pool, BootstrapConfig(B=10))
        a = fit_donor(d).alpha_hat
        for m in ("adj", "ivw", "wadj"):
            assert res.estimates[m].value == pytest.approx(a)
        assert res.errors() is None

    def test_report_fields(self, small_pool):
        res = assess_all(small_pool, BootstrapConfig(B=20, seed=1))
        assert set(res.forecast2) == {"adj", "ivw", "wadj"}
        for m, f in res.forecast2.items():
            assert f - res.forecast1 == pytest.approx(res.estimates[m].value)

    def test_risk_reduction_regime(self):
        # a large common shock with little noise: adjusting should beat not adjusting
        wins = 0
        for seed in range(10):
            cfg = SimConfig(model="M1", n=40, p=3, mu_alpha=9.21, sigma=1.0, sigma_alpha=1.0, seed=seed)
            res = assess_all(simulate_pool(cfg, 0), BootstrapConfig(B=20, seed=seed))
            e = res.errors()
            wins += e["adj"] < e["original"]
            assert res.decisions["adj"] == 1
        assert wins >= 9
