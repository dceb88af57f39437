import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postshock import kernels
from postshock._kernels_py import project_simplex
from postshock.bootstrap import _DonorModel
from postshock.panel import LAG, build_design, fit_donor, fit_ols

from conftest import ar_series

BACKENDS = kernels.available_backends()


def test_backend_reported():
    assert kernels.BACKEND in BACKENDS
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@settings(max_examples=100)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=12))
def test_projection_is_on_simplex_and_closest(v):
    v = np.array(v)
    w = project_simplex(v)
    assert w.min() >= 0 and w.sum() == pytest.approx(1.0, abs=1e-9)
    # optimality: <v - w, u - w> <= 0 for every vertex u
    g = v - w
    assert np.all(g - g @ w <= 1e-7 * max(1.0, np.abs(v).max()))


@pytest.mark.parametrize("backend", BACKENDS)
def test_simplex_lsq_exact_member(backend):
    A = np.array([[0.0, 1.0, 3.0], [2.0, 0.0, 1.0]])
    w, f, it = kernels.simplex_lsq(A, A[:, 1], backend=backend)
    np.testing.assert_allclose(w, [0, 1, 0], atol=1e-6)
    assert f < 1e-10


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_simplex_lsq_backends_agree(n, p, seed):
    g = np.random.default_rng(seed)
    A = g.normal(size=(p, n))
    b = g.normal(size=p)
    w1, f1, _ = kernels.simplex_lsq(A, b, backend="cython")
    w2, f2, _ = kernels.simplex_lsq(A, b, backend="python")
    assert f1 == pytest.approx(f2, rel=1e-8, abs=1e-10)
    if p >= n:  # unique minimizer
        np.testing.assert_allclose(w1, w2, atol=1e-6)


def _model(seed=0):
    s = ar_series("d", 80, 50, alpha=4.0, sigma=1.5, theta=(1.0, -0.5), seed=seed)
    return s, _DonorModel(s, fit_donor(s))


@pytest.mark.parametrize("backend", BACKENDS)
def test_bootstrap_alpha_matches_ols_refit(backend):
    s, m = _model()
    g = np.random.default_rng(3)
    T = m.F.shape[0]
    draws = g.integers(0, m.pool.size, size=(4, T))
    alpha, var, ok = m.replicate(draws, backend)
    assert ok.all()
    for b in range(4):
        # regenerate the path by hand, then refit with the reference OLS
        y = np.empty(T + 1)
        y[0] = s.y[0]
        for t in range(1, T + 1):
            y[t] = m.mean_path[t - 1] + m.phi * y[t - 1] + m.pool[draws[b, t - 1]]
        U = np.insert(m.F, LAG, y[:-1], axis=1)
        fit = fit_ols(U, y[1:])
        assert alpha[b] == pytest.approx(fit.coef[1], rel=1e-9, abs=1e-9)
        assert var[b] == pytest.approx(fit.sigma2_hat * fit.gram_inv[1, 1], rel=1e-8)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_bootstrap_alpha_backends_agree():
    _, m = _model(4)
    draws = np.random.default_rng(9).integers(0, m.pool.size, size=(50, m.F.shape[0]))
    a1, v1, ok1 = m.replicate(draws, "cython")
    a2, v2, ok2 = m.replicate(draws, "python")
    np.testing.assert_array_equal(ok1, ok2)
    np.testing.assert_allclose(a1, a2, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(v1, v2, rtol=1e-8)


@pytest.mark.parametrize("backend", BACKENDS)
def test_bootstrap_alpha_flags_singular(backend):
    # a constant covariate duplicates the intercept, so every refit is singular
    s = ar_series("d", 40, 20, sigma=1.0, x=np.ones((41, 1)) * 2.0)
    U, y = build_design(s, True, s.T)
    F = np.delete(U, LAG, axis=1)
    pool = np.random.default_rng(0).normal(size=39)
    draws = np.zeros((2, 40), dtype=np.int64)
    _, _, ok = kernels.bootstrap_alpha(F, F.T @ F, np.zeros(40), 0.3, 0.0, pool, draws, backend=backend)
    assert not ok.any()
