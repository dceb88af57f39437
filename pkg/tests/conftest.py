import numpy as np
import pytest

from postshock.panel import DonorPool, TimeSeries


def ar_series(sid, T, t_star, eta=1.0, phi=0.5, theta=(1.0,), alpha=0.0, sigma=1.0,
              seed=0, y0=0.0, observed=True, x=None):
    """Simulate one shock-augmented AR(1) series (test helper, independent of the package DGP)."""
    g = np.random.default_rng(seed)
    theta = np.asarray(theta, dtype=float)
    if x is None:
        x = g.gamma(1.0, 2.0, size=(T + 1, theta.size))
    y = np.empty(T + 1)
    y[0] = y0
    for t in range(1, T + 1):
        y[t] = eta + phi * y[t - 1] + x[t] @ theta + sigma * g.standard_normal()
        if t == t_star + 1:
            y[t] += alpha
    if not observed:
        y, x = y[: t_star + 2].copy(), x[: t_star + 2]
        y[-1] = np.nan
    return TimeSeries(sid, y, x, t_star)


def noiseless_pool(n=3, alpha=5.0, p=1, T=30, t_star=20, observed_target=True):
    """Donors share (eta, phi, theta, alpha) and differ only in covariates; no noise."""
    donors = [
        ar_series(f"d{i}", T, t_star, alpha=alpha, sigma=0.0, seed=100 + i, theta=np.ones(p))
        for i in range(n)
    ]
    target = ar_series("tgt", T, t_star, alpha=alpha, sigma=0.0, seed=99, theta=np.ones(p),
                       observed=observed_target)
    return DonorPool(tuple(donors), target)


def noisy_pool(n=5, p=2, T=60, t_star=40, alpha=8.0, sigma=1.0, seed=0):
    g = np.random.default_rng(seed)
    donors = []
    for i in range(n):
        donors.append(ar_series(f"d{i}", T + int(g.integers(0, 10)), t_star, alpha=alpha + g.normal(),
                                sigma=sigma, seed=seed * 1000 + i, theta=g.normal(size=p),
                                phi=g.uniform(0, 0.9)))
    target = ar_series("tgt", T, t_star, alpha=alpha, sigma=sigma, seed=seed * 1000 + 999,
                       theta=g.normal(size=p))
    return DonorPool(tuple(donors), target)


@pytest.fixture
def toy_pool():
    return noiseless_pool()


@pytest.fixture
def small_pool():
    return noisy_pool()


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    """Log one acceptance line (shown in the terminal summary) and return ``ok``."""
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
