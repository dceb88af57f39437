"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same functions with the same argument contracts;
``postshock.kernels`` picks one at import time.
"""

import numpy as np

PIVOT_MIN = 1e-13


def project_simplex(v):
    """Euclidean projection onto ``{w >= 0, sum(w) = 1}``."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def simplex_lsq(A, b, step, tol, max_iter):
    """Minimize ``||A w - b||^2`` over the unit simplex.

    Accelerated projected gradient started from uniform weights, with a
    fallback to a plain gradient step whenever the momentum step would
    increase the objective.  Stops once the objective decrease falls below
    ``tol`` relative to the current objective.

    Returns ``(w, squared_residual_norm, iterations)``.
    """
    n = A.shape[1]
    w = np.full(n, 1.0 / n)
    z = w.copy()
    t = 1.0
    r = A @ w - b
    f = r @ r
    floor = 1e-300
    it = 0
    for it in range(1, max_iter + 1):
        g = A.T @ (A @ z - b)
        w_new = project_simplex(z - step * g)
        r = A @ w_new - b
        f_new = r @ r
        if f_new > f:
            g = A.T @ (A @ w - b)
            w_new = project_simplex(w - step * g)
            r = A @ w_new - b
            f_new = r @ r
            t = 1.0
            z = w_new
            if f_new > f:
                break
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = w_new + ((t - 1.0) / t_new) * (w_new - w)
            t = t_new
        dec = f - f_new
        w, f = w_new, f_new
        if dec <= tol * max(f, floor):
            break
    return w, float(f), it


def _batched_cholesky_solve(G, rhs):
    """Solve ``G beta = rhs`` and ``G z = e_1`` for a stack of SPD matrices.

    Returns ``(beta, z1, ok)`` where ``z1`` is ``(G^{-1})[1, 1]`` and ``ok``
    flags factorizations whose relative pivots stayed above ``PIVOT_MIN``.
    """
    m, k, _ = G.shape
    L = np.zeros_like(G)
    ok = np.ones(m, dtype=bool)
    for j in range(k):
        d = G[:, j, j] - np.einsum("mi,mi->m", L[:, j, :j], L[:, j, :j])
        bad = ~(d > PIVOT_MIN * G[:, j, j])
        ok &= ~bad
        d = np.where(bad, 1.0, d)
        L[:, j, j] = np.sqrt(d)
        for i in range(j + 1, k):
            s = G[:, i, j] - np.einsum("mi,mi->m", L[:, i, :j], L[:, j, :j])
            L[:, i, j] = s / L[:, j, j]

    def solve(rh):
        u = np.empty_like(rh)
        for i in range(k):
            u[:, i] = (rh[:, i] - np.einsum("mi,mi->m", L[:, i, :i], u[:, :i])) / L[:, i, i]
        x = np.empty_like(rh)
        for i in range(k - 1, -1, -1):
            x[:, i] = (u[:, i] - np.einsum("mi,mi->m", L[:, i + 1:, i], x[:, i + 1:])) / L[:, i, i]
        return x

    beta = solve(rhs)
    e1 = np.zeros_like(rhs)
    e1[:, 1] = 1.0
    z = solve(e1)
    return beta, z[:, 1], ok


def bootstrap_alpha(F, FtF, mean_path, phi, y0, pool, draws):
    """Regenerate AR(1) paths from resampled residuals and refit each one.

    Parameters
    ----------
    F : (T, q) array
        Fixed design columns ``[1, D, x_1 .. x_p]`` for ``t = 1 .. T``.
    FtF : (q, q) array
        ``F' F``.
    mean_path : (T,) array
        Fitted non-autoregressive part ``eta + alpha D_t + theta' x_t``.
    phi, y0 : float
        Fitted lag coefficient and the observed initial value.
    pool : (R,) array
        Centered residuals to draw from.
    draws : (m, T) integer array
        Indices into ``pool``; one row per replicate.

    Returns
    -------
    alpha, var_alpha : (m,) arrays
        Refitted shock coefficient and its estimated variance.
    ok : (m,) bool array
        False where the replicate design was numerically singular.
    """
    m, T = draws.shape
    q = F.shape[1]
    k = q + 1
    eps = pool[draws]
    Y = np.empty((m, T))
    Ylag = np.empty((m, T))
    prev = np.full(m, float(y0))
    for t in range(T):
        Ylag[:, t] = prev
        prev = mean_path[t] + phi * prev + eps[:, t]
        Y[:, t] = prev
    Fy = Y @ F
    Fl = Ylag @ F
    ll = np.einsum("mt,mt->m", Ylag, Ylag)
    ly = np.einsum("mt,mt->m", Ylag, Y)
    # full column order [1, D, lag, x...]; F holds [1, D, x...]
    fcol = [0, 1] + list(range(2, q))
    full = [0, 1] + list(range(3, k))
    G = np.empty((m, k, k))
    rhs = np.empty((m, k))
    for a, ca in zip(full, fcol):
        for b_, cb in zip(full, fcol):
            G[:, a, b_] = FtF[ca, cb]
        G[:, a, 2] = Fl[:, ca]
        G[:, 2, a] = Fl[:, ca]
        rhs[:, a] = Fy[:, ca]
    G[:, 2, 2] = ll
    rhs[:, 2] = ly
    beta, z11, ok = _batched_cholesky_solve(G, rhs)
    beta_f = beta[:, full]
    resid = Y - beta_f @ F.T - beta[:, 2:3] * Ylag
    s2 = np.einsum("mt,mt->m", resid, resid) / (T - k)
    alpha = beta[:, 1]
    var = s2 * z11
    alpha = np.where(ok, alpha, np.nan)
    var = np.where(ok, var, np.nan)
    return alpha, var, ok
