"""Independent reference solutions used by several test modules."""

import itertools

import numpy as np


def simplex_grid(n, res):
    """All points of the unit simplex in R^n with coordinates on a ``res`` grid."""
    m = int(round(1 / res))
    if n == 1:
        return np.ones((1, 1))
    pts = []
    for head in itertools.product(range(m + 1), repeat=n - 1):
        s = sum(head)
        if s <= m:
            pts.append(head + (m - s,))
    return np.array(pts, dtype=float) / m


def _grid_1e3(n):
    # closed form enumeration that stays fast for n <= 3
    m = 1000
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        a = np.arange(m + 1) / m
        return np.column_stack([a, 1 - a])
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, m - i - j]) / m


def grid_oracle(A, b, order=2, res=1e-3):
    """Best objective ``||A w - b||`` over a simplex grid.

    Exhaustive at resolution 1e-3 for up to 3 donors; for more donors a
    0.02 grid is searched first and then a 1e-3 grid in a box around the
    coarse optimum (the objective is convex).
    """
    n = A.shape[1]

    def obj(W):
        return np.linalg.norm(W @ A.T - b, ord=order, axis=1)

    if n <= 3:
        W = _grid_1e3(n)
        f = obj(W)
        k = int(np.argmin(f))
        return f[k], W[k]
    coarse = simplex_grid(n, 0.02)
    f = obj(coarse)
    w0 = coarse[np.argmin(f)]
    steps = np.arange(-20, 21) / 1000
    offs = np.array(list(itertools.product(steps, repeat=n - 1)))
    W = np.empty((offs.shape[0], n))
    W[:, :-1] = w0[:-1] + offs
    W[:, -1] = 1 - W[:, :-1].sum(axis=1)
    W = W[np.all(W >= -1e-12, axis=1)]
    fw = obj(W)
    k = int(np.argmin(fw))
    return (fw[k], W[k]) if fw[k] < f.min() else (f.min(), w0)


def face_oracle(A, b):
    """Exact Euclidean minimum over the simplex by enumerating faces.

    On each face the affine-constrained least-squares problem is solved via
    its KKT system (pseudo-inverse); feasible candidates are compared.
    """
    n = A.shape[1]
    best = (np.inf, None)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            As = A[:, S]
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = 2 * As.T @ As
            K[:k, k] = 1
            K[k, :k] = 1
            rhs = np.concatenate([2 * As.T @ b, [1.0]])
            sol = np.linalg.pinv(K) @ rhs
            ws = sol[:k]
            if np.all(ws >= -1e-10) and abs(ws.sum() - 1) < 1e-8:
                w = np.zeros(n)
                w[list(S)] = np.clip(ws, 0, None)
                w /= w.sum()
                v = np.linalg.norm(A @ w - b)
                if v < best[0]:
                    best = (v, w)
    return best


def normal_equations(U, y):
    """OLS coefficients from explicitly inverting U'U."""
    return np.linalg.inv(U.T @ U) @ (U.T @ y)
