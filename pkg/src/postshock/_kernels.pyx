# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()

cdef double PIVOT_MIN = 1e-13


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double x = (<double*>a)[0]
    cdef double y = (<double*>b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


cdef void _project_simplex(double* v, double* out, double* work, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, rho = 0
    cdef double css = 0.0, css_rho = 0.0, theta
    for i in range(n):
        work[i] = v[i]
    qsort(work, n, sizeof(double), _cmp_desc)
    for i in range(n):
        css += work[i]
        if work[i] - (css - 1.0) / (i + 1.0) > 0:
            rho = i
            css_rho = css
    theta = (css_rho - 1.0) / (rho + 1.0)
    for i in range(n):
        out[i] = v[i] - theta
        if out[i] < 0:
            out[i] = 0.0


cdef double _sqres(const double[:, ::1] A, const double[::1] b, double* w,
                   double* r, Py_ssize_t p, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s, f = 0.0
    for i in range(p):
        s = -b[i]
        for j in range(n):
            s += A[i, j] * w[j]
        r[i] = s
        f += s * s
    return f


cdef void _grad(const double[:, ::1] A, double* r, double* g,
                Py_ssize_t p, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    for j in range(n):
        g[j] = 0.0
    for i in range(p):
        for j in range(n):
            g[j] += A[i, j] * r[i]


def project_simplex(v):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double* work = <double*>malloc(n * sizeof(double))
    _project_simplex(&vv[0], &o[0], work, n)
    free(work)
    return out


def simplex_lsq(const double[:, ::1] A, const double[::1] b, double step,
                double tol, int max_iter):
    cdef Py_ssize_t p = A.shape[0], n = A.shape[1], j
    cdef int it = 0
    cdef double t = 1.0, t_new, f, f_new, dec, mom
    cdef double floor = 1e-300
    w_arr = np.full(n, 1.0 / n)
    cdef double[::1] w = w_arr
    cdef double* z = <double*>malloc(n * sizeof(double))
    cdef double* wn = <double*>malloc(n * sizeof(double))
    cdef double* tmp = <double*>malloc(n * sizeof(double))
    cdef double* work = <double*>malloc(n * sizeof(double))
    cdef double* g = <double*>malloc(n * sizeof(double))
    cdef double* r = <double*>malloc(p * sizeof(double))
    try:
        with nogil:
            for j in range(n):
                z[j] = w[j]
            f = _sqres(A, b, &w[0], r, p, n)
            while it < max_iter:
                it += 1
                _sqres(A, b, z, r, p, n)
                _grad(A, r, g, p, n)
                for j in range(n):
                    tmp[j] = z[j] - step * g[j]
                _project_simplex(tmp, wn, work, n)
                f_new = _sqres(A, b, wn, r, p, n)
                if f_new > f:
                    _sqres(A, b, &w[0], r, p, n)
                    _grad(A, r, g, p, n)
                    for j in range(n):
                        tmp[j] = w[j] - step * g[j]
                    _project_simplex(tmp, wn, work, n)
                    f_new = _sqres(A, b, wn, r, p, n)
                    t = 1.0
                    for j in range(n):
                        z[j] = wn[j]
                    if f_new > f:
                        break
                else:
                    t_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
                    mom = (t - 1.0) / t_new
                    for j in range(n):
                        z[j] = wn[j] + mom * (wn[j] - w[j])
                    t = t_new
                dec = f - f_new
                for j in range(n):
                    w[j] = wn[j]
                f = f_new
                if dec <= tol * (f if f > floor else floor):
                    break
    finally:
        free(z); free(wn); free(tmp); free(work); free(g); free(r)
    return w_arr, f, it


cdef bint _chol_solve(double* G, double* L, double* rhs, double* beta,
                      double* z, double* u, Py_ssize_t k) noexcept nogil:
    """Cholesky of G (k x k, row-major); solves for beta and z = G^{-1} e_1."""
    cdef Py_ssize_t i, j, l
    cdef double s, d
    for j in range(k):
        d = G[j * k + j]
        for l in range(j):
            d -= L[j * k + l] * L[j * k + l]
        if not (d > PIVOT_MIN * G[j * k + j]):
            return False
        L[j * k + j] = sqrt(d)
        for i in range(j + 1, k):
            s = G[i * k + j]
            for l in range(j):
                s -= L[i * k + l] * L[j * k + l]
            L[i * k + j] = s / L[j * k + j]
    # beta
    for i in range(k):
        s = rhs[i]
        for l in range(i):
            s -= L[i * k + l] * u[l]
        u[i] = s / L[i * k + i]
    for i in range(k - 1, -1, -1):
        s = u[i]
        for l in range(i + 1, k):
            s -= L[l * k + i] * beta[l]
        beta[i] = s / L[i * k + i]
    # z = G^{-1} e_1
    for i in range(k):
        s = 1.0 if i == 1 else 0.0
        for l in range(i):
            s -= L[i * k + l] * u[l]
        u[i] = s / L[i * k + i]
    for i in range(k - 1, -1, -1):
        s = u[i]
        for l in range(i + 1, k):
            s -= L[l * k + i] * z[l]
        z[i] = s / L[i * k + i]
    return True


def bootstrap_alpha(const double[:, ::1] F, const double[:, ::1] FtF,
                    const double[::1] mean_path, double phi, double y0,
                    const double[::1] pool, const cnp.int64_t[:, ::1] draws):
    cdef Py_ssize_t m = draws.shape[0], T = draws.shape[1]
    cdef Py_ssize_t q = F.shape[1], k = q + 1
    cdef Py_ssize_t b, t, c, c2, a, a2
    cdef double prev, yt, s, rss, ll, ly
    alpha_arr = np.full(m, np.nan)
    var_arr = np.full(m, np.nan)
    ok_arr = np.zeros(m, dtype=bool)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] var = var_arr
    cdef cnp.npy_bool[::1] ok = ok_arr
    cdef double* y = <double*>malloc(T * sizeof(double))
    cdef double* ylag = <double*>malloc(T * sizeof(double))
    cdef double* Fy = <double*>malloc(q * sizeof(double))
    cdef double* Fl = <double*>malloc(q * sizeof(double))
    cdef double* G = <double*>malloc(k * k * sizeof(double))
    cdef double* L = <double*>malloc(k * k * sizeof(double))
    cdef double* rhs = <double*>malloc(k * sizeof(double))
    cdef double* beta = <double*>malloc(k * sizeof(double))
    cdef double* z = <double*>malloc(k * sizeof(double))
    cdef double* u = <double*>malloc(k * sizeof(double))
    cdef Py_ssize_t* full = <Py_ssize_t*>malloc(q * sizeof(Py_ssize_t))
    try:
        with nogil:
            # F column c sits at full-design column full[c]; the lag is column 2
            for c in range(q):
                full[c] = c if c < 2 else c + 1
            for b in range(m):
                prev = y0
                for t in range(T):
                    ylag[t] = prev
                    prev = mean_path[t] + phi * prev + pool[draws[b, t]]
                    y[t] = prev
                for c in range(q):
                    Fy[c] = 0.0
                    Fl[c] = 0.0
                ll = 0.0
                ly = 0.0
                for t in range(T):
                    for c in range(q):
                        Fy[c] += F[t, c] * y[t]
                        Fl[c] += F[t, c] * ylag[t]
                    ll += ylag[t] * ylag[t]
                    ly += ylag[t] * y[t]
                for c in range(q):
                    a = full[c]
                    for c2 in range(q):
                        G[a * k + full[c2]] = FtF[c, c2]
                    G[a * k + 2] = Fl[c]
                    G[2 * k + a] = Fl[c]
                    rhs[a] = Fy[c]
                G[2 * k + 2] = ll
                rhs[2] = ly
                if not _chol_solve(G, L, rhs, beta, z, u, k):
                    continue
                rss = 0.0
                for t in range(T):
                    s = y[t] - beta[2] * ylag[t]
                    for c in range(q):
                        s -= F[t, c] * beta[full[c]]
                    rss += s * s
                alpha[b] = beta[1]
                var[b] = rss / (T - k) * z[1]
                ok[b] = True
    finally:
        free(y); free(ylag); free(Fy); free(Fl); free(G); free(L)
        free(rhs); free(beta); free(z); free(u); free(full)
    return alpha_arr, var_arr, ok_arr
