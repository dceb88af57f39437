"""Backend selection for the numerical kernels.

The compiled extension ``postshock._kernels`` is used when it imports;
otherwise (or when ``POSTSHOCK_PURE_PYTHON=1`` is set) the numpy versions in
``postshock._kernels_py`` take over.  Both honour identical contracts.
"""

import os

import numpy as np

from . import _kernels_py

_FORCE_PY = os.environ.get("POSTSHOCK_PURE_PYTHON", "").strip() not in ("", "0")

try:
    if _FORCE_PY:
        raise ImportError("pure-python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

SOLVER_TOL = 1e-9
SOLVER_MAX_ITER = 10_000


def available_backends():
    return ("cython", "python") if _compiled is not None else ("python",)


def get_backend(name=None):
    """Return the kernel module called ``name`` (default: the active one)."""
    name = name or BACKEND
    if name == "python":
        return _kernels_py
    if name == "cython" and _compiled is not None:
        return _compiled
    raise ValueError(f"kernel backend {name!r} is not available")


def simplex_lsq(A, b, tol=SOLVER_TOL, max_iter=SOLVER_MAX_ITER, backend=None):
    """Least squares ``min ||A w - b||`` over the unit simplex (see module docs).

    ``A`` has one column per donor.  Returns ``(w, squared_norm, iterations)``.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    lip = np.linalg.norm(A, 2) ** 2
    step = 1.0 / lip if lip > 0 else 1.0
    return get_backend(backend).simplex_lsq(A, b, step, float(tol), int(max_iter))


def bootstrap_alpha(F, FtF, mean_path, phi, y0, pool, draws, backend=None):
    return get_backend(backend).bootstrap_alpha(
        np.ascontiguousarray(F, dtype=np.float64),
        np.ascontiguousarray(FtF, dtype=np.float64),
        np.ascontiguousarray(mean_path, dtype=np.float64),
        float(phi),
        float(y0),
        np.ascontiguousarray(pool, dtype=np.float64),
        np.ascontiguousarray(draws, dtype=np.int64),
    )
