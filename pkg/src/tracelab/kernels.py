"""Dense kernel backends: numba-compiled loops with a pure-numpy fallback.

The backend is picked once at import from the ``TRACELAB_KERNELS``
environment variable (``numba``, ``numpy`` or ``auto``) and can be switched
at runtime with :func:`use_backend`.  Both backends run the same row-cyclic
rotation order and the same pivot rules, so they agree to rounding; each
backend on its own is bitwise deterministic.
"""

import os

import numpy as np

from .errors import ConfigError


# ---------------------------------------------------------------------------
# pure-numpy reference implementations
# ---------------------------------------------------------------------------

def _np_offnorm(a):
    n = a.shape[0]
    acc = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            acc += a[p, q] * a[p, q]
    return np.sqrt(2.0 * acc)


def _np_jacobi(a, v, stop_off, skip_tol, max_sweeps):
    """Row-cyclic threshold Jacobi sweeps, in place on (a, v).

    Returns (sweeps used, final off-diagonal Frobenius norm).  The caller
    owns copies; ``a`` ends (near-)diagonal, ``v`` accumulates rotations.
    """
    n = a.shape[0]
    sweeps = 0
    off = _np_offnorm(a)
    while off > stop_off and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_tol:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = 0.5 * (aqq - app) / apq
                # smaller root of t^2 + 2 theta t - 1 = 0, |t| <= 1
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (theta - np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = c * colp - s * colq
                newq = s * colp + c * colq
                a[:, p] = newp
                a[p, :] = newp
                a[:, q] = newq
                a[q, :] = newq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1
        off = _np_offnorm(a)
    return sweeps, off


def _np_cholesky(a, floor):
    """Lower Cholesky factor of ``a``; returns (L, failed pivot index or -1)."""
    n = a.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        d = a[j, j] - low[j, :j] @ low[j, :j]
        if d <= floor:
            return low, j
        ljj = np.sqrt(d)
        low[j, j] = ljj
        if j + 1 < n:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / ljj
    return low, -1


def _np_solve_lower(low, b):
    """Solve L X = B by forward substitution (B is n-by-k)."""
    x = b.copy()
    n = low.shape[0]
    for i in range(n):
        x[i] = (x[i] - low[i, :i] @ x[:i]) / low[i, i]
    return x


def _np_solve_lower_t(low, b):
    """Solve L^T X = B by back substitution (B is n-by-k)."""
    x = b.copy()
    n = low.shape[0]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - low[i + 1:, i] @ x[i + 1:]) / low[i, i]
    return x


_NUMPY_IMPL = {
    "jacobi": _np_jacobi,
    "cholesky": _np_cholesky,
    "solve_lower": _np_solve_lower,
    "solve_lower_t": _np_solve_lower_t,
}

_REGISTRY = {"numpy": _NUMPY_IMPL}


# ---------------------------------------------------------------------------
# numba implementations (same rotation order, scalar loops)
# ---------------------------------------------------------------------------

def _nb_offnorm(a):
    n = a.shape[0]
    acc = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            acc += a[p, q] * a[p, q]
    return np.sqrt(2.0 * acc)


def _nb_jacobi(a, v, stop_off, skip_tol, max_sweeps, offnorm):
    n = a.shape[0]
    sweeps = 0
    off = offnorm(a)
    while off > stop_off and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= skip_tol:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = 0.5 * (aqq - app) / apq
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (theta - np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        nkp = c * akp - s * akq
                        nkq = s * akp + c * akq
                        a[k, p] = nkp
                        a[p, k] = nkp
                        a[k, q] = nkq
                        a[q, k] = nkq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = offnorm(a)
    return sweeps, off


def _nb_cholesky(a, floor):
    n = a.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        d = a[j, j]
        for k in range(j):
            d -= low[j, k] * low[j, k]
        if d <= floor:
            return low, j
        ljj = np.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            acc = a[i, j]
            for k in range(j):
                acc -= low[i, k] * low[j, k]
            low[i, j] = acc / ljj
    return low, -1


def _nb_solve_lower(low, b):
    x = b.copy()
    n = low.shape[0]
    m = b.shape[1]
    for j in range(m):
        for i in range(n):
            acc = x[i, j]
            for k in range(i):
                acc -= low[i, k] * x[k, j]
            x[i, j] = acc / low[i, i]
    return x


def _nb_solve_lower_t(low, b):
    x = b.copy()
    n = low.shape[0]
    m = b.shape[1]
    for j in range(m):
        for i in range(n - 1, -1, -1):
            acc = x[i, j]
            for k in range(i + 1, n):
                acc -= low[k, i] * x[k, j]
            x[i, j] = acc / low[i, i]
    return x


def _build_numba_impl():
    from numba import njit

    offnorm = njit(cache=True)(_nb_offnorm)
    jacobi_core = njit(cache=True)(_nb_jacobi)

    def jacobi(a, v, stop_off, skip_tol, max_sweeps):
        return jacobi_core(a, v, stop_off, skip_tol, max_sweeps, offnorm)

    return {
        "jacobi": jacobi,
        "cholesky": njit(cache=True)(_nb_cholesky),
        "solve_lower": njit(cache=True)(_nb_solve_lower),
        "solve_lower_t": njit(cache=True)(_nb_solve_lower_t),
    }


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def choose_backend(env_value, have_numba):
    """Resolve the backend name from an env-var string."""
    value = (env_value or "auto").strip().lower()
    if value == "auto":
        return "numba" if have_numba else "numpy"
    if value == "numpy":
        return "numpy"
    if value == "numba":
        if not have_numba:
            raise ConfigError("TRACELAB_KERNELS=numba but numba is not importable")
        return "numba"
    raise ConfigError(f"TRACELAB_KERNELS must be auto, numba or numpy, got {env_value!r}")


if _numba_available():
    _REGISTRY["numba"] = _build_numba_impl()

_ACTIVE = choose_backend(os.environ.get("TRACELAB_KERNELS"), "numba" in _REGISTRY)


def available_backends():
    return sorted(_REGISTRY)


def active_backend():
    return _ACTIVE


def use_backend(name):
    """Switch the active backend; returns the previous one."""
    global _ACTIVE
    if name not in _REGISTRY:
        raise ConfigError(f"unknown kernel backend {name!r}")
    previous = _ACTIVE
    _ACTIVE = name
    return previous


def get_impl(name=None):
    """Kernel table for one backend (used by the benchmark)."""
    return _REGISTRY[name or _ACTIVE]


# ---------------------------------------------------------------------------
# dispatching wrappers
# ---------------------------------------------------------------------------

def _c2d(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def jacobi_sweeps(a, v, stop_off, skip_tol, max_sweeps):
    """In-place threshold Jacobi on symmetric ``a`` with rotations into ``v``."""
    return _REGISTRY[_ACTIVE]["jacobi"](a, v, stop_off, skip_tol, max_sweeps)


def cholesky_factor(a, floor):
    """Lower Cholesky factor and failed pivot index (-1 on success)."""
    return _REGISTRY[_ACTIVE]["cholesky"](_c2d(a), floor)


def solve_lower(low, b):
    """Forward substitution L X = B; B may be a vector or a matrix."""
    rhs = _c2d(b if b.ndim == 2 else b[:, None])
    x = _REGISTRY[_ACTIVE]["solve_lower"](_c2d(low), rhs)
    return x if b.ndim == 2 else x[:, 0]


def solve_lower_t(low, b):
    """Back substitution L^T X = B; B may be a vector or a matrix."""
    rhs = _c2d(b if b.ndim == 2 else b[:, None])
    x = _REGISTRY[_ACTIVE]["solve_lower_t"](_c2d(low), rhs)
    return x if b.ndim == 2 else x[:, 0]
