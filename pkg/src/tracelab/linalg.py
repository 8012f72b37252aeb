"""Symmetric dense linear algebra built on the kernel backends.

Eigenproblems are solved with row-cyclic threshold Jacobi sweeps
(off-diagonal target 1e-13 times the Frobenius norm, at most 60 sweeps);
generalized problems are reduced by Cholesky congruence.  Everything here
is deterministic for fixed input bits under a fixed backend.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoConvergence, NotPositiveDefinite, NotSymmetric

SYMMETRY_RTOL = 1e-12
PIVOT_FACTOR = 1e-14
JACOBI_OFF_FACTOR = 1e-13
MAX_SWEEPS = 60


@dataclass
class EigenDecomposition:
    """Eigenpairs of a (possibly generalized) symmetric problem.

    ``values`` ascend; ``vectors[:, k]`` belongs to ``values[k]`` and the
    columns are orthonormal in ``metric`` (the identity for the ordinary
    problem).  Each column is scaled so its entry of largest magnitude is
    positive, first index winning ties.
    """

    values: np.ndarray
    vectors: np.ndarray
    metric: np.ndarray


def frobenius(a):
    return float(np.linalg.norm(a))


def require_symmetric(s, name="matrix"):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise NotSymmetric(f"{name} must be square, got shape {s.shape}")
    if not np.isfinite(s).all():
        raise NotSymmetric(f"{name} has non-finite entries")
    gap = frobenius(s - s.T)
    if gap > SYMMETRY_RTOL * max(frobenius(s), 1e-300):
        raise NotSymmetric(f"{name} asymmetry {gap:.3e} exceeds relative tolerance")
    return s


def _fix_signs(vectors):
    if vectors.shape[1] == 0:
        return vectors
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(vectors.shape[1])])
    signs[signs == 0.0] = 1.0
    return vectors * signs


def cholesky(s):
    """Lower Cholesky factor; pivots must clear 1e-14 times the max diagonal."""
    s = require_symmetric(s)
    n = s.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    floor = PIVOT_FACTOR * max(float(s.diagonal().max()), 0.0)
    low, bad = kernels.cholesky_factor(s, floor)
    if bad >= 0:
        raise NotPositiveDefinite(bad)
    return low


def chol_solve(low, b):
    """Solve (L L^T) x = b given the lower factor."""
    return kernels.solve_lower_t(low, kernels.solve_lower(low, b))


def _jacobi_eigh(sym, max_sweeps):
    """Eigenpairs of an exactly symmetric matrix; no ordering applied."""
    n = sym.shape[0]
    a = np.ascontiguousarray(sym, dtype=np.float64).copy()
    v = np.eye(n)
    if n < 2:
        return a.diagonal().copy(), v
    fro = frobenius(a)
    stop = JACOBI_OFF_FACTOR * fro
    skip = stop / n
    _, off = kernels.jacobi_sweeps(a, v, stop, skip, max_sweeps)
    if off > stop:
        raise NoConvergence(f"off-norm {off:.3e} above {stop:.3e} after {max_sweeps} sweeps")
    return a.diagonal().copy(), v


def sym_eig(s, max_sweeps=MAX_SWEEPS):
    """Full eigendecomposition of a symmetric matrix, values ascending."""
    s = require_symmetric(s)
    sym = 0.5 * (s + s.T)
    values, vectors = _jacobi_eigh(sym, max_sweeps)
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(
        values=values[order],
        vectors=_fix_signs(vectors[:, order]),
        metric=np.eye(s.shape[0]),
    )


def gen_sym_eig(s, g, max_sweeps=MAX_SWEEPS):
    """Solve S v = w G v for symmetric S and SPD G.

    Reduces to an ordinary problem through the Cholesky congruence
    L^{-1} S L^{-T} and maps eigenvectors back, so the returned columns are
    G-orthonormal.
    """
    s = require_symmetric(s, "S")
    low = cholesky(require_symmetric(g, "G"))
    y = kernels.solve_lower(low, 0.5 * (s + s.T))
    c = kernels.solve_lower(low, np.ascontiguousarray(y.T))
    c = 0.5 * (c + c.T)
    values, raw = _jacobi_eigh(c, max_sweeps)
    vectors = kernels.solve_lower_t(low, raw)
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(
        values=values[order],
        vectors=_fix_signs(vectors[:, order]),
        metric=np.asarray(g, dtype=np.float64).copy(),
    )


def spd_power(s, p):
    """Fractional power S^p of an SPD matrix via its eigendecomposition."""
    ed = sym_eig(s)
    lam = ed.values
    if lam.size and lam[0] <= PIVOT_FACTOR * max(lam[-1], 0.0):
        raise NotPositiveDefinite(int(np.argmin(lam)), f"eigenvalue {lam[0]:.3e} not positive")
    powered = (ed.vectors * lam**p) @ ed.vectors.T
    return 0.5 * (powered + powered.T)
