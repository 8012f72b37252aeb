"""Operator algebra relative to SPD Gram inner products.

A linear map between two weighted spaces carries its matrix together with
both Grams, which is enough to form adjoints, weighted singular value
decompositions, Moore-Penrose pseudoinverses and fractional powers of
I + B*B without ever leaving finite dimensions.
"""

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import NotAPseudoinversePair

DEFAULT_RANK_RTOL = 1e-12
PAIR_CHECK_TOL = 1e-8


@dataclass(eq=False)
class WeightedSpace:
    """Real coordinate space with inner product (x, y) = xᵀ G y."""

    dim: int
    gram: np.ndarray
    label: str = ""
    _chol: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.gram = np.asarray(self.gram, dtype=np.float64)
        if self.gram.shape != (self.dim, self.dim):
            raise ValueError(f"gram shape {self.gram.shape} does not match dim {self.dim}")

    @property
    def chol(self):
        if self._chol is None:
            self._chol = linalg.cholesky(self.gram)
        return self._chol

    def inner(self, x, y):
        return float(x @ self.gram @ y)

    def norm(self, x):
        return float(np.sqrt(max(self.inner(x, x), 0.0)))


def same_space(a, b):
    return a is b or (a.dim == b.dim and np.array_equal(a.gram, b.gram))


@dataclass(eq=False)
class WeightedOperator:
    """Linear map x -> matrix @ x between two weighted spaces."""

    domain: WeightedSpace
    codomain: WeightedSpace
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float64)
        expected = (self.codomain.dim, self.domain.dim)
        if self.matrix.shape != expected:
            raise ValueError(f"matrix shape {self.matrix.shape}, expected {expected}")
        if not np.isfinite(self.matrix).all():
            raise ValueError("matrix has non-finite entries")

    def apply(self, x):
        return self.matrix @ x

    def __matmul__(self, other):
        if not same_space(self.domain, other.codomain):
            raise ValueError("composition spaces do not match")
        return WeightedOperator(other.domain, self.codomain, self.matrix @ other.matrix)

    def __add__(self, other):
        self._require_parallel(other)
        return WeightedOperator(self.domain, self.codomain, self.matrix + other.matrix)

    def __sub__(self, other):
        self._require_parallel(other)
        return WeightedOperator(self.domain, self.codomain, self.matrix - other.matrix)

    def _require_parallel(self, other):
        if not (same_space(self.domain, other.domain) and same_space(self.codomain, other.codomain)):
            raise ValueError("operators act between different spaces")


@dataclass
class SvdFactors:
    """Weighted SVD of an operator.

    ``values`` holds the ``rank`` singular values above the cut, descending.
    ``right`` is a full Gram-orthonormal basis of the domain whose first
    ``rank`` columns span the cokernel and whose remainder spans the null
    space; ``left`` keeps only the ``rank`` range-side columns.
    """

    left: np.ndarray
    values: np.ndarray
    right: np.ndarray
    rank: int


def identity_on(space):
    return WeightedOperator(space, space, np.eye(space.dim))


def adjoint(a):
    """Adjoint w.r.t. both Grams: matrix(A*) = G_dom^{-1} matrix(A)ᵀ G_cod."""
    mat = linalg.chol_solve(a.domain.chol, a.matrix.T @ a.codomain.gram)
    return WeightedOperator(a.codomain, a.domain, mat)


def weighted_svd(a, tol=None):
    """Weighted singular value decomposition of an operator.

    Right vectors come from the Gram-symmetrized pencil of A*A; each value
    is then re-evaluated directly as ‖A r_k‖ in the codomain norm, which
    puts structural zero modes at machine level instead of the sqrt of the
    pencil's rounding noise.  ``tol`` is relative to the largest singular
    value; values at or below tol * values_1 count as zero.  Default is
    1e-12 * max(dim).
    """
    if tol is None:
        tol = DEFAULT_RANK_RTOL * max(a.domain.dim, a.codomain.dim)
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    g_dom = a.domain.gram
    g_cod = a.codomain.gram
    s = a.matrix.T @ g_cod @ a.matrix
    ged = linalg.gen_sym_eig(0.5 * (s + s.T), g_dom)
    # one Newton-Schulz step repairs the O(eps * cond(G)) orthonormality
    # loss of the congruence transform without reordering directions
    basis = ged.vectors
    w = basis.T @ (g_dom @ basis)
    basis = basis @ ((3.0 * np.eye(w.shape[0]) - 0.5 * (w + w.T)) / 2.0)
    image = a.matrix @ basis
    sigma = np.sqrt(np.clip(np.einsum("ij,ik,kj->j", image, g_cod, image), 0.0, None))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    right = basis[:, order]
    image = image[:, order]
    top = sigma[0] if sigma.size else 0.0
    rank = int(np.count_nonzero(sigma > tol * top))
    if 0 < rank < a.domain.dim:
        # the null block is accurate to machine level (tiny direct
        # residuals), so projecting it out of the range block removes the
        # cross-block mixing the eigensolver leaves near small gaps
        nul = right[:, rank:]
        right[:, :rank] -= nul @ (nul.T @ (g_dom @ right[:, :rank]))
        image = np.concatenate([a.matrix @ right[:, :rank], image[:, rank:]], axis=1)
        sigma[:rank] = np.sqrt(np.clip(
            np.einsum("ij,ik,kj->j", image[:, :rank], g_cod, image[:, :rank]), 0.0, None))
    values = sigma[:rank].copy()
    if rank:
        left = image[:, :rank] / values
        w = left.T @ (g_cod @ left)
        left = left @ ((3.0 * np.eye(rank) - 0.5 * (w + w.T)) / 2.0)
    else:
        left = np.zeros((a.codomain.dim, 0))
    return SvdFactors(left=left, values=values, right=right, rank=rank)


def _pinv_from_svd(a, tol):
    """Single-sided pseudoinverse candidate; reliable on the AB side only."""
    f = weighted_svd(a, tol)
    if f.rank == 0:
        return np.zeros((a.domain.dim, a.codomain.dim))
    mat = (f.right[:, :f.rank] / f.values) @ (f.left.T @ a.codomain.gram)
    # one Newton-Schulz step; the svd route squares the spectrum, so its
    # backward error carries a 1/sigma_min^2 factor that this quadratic
    # correction removes from the consistency conditions
    return 2.0 * mat - mat @ (a.matrix @ mat)


def pseudoinverse(a, tol=None):
    """Moore-Penrose pseudoinverse relative to both Grams.

    Combines a candidate accurate on the AB side with one accurate on the
    BA side (built from the adjoint problem) through B = B14 A B13, the
    classical composition of a {1,4}- with a {1,3}-inverse, which keeps all
    four Penrose residuals at the level of the better side.
    """
    b13 = _pinv_from_svd(a, tol)
    c = _pinv_from_svd(adjoint(a), tol)
    b14 = linalg.chol_solve(a.domain.chol, c.T @ a.codomain.gram)
    mat = b14 @ (a.matrix @ b13)
    return WeightedOperator(a.codomain, a.domain, mat)


def penrose_residuals(a, b):
    """Frobenius residuals of the four Penrose conditions, scaled by 1 + ‖A‖.

    Keys: 'aba' for ABA=A, 'bab' for BAB=B, 'ab_sym' and 'ba_sym' for the
    Gram-selfadjointness of AB and BA, measured solve-free as the
    asymmetry of the bilinear forms G_cod·(AB) and G_dom·(BA).
    """
    scale = 1.0 + linalg.frobenius(a.matrix)
    ab = (a @ b).matrix
    ba = (b @ a).matrix
    form_ab = a.codomain.gram @ ab
    form_ba = a.domain.gram @ ba
    return {
        "aba": linalg.frobenius(a.matrix @ ba - a.matrix) / scale,
        "bab": linalg.frobenius(b.matrix @ ab - b.matrix) / scale,
        "ab_sym": linalg.frobenius(form_ab - form_ab.T) / scale,
        "ba_sym": linalg.frobenius(form_ba - form_ba.T) / scale,
    }


def resolvent_power(b, p):
    """(I + B*B)^p on the domain of B, computed spectrally.

    The Gram-symmetrized form G + matrix(B)ᵀ G_cod matrix(B) is SPD with
    eigenvalues ≥ 1, so every real power is safe.
    """
    g = b.domain.gram
    s = b.matrix.T @ b.codomain.gram @ b.matrix
    ged = linalg.gen_sym_eig(g + 0.5 * (s + s.T), g)
    mat = (ged.vectors * ged.values**p) @ (ged.vectors.T @ g)
    return WeightedOperator(b.domain, b.domain, mat)


def frac_graph_power(a, b, s, side):
    """(I + B*B)^{-s} on B's domain or (I + BB*)^{-s} on B's codomain."""
    if not (same_space(b.domain, a.codomain) and same_space(b.codomain, a.domain)):
        raise ValueError("B must act between the reverse spaces of A")
    if side == "domain":
        return resolvent_power(b, -s)
    if side == "codomain":
        return resolvent_power(adjoint(b), -s)
    raise ValueError(f"side must be 'domain' or 'codomain', got {side!r}")


def require_pseudoinverse_pair(a, b):
    """Raise NotAPseudoinversePair unless B is the pseudoinverse of A."""
    worst = max(penrose_residuals(a, b).values())
    if worst > PAIR_CHECK_TOL:
        raise NotAPseudoinversePair(f"worst Penrose residual {worst:.3e} above {PAIR_CHECK_TOL}")
    return worst


def t_b(a, b):
    """The pair (T_B, T_B*) built from a Moore-Penrose pair (A, B).

    T_B = (B + A*) (I + B*B)^{-1/2} maps A's codomain to its domain, and
    T_B* = (B* + A) (I + BB*)^{-1/2} is its adjoint.
    """
    require_pseudoinverse_pair(a, b)
    tb = (b + adjoint(a)) @ resolvent_power(b, -0.5)
    tbstar = (adjoint(b) + a) @ resolvent_power(adjoint(b), -0.5)
    return tb, tbstar


def op_norm(a):
    """Largest weighted singular value."""
    f = weighted_svd(a)
    return float(f.values[0]) if f.rank else 0.0


def gram_orthonormalize(x, gram, passes=2):
    """Orthonormalize columns of x in the G inner product (repeated CGS).

    Two passes give essentially machine-precision orthogonality for
    numerically full-rank input; rank loss raises ValueError.
    """
    x = np.array(x, dtype=np.float64)
    n, m = x.shape
    q = np.zeros((n, m))
    for j in range(m):
        v = x[:, j].copy()
        ref = np.sqrt(max(float(v @ gram @ v), 0.0))
        for _ in range(passes):
            if j:
                v -= q[:, :j] @ (q[:, :j].T @ (gram @ v))
        nrm = np.sqrt(max(float(v @ gram @ v), 0.0))
        if nrm <= 1e-12 * max(ref, 1e-300):
            raise ValueError(f"column {j} is numerically dependent")
        q[:, j] = v / nrm
    return q
