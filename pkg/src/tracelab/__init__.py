"""tracelab: weighted pseudoinverse identities and trace-norm inequalities.

The package has two layers. The operator layer (``linalg``, ``operators``,
``identities``) does exact finite-dimensional algebra in weighted inner
products: Jacobi eigensolves, weighted SVD, Moore-Penrose pseudoinverses
and the residual checks for the identities built from them. The mesh layer
(``fem``, ``inequalities``) discretizes the boundary trace operator on
polygons with P1 elements and measures the best constants in the trace and
harmonic norm inequalities. ``cli`` drives both in batch; ``bench`` times
the numba kernels against the pure-numpy fallback.
"""

from .errors import (
    ConfigError,
    DegenerateTriangle,
    InvalidSpec,
    NoConvergence,
    NoInteriorVertices,
    NotAPseudoinversePair,
    NotPositiveDefinite,
    NotSymmetric,
    RankTooLarge,
    SOutOfRange,
    TraceLabError,
)
from .linalg import cholesky, chol_solve, frobenius, gen_sym_eig, spd_power, sym_eig
from .operators import (
    WeightedOperator,
    WeightedSpace,
    adjoint,
    gram_orthonormalize,
    identity_on,
    op_norm,
    penrose_residuals,
    pseudoinverse,
    resolvent_power,
    t_b,
    weighted_svd,
)
from .identities import (
    ResidualReport,
    check_decomposition,
    check_permutation,
    check_resolvent_identities,
    check_tb_adjoint,
    check_tb_isomorphism,
    check_tb_pinv,
    random_operator,
)
from .fem import (
    FemMatrices,
    Mesh,
    assemble,
    boundary_fractional_gram,
    build_mesh,
    harmonic_basis,
    poisson_operators,
    spaces_and_trace,
    steklov,
    trace_pair,
)
from .inequalities import ConstantsRow, InequalityLab

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DegenerateTriangle", "InvalidSpec", "NoConvergence",
    "NoInteriorVertices", "NotAPseudoinversePair", "NotPositiveDefinite",
    "NotSymmetric", "RankTooLarge", "SOutOfRange", "TraceLabError",
    "cholesky", "chol_solve", "frobenius", "gen_sym_eig", "spd_power", "sym_eig",
    "WeightedOperator", "WeightedSpace", "adjoint", "gram_orthonormalize",
    "identity_on", "op_norm", "penrose_residuals", "pseudoinverse",
    "resolvent_power", "t_b", "weighted_svd",
    "ResidualReport", "check_decomposition", "check_permutation",
    "check_resolvent_identities", "check_tb_adjoint", "check_tb_isomorphism",
    "check_tb_pinv", "random_operator",
    "FemMatrices", "Mesh", "assemble", "boundary_fractional_gram", "build_mesh",
    "harmonic_basis", "poisson_operators", "spaces_and_trace", "steklov",
    "trace_pair",
    "ConstantsRow", "InequalityLab",
    "__version__",
]
