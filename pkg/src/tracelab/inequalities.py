"""Best-constant sweeps for the trace and harmonic norm inequalities.

Every check compares two quadratic forms on a subspace: the extreme
generalized eigenvalues give the sharp constants, and seeded probe vectors
certify the inequality pointwise. ``worst_violation <= 0`` means no probe
broke the inequality; small positive values bound the roundoff slack.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fem, linalg
from .errors import SOutOfRange
from .operators import adjoint, op_norm, resolvent_power, t_b

CONSTANTS_COLUMNS = ("theorem", "mesh", "refine", "dofs", "s",
                     "c_low", "c_high", "worst_violation", "mode")


@dataclass(frozen=True)
class ConstantsRow:
    theorem: str
    mesh: str
    refine: int
    dofs: int
    s: float
    c_low: float
    c_high: float
    worst_violation: float
    mode: str


def _extreme_constants(num, den):
    """sqrt of the extreme eigenvalues of num x = theta den x."""
    eig = linalg.gen_sym_eig(0.5 * (num + num.T), 0.5 * (den + den.T))
    return float(np.sqrt(max(eig.values[0], 0.0))), float(np.sqrt(max(eig.values[-1], 0.0)))


def _sandwich_violation(num, den, c_low, c_high, probes):
    """Signed slack of c_low ||x||_den <= ||x||_num <= c_high ||x||_den."""
    worst = -np.inf
    for x in probes:
        low = c_low * np.sqrt(max(x @ den @ x, 0.0))
        mid = np.sqrt(max(x @ num @ x, 0.0))
        high = c_high * np.sqrt(max(x @ den @ x, 0.0))
        scale = max(high, 1e-300)
        worst = max(worst, (low - mid) / scale, (mid - high) / scale)
    return float(worst)


class InequalityLab:
    """Shared FEM state for one (domain, refine) cell; members are lazy."""

    def __init__(self, domain="square", refine=1, seed=2026, probes=100):
        self.domain = domain
        self.refine = refine
        self.seed = seed
        self.probes = probes

    @cached_property
    def mesh(self):
        return fem.build_mesh(self.domain, self.refine)

    @cached_property
    def matrices(self):
        return fem.assemble(self.mesh)

    @cached_property
    def spaces(self):
        return fem.spaces_and_trace(self.matrices)

    @cached_property
    def trace_pair(self):
        return fem.trace_pair(self.matrices)

    @cached_property
    def harmonic(self):
        return fem.harmonic_basis(self.matrices)

    @cached_property
    def steklov(self):
        return fem.steklov(self.matrices)

    @cached_property
    def poisson(self):
        return fem.poisson_operators(self.matrices)

    @cached_property
    def trace_tb(self):
        gamma, lam = self.trace_pair
        return t_b(gamma, lam)

    @cached_property
    def trace_tb_norm(self):
        return op_norm(self.trace_tb[1])

    @cached_property
    def bergman_tb(self):
        return t_b(self.poisson.e1, self.poisson.f1)

    @property
    def dofs(self):
        return self.matrices.K.shape[0]

    def _probe_vectors(self, dim):
        rng = np.random.default_rng(self.seed)
        return np.vstack([np.eye(dim), rng.standard_normal((self.probes, dim))])

    def _row(self, theorem, s, c_low, c_high, violation, mode):
        return ConstantsRow(theorem, self.domain, self.refine, self.dofs,
                            float(s), c_low, c_high, violation, mode)

    # -- trace-norm equivalence ---------------------------------------------

    def trace_equivalence_constants(self, s, mode="surrogate"):
        """Graph norm ||(I+L*L)^s g|| against a realization of the s-norm.

        Surrogate mode compares against the independent boundary Gram G_s
        (informative constants); graph mode rebuilds the same graph norm
        through the Steklov spectral data, so its constants collapse to 1
        and certify the two computational routes against each other.
        """
        if not 0.0 <= s <= 1.0:
            raise SOutOfRange(f"trace equivalence needs s in [0, 1], got {s}")
        if mode not in ("graph", "surrogate"):
            raise ValueError(f"mode must be graph or surrogate, got {mode!r}")
        gamma, lam = self.trace_pair
        power = resolvent_power(lam, s).matrix
        mb = self.matrices.Mb
        graph = power.T @ mb @ power
        if mode == "surrogate":
            target = fem.boundary_fractional_gram(self.matrices, s)
        else:
            # (I+L*L) z_k = (2 + lambda_k) z_k on the Steklov boundary basis
            z = self.steklov.Z
            spectral = (z * (2.0 + self.steklov.lambdas) ** s) @ (z.T @ mb)
            target = spectral.T @ mb @ spectral
        c_low, c_high = _extreme_constants(graph, target)
        violation = _sandwich_violation(graph, target, c_low, c_high,
                                        self._probe_vectors(mb.shape[0]))
        return self._row("trace_equivalence", s, c_low, c_high, violation, mode)

    # -- harmonic inequality for 1 < s < 3/2 --------------------------------

    def harmonic_inequality_check(self, s, mode="graph"):
        """||trace part||_{s-1/2} <= ||T|| * ||(I+LL*)^{s-1} v|| on harmonics.

        Graph mode evaluates the boundary norm through (I+L*L)^{s-1/2} and
        is exact by the spectral calculus; surrogate mode uses G_{s-1/2}
        and folds in the equivalence constant from the trace sweep.
        """
        if not 1.0 < s < 1.5:
            raise SOutOfRange(f"harmonic inequality needs s in (1, 1.5), got {s}")
        if mode not in ("graph", "surrogate"):
            raise ValueError(f"mode must be graph or surrogate, got {mode!r}")
        gamma, lam = self.trace_pair
        sigma = s - 0.5
        traced = gamma.matrix @ self.harmonic
        if mode == "graph":
            power = resolvent_power(lam, sigma).matrix
            lifted = power @ traced
            num = lifted.T @ self.matrices.Mb @ lifted
            bound = self.trace_tb_norm
        else:
            num = traced.T @ fem.boundary_fractional_gram(self.matrices, sigma) @ traced
            bound = self.trace_tb_norm / self.trace_equivalence_constants(sigma).c_low
        resolved = resolvent_power(adjoint(lam), s - 1.0).matrix @ self.harmonic
        den = resolved.T @ gamma.domain.gram @ resolved
        c_low, c_high = _extreme_constants(num, den)
        violation = _sandwich_violation(num, den, 0.0, bound,
                                        self._probe_vectors(self.harmonic.shape[1]))
        return self._row("harmonic_inequality", s, c_low, c_high, violation, mode)

    # -- the s = 1 sandwich in the domain L2 space --------------------------

    def bergman_sandwich(self):
        """c_low ||v|| <= ||(I+F1*F1)^{1/2} E1 v||_{L2} <= c_high ||v||."""
        po = self.poisson
        _, tbstar = self.bergman_tb
        basis = self.harmonic
        mass = po.e1.codomain.gram
        image = tbstar.matrix @ basis
        restricted = image.T @ mass @ image
        gram = basis.T @ po.e1.domain.gram @ basis
        eig = linalg.gen_sym_eig(0.5 * (restricted + restricted.T), 0.5 * (gram + gram.T))
        c_low = float(np.sqrt(max(eig.values[0], 0.0)))
        c_high = float(np.sqrt(max(eig.values[-1], 0.0)))
        lift = resolvent_power(po.f1, 0.5).matrix @ (po.e1.matrix @ basis)
        middle = lift.T @ mass @ lift
        # extremal pencil vectors ride along so the bounds are probed where tight
        probes = np.vstack([self._probe_vectors(basis.shape[1]), eig.vectors.T[[0, -1]]])
        violation = _sandwich_violation(middle, gram, c_low, c_high, probes)
        return self._row("bergman_sandwich", 1.0, c_low, c_high, violation, "graph")

    def bergman_middle_identity_gap(self):
        """Relative gap between ||(I+F1*F1)^{1/2}E1 v|| and ||T v|| forms."""
        po = self.poisson
        _, tbstar = self.bergman_tb
        basis = self.harmonic
        mass = po.e1.codomain.gram
        image = tbstar.matrix @ basis
        lift = resolvent_power(po.f1, 0.5).matrix @ (po.e1.matrix @ basis)
        a = image.T @ mass @ image
        b = lift.T @ mass @ lift
        return linalg.frobenius(a - b) / max(linalg.frobenius(a), 1e-300)

    # -- interpolation family scan ------------------------------------------

    def interpolation_scan(self, s_grid, mode="graph"):
        """Graph norm of (I+F1*F1)^{s/2} against a harmonic spectral scale.

        Graph mode compares against the Hilbert-scale pencil between the L2
        and boundary-adapted Grams on the harmonic subspace; both routes are
        single-pencil spectral families, so the s=0 endpoint reproduces the
        L2 Gram and the s=1 endpoint the boundary-adapted Gram exactly (up
        to eigensolver roundoff). Surrogate mode weighs Steklov coordinates
        by (1+lambda_k)^(s-1), an independent boundary-anchored family that
        shares only the s=1 endpoint.
        """
        for s in s_grid:
            if not 0.0 <= s <= 1.0:
                raise SOutOfRange(f"interpolation scan needs s in [0, 1], got {s}")
        if mode not in ("graph", "surrogate"):
            raise ValueError(f"mode must be graph or surrogate, got {mode!r}")
        po = self.poisson
        basis = self.harmonic
        mass = po.e1.codomain.gram
        harmonic_l2 = po.e1.matrix @ basis
        graph_f1 = po.f1.matrix.T @ po.f1.codomain.gram @ po.f1.matrix
        lift_eig = linalg.gen_sym_eig(mass + 0.5 * (graph_f1 + graph_f1.T), mass)
        lift_coords = lift_eig.vectors.T @ (mass @ harmonic_l2)
        lift_values = np.clip(lift_eig.values, 1.0, None)

        if mode == "graph":
            mass_h = harmonic_l2.T @ mass @ harmonic_l2
            gram_h = basis.T @ po.e1.domain.gram @ basis
            scale_eig = linalg.gen_sym_eig(0.5 * (gram_h + gram_h.T), 0.5 * (mass_h + mass_h.T))
            scale_coords = scale_eig.vectors.T @ (0.5 * (mass_h + mass_h.T))
            scale_values = np.clip(scale_eig.values, 0.0, None)
            scale_shift = 0.0
        else:
            stek = self.steklov
            gram = po.e1.domain.gram
            scale_coords = stek.V.T @ (gram @ basis)
            scale_values = 1.0 + stek.lambdas
            scale_shift = -1.0

        probes = self._probe_vectors(basis.shape[1])
        rows = []
        for s in s_grid:
            num = lift_coords.T @ (lift_coords * lift_values[:, None] ** s)
            den = scale_coords.T @ (scale_coords * scale_values[:, None] ** (s + scale_shift))
            c_low, c_high = _extreme_constants(num, den)
            violation = _sandwich_violation(num, den, c_low, c_high, probes)
            rows.append(self._row("interpolation_scan", s, c_low, c_high, violation, mode))
        return rows


def row_record(row):
    """Row as strings in CSV column order, 17 significant digits."""
    return (row.theorem, row.mesh, str(row.refine), str(row.dofs), f"{row.s:.17g}",
            f"{row.c_low:.17g}", f"{row.c_high:.17g}", f"{row.worst_violation:.17g}", row.mode)
