"""Weighted operator algebra: adjoint, svd, pseudoinverse, T_B, norms."""

import numpy as np
import pytest

from tracelab import linalg
from tracelab.errors import NotAPseudoinversePair
from tracelab.identities import random_operator
from tracelab.operators import (
    WeightedOperator,
    WeightedSpace,
    adjoint,
    frac_graph_power,
    gram_orthonormalize,
    identity_on,
    op_norm,
    penrose_residuals,
    pseudoinverse,
    same_space,
    t_b,
    weighted_svd,
)


def euclid(n):
    return WeightedSpace(n, np.eye(n), f"R^{n}")


def random_spd(rng, n, lo=0.5, hi=3.0):
    q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return (q * rng.uniform(lo, hi, n)) @ q.T


def seeded_op(seed, dim_dom, dim_cod):
    rng = np.random.default_rng(seed)
    dom = WeightedSpace(dim_dom, random_spd(rng, dim_dom), "dom")
    cod = WeightedSpace(dim_cod, random_spd(rng, dim_cod), "cod")
    return WeightedOperator(dom, cod, rng.standard_normal((dim_cod, dim_dom)))


class TestSpacesAndComposition:
    def test_same_space_by_value(self):
        g = np.diag([1.0, 2.0])
        assert same_space(WeightedSpace(2, g, "a"), WeightedSpace(2, g.copy(), "b"))

    def test_gram_shape_checked(self):
        with pytest.raises(ValueError):
            WeightedSpace(3, np.eye(2), "bad")

    def test_matrix_shape_checked(self):
        with pytest.raises(ValueError):
            WeightedOperator(euclid(2), euclid(3), np.eye(2))

    def test_composition_space_mismatch(self):
        a = WeightedOperator(euclid(2), euclid(3), np.ones((3, 2)))
        b = WeightedOperator(euclid(4), euclid(2), np.ones((2, 4)))
        assert (a @ b).matrix.shape == (3, 4)
        with pytest.raises(ValueError):
            b @ a

    def test_sum_space_mismatch(self):
        a = WeightedOperator(euclid(2), euclid(3), np.ones((3, 2)))
        c = WeightedOperator(WeightedSpace(2, np.diag([1.0, 2.0]), "w"), euclid(3), np.ones((3, 2)))
        with pytest.raises(ValueError):
            a + c


class TestAdjoint:
    def test_euclidean_is_transpose(self):
        m = np.arange(6.0).reshape(3, 2)
        a = WeightedOperator(euclid(2), euclid(3), m)
        np.testing.assert_array_equal(adjoint(a).matrix, m.T)

    def test_identity_matrix_between_grams(self):
        rng = np.random.default_rng(8)
        g1 = random_spd(rng, 4)
        g2 = random_spd(rng, 4)
        a = WeightedOperator(WeightedSpace(4, g1, ""), WeightedSpace(4, g2, ""), np.eye(4))
        np.testing.assert_allclose(adjoint(a).matrix, np.linalg.solve(g1, g2), atol=1e-12)

    def test_bilinear_form_identity_seed3(self):
        rng = np.random.default_rng(3)
        dom = WeightedSpace(4, random_spd(rng, 4), "dom")
        cod = WeightedSpace(6, random_spd(rng, 6), "cod")
        a = WeightedOperator(dom, cod, rng.standard_normal((6, 4)))
        ast = adjoint(a)
        worst = max(
            abs(cod.inner(a.apply(x), y) - dom.inner(x, ast.apply(y)))
            for x, y in zip(rng.standard_normal((20, 4)), rng.standard_normal((20, 6)))
        )
        assert worst < 1e-11

    def test_involution(self):
        a = seeded_op(15, 5, 7)
        back = adjoint(adjoint(a)).matrix
        assert linalg.frobenius(back - a.matrix) < 1e-12 * linalg.frobenius(a.matrix)

    def test_deterministic_bits(self):
        a = seeded_op(16, 6, 4)
        assert adjoint(a).matrix.tobytes() == adjoint(a).matrix.tobytes()


class TestWeightedSvd:
    def test_zero_operator(self):
        f = weighted_svd(WeightedOperator(euclid(3), euclid(2), np.zeros((2, 3))))
        assert f.rank == 0
        assert f.values.shape == (0,)
        np.testing.assert_allclose(f.right.T @ f.right, np.eye(3), atol=1e-12)

    def test_diagonal_rank_one(self):
        f = weighted_svd(WeightedOperator(euclid(2), euclid(2), np.diag([3.0, 0.0])))
        assert f.rank == 1
        np.testing.assert_allclose(f.values, [3.0], atol=1e-14)

    def test_euclidean_eigen_oracle_seed11(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((5, 5))
        f = weighted_svd(WeightedOperator(euclid(5), euclid(5), m))
        oracle = np.sqrt(np.clip(linalg.sym_eig(m.T @ m).values[::-1], 0.0, None))
        np.testing.assert_allclose(f.values, oracle[: f.rank], atol=1e-10)

    def test_factor_invariants_weighted(self):
        a = seeded_op(27, 9, 6)
        f = weighted_svd(a)
        gl = f.left.T @ a.codomain.gram @ f.left
        gr = f.right.T @ a.domain.gram @ f.right
        assert linalg.frobenius(gl - np.eye(f.rank)) < 1e-11
        assert linalg.frobenius(gr - np.eye(9)) < 1e-11
        mapped = a.matrix @ f.right[:, : f.rank]
        assert linalg.frobenius(mapped - f.left * f.values) < 1e-10 * f.values[0]

    def test_explicit_relative_tolerance(self):
        a = WeightedOperator(euclid(2), euclid(2), np.diag([1.0, 1e-3]))
        assert weighted_svd(a).rank == 2
        assert weighted_svd(a, tol=1e-2).rank == 1


class TestPseudoinverse:
    def test_invertible_is_inverse(self):
        rng = np.random.default_rng(6)
        m = rng.standard_normal((4, 4)) + 4.0 * np.eye(4)
        b = pseudoinverse(WeightedOperator(euclid(4), euclid(4), m))
        np.testing.assert_allclose(b.matrix, np.linalg.inv(m), rtol=1e-10, atol=1e-12)

    def test_zero_operator(self):
        b = pseudoinverse(WeightedOperator(euclid(3), euclid(2), np.zeros((2, 3))))
        np.testing.assert_array_equal(b.matrix, np.zeros((3, 2)))

    def test_diagonal_rank_deficient(self):
        b = pseudoinverse(WeightedOperator(euclid(2), euclid(2), np.diag([2.0, 0.0])))
        np.testing.assert_allclose(b.matrix, np.diag([0.5, 0.0]), atol=1e-12)

    @pytest.mark.parametrize("trial", range(20))
    def test_penrose_battery(self, trial):
        rng = np.random.default_rng(500 + trial)
        dd = int(rng.integers(2, 41))
        dc = int(rng.integers(2, 61))
        rank = int(rng.integers(1, min(dd, dc) + 1))
        a, b = random_operator(500 + trial, dd, dc, rank)
        worst = max(penrose_residuals(a, b).values())
        # residuals come back already scaled by 1 + ||A||_F
        assert worst <= 1e-10

    def test_null_law(self):
        a, b = random_operator(77, 12, 9, 5)
        fa = weighted_svd(adjoint(a))
        nul = fa.right[:, fa.rank :]
        assert nul.shape[1] == 4
        norms = np.sqrt(np.einsum("ij,ik,kj->j", b.matrix @ nul, a.domain.gram, b.matrix @ nul))
        assert norms.max() <= 1e-10 * op_norm(b)

    def test_pinv_of_pinv(self):
        a, b = random_operator(91, 10, 7, 4)
        back = pseudoinverse(b).matrix
        assert linalg.frobenius(back - a.matrix) <= 1e-10 * linalg.frobenius(a.matrix)


class TestFracGraphPower:
    def setup_method(self):
        self.a, self.b = random_operator(55, 6, 5, 3)

    def test_zero_power_is_identity(self):
        for side, space in (("domain", self.b.domain), ("codomain", self.b.codomain)):
            p = frac_graph_power(self.a, self.b, 0.0, side)
            np.testing.assert_allclose(p.matrix, np.eye(space.dim), atol=1e-12)

    def test_zero_operator_any_power(self):
        a = WeightedOperator(euclid(3), euclid(2), np.zeros((2, 3)))
        b = pseudoinverse(a)
        for s in (-1.0, 0.5, 2.0):
            p = frac_graph_power(a, b, s, "domain")
            np.testing.assert_allclose(p.matrix, np.eye(2), atol=1e-13)

    def test_unit_singular_value_halves(self):
        a = identity_on(euclid(2))
        p = frac_graph_power(a, pseudoinverse(a), 1.0, "codomain")
        np.testing.assert_allclose(p.matrix, 0.5 * np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("side", ["domain", "codomain"])
    def test_group_law(self, side):
        p = frac_graph_power(self.a, self.b, 0.3, side)
        q = frac_graph_power(self.a, self.b, 0.9, side)
        both = frac_graph_power(self.a, self.b, 1.2, side)
        diff = linalg.frobenius((p @ q).matrix - both.matrix)
        assert diff <= 1e-10 * linalg.frobenius(both.matrix)

    def test_reverse_space_precondition(self):
        with pytest.raises(ValueError):
            frac_graph_power(self.a, self.a, 1.0, "domain")
        with pytest.raises(ValueError):
            frac_graph_power(self.a, self.b, 1.0, "sideways")


class TestTB:
    def test_scalar_identity_gives_sqrt2(self):
        a = identity_on(euclid(2))
        tb, tbstar = t_b(a, pseudoinverse(a))
        np.testing.assert_allclose(tb.matrix, np.sqrt(2.0) * np.eye(2), atol=1e-12)
        np.testing.assert_allclose(tbstar.matrix, np.sqrt(2.0) * np.eye(2), atol=1e-12)

    def test_zero_operator(self):
        a = WeightedOperator(euclid(3), euclid(2), np.zeros((2, 3)))
        tb, tbstar = t_b(a, pseudoinverse(a))
        np.testing.assert_allclose(tb.matrix, 0.0, atol=1e-15)
        np.testing.assert_allclose(tbstar.matrix, 0.0, atol=1e-15)

    def test_adjoint_pairing(self):
        a, b = random_operator(41, 8, 11, 6)
        tb, tbstar = t_b(a, b)
        diff = linalg.frobenius(adjoint(tb).matrix - tbstar.matrix)
        assert diff <= 1e-10 * linalg.frobenius(tbstar.matrix)

    def test_rejects_non_pair(self):
        a, b = random_operator(42, 5, 5, 3)
        fake = WeightedOperator(b.domain, b.codomain, 2.0 * b.matrix)
        with pytest.raises(NotAPseudoinversePair):
            t_b(a, fake)


class TestOpNorm:
    def test_identity(self):
        assert op_norm(identity_on(euclid(4))) == pytest.approx(1.0, abs=1e-12)

    def test_zero(self):
        assert op_norm(WeightedOperator(euclid(2), euclid(3), np.zeros((3, 2)))) == 0.0

    def test_rayleigh_sampling_oracle_seed5(self):
        rng = np.random.default_rng(5)
        dom = WeightedSpace(2, random_spd(rng, 2), "d")
        cod = WeightedSpace(3, random_spd(rng, 3), "c")
        a = WeightedOperator(dom, cod, rng.standard_normal((3, 2)))
        nrm = op_norm(a)
        sampled = max(
            cod.norm(a.apply(x)) / dom.norm(x) for x in rng.standard_normal((1000, 2))
        )
        assert sampled <= nrm + 1e-12
        assert nrm - sampled < 1e-3


class TestGramOrthonormalize:
    def test_produces_gram_orthonormal_columns(self):
        rng = np.random.default_rng(61)
        g = random_spd(rng, 7)
        q = gram_orthonormalize(rng.standard_normal((7, 4)), g)
        np.testing.assert_allclose(q.T @ g @ q, np.eye(4), atol=1e-13)

    def test_rank_deficiency_rejected(self):
        x = np.ones((5, 2))
        with pytest.raises(ValueError):
            gram_orthonormalize(x, np.eye(5))
