import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import stochastic_matrices
from qsmarkov import exact, families
from qsmarkov.cuntzrep import (
    OpKind,
    build_level,
    check_cuntz_relations,
    compressed_family,
    compressed_S,
    cuntz_residuals,
    monic_cyclicity_check,
    multiplication_operator,
    norm_identity_residual,
    projection_of_cylinder,
    pvm_algebra_check,
    scalar_measure,
    scalar_measure_check,
)
from qsmarkov.density import DensityEngine
from qsmarkov.errors import EnumerationCapExceeded, NotQuasiStationary, ValidationError
from qsmarkov.matseq import Constant
from qsmarkov.measure import MarkovMeasure, cylinder_mass
from qsmarkov.symbolic import Word

M = families.measure


def w(text, N=2):
    return Word.parse(text, N)


class TestLevelSpace:
    def test_uniform_level_2(self):
        L = build_level(M("uniform"), 2)
        assert L.dim == 4 and np.allclose(L.masses, 0.25, atol=0)

    @pytest.mark.parametrize("name", ["geometric", "constant3", "power"])
    def test_gram_identity_and_masses(self, name):
        for n in (1, 3, 5):
            L = build_level(M(name), n)
            assert np.allclose(L.gram(), np.eye(L.dim), atol=1e-12)
            assert L.masses.sum() == pytest.approx(1.0, abs=1e-13)

    def test_words_lexicographic(self):
        assert build_level(M("uniform"), 2).words().tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]

    def test_constant_one_is_unit(self, geometric_measure):
        assert np.linalg.norm(build_level(geometric_measure, 6).constant_one()) == pytest.approx(1.0, abs=1e-14)

    def test_cap(self):
        with pytest.raises(EnumerationCapExceeded):
            build_level(M("uniform"), 40)


class TestCompression:
    def test_stationary_uniform_exact(self):
        S0 = compressed_S(M("uniform"), 0, 3)
        A = S0.dense()
        assert S0.error_bound == 0.0
        for I in range(8):
            col = A[:, I]
            assert col[0 * 8 + I] == 1.0 and np.count_nonzero(col) == 1

    @pytest.mark.parametrize("T", [families.T_INF, families.T3, families.SKEWED])
    def test_stationary_rational_oracle(self, T):
        # <e_{iI}, S_i e_I>^2 = lam[I1] / (lam[i] T[i, I1]) * mass(iI) / mass(I) = 1 exactly
        N = len(T)
        n = 4 if N == 2 else 3
        for i in range(N):
            for I in product(range(N), repeat=n):
                assert exact.stationary_entry_squared(T, i, I) == 1
        m = MarkovMeasure.build(Constant(T))
        for op in compressed_family(m, n):
            assert np.all(op.matrix.data == 1.0)

    @given(stochastic_matrices(2, 3), st.integers(1, 4))
    def test_stationary_columns_unit(self, T, n):
        m = MarkovMeasure.build(Constant(T))
        for op in compressed_family(m, n):
            norms = np.sqrt(np.asarray(op.matrix.multiply(op.matrix).sum(axis=0))).ravel()
            assert np.all(norms == 1.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_eventually_constant_brute_force(self, n):
        # density ratios vanish after step 2, so <e_{iI}, S_i e_I> is a finite sum:
        # int_{C(iI)} f_i dmu / sqrt(mu(iI) mu(I)) over cylinders of length max(n + 1, 4)
        m = M("eventually_constant")
        e = DensityEngine(m)
        assert e.depth == 2
        L = max(n + 1, 4)
        for i in range(2):
            A = compressed_S(m, i, n).dense()
            assert compressed_S(m, i, n).error_bound == 0.0
            for I in product(range(2), repeat=n):
                iI = (i,) + I
                total = 0.0
                for tail in product(range(2), repeat=L - len(iI)):
                    x = iI + tail
                    total += e.f_j_value(i, x) * cylinder_mass(m, Word(x, 2))
                want = total / math.sqrt(cylinder_mass(m, Word(iI, 2)) * cylinder_mass(m, Word(I, 2)))
                row = i * 2**n + Word(I, 2).index()
                assert A[row, Word(I, 2).index()] == pytest.approx(want, rel=1e-13)

    def test_geometric_column_norms_stable_in_eps(self, geometric_measure):
        a = compressed_S(geometric_measure, 0, 6, eps_F=1e-10)
        b = compressed_S(geometric_measure, 0, 6, eps_F=1e-13)
        na = np.sqrt(np.asarray(a.matrix.multiply(a.matrix).sum(axis=0))).ravel()
        nb = np.sqrt(np.asarray(b.matrix.multiply(b.matrix).sum(axis=0))).ravel()
        assert np.max(np.abs(na - nb)) <= 1e-8
        assert np.all(na <= 1 + a.error_bound)

    @pytest.mark.parametrize("name", families.QS_SUITE)
    @pytest.mark.parametrize("method", ["conditional", "point"])
    def test_nonnegative_single_entry_per_column(self, name, method):
        for op in compressed_family(M(name), 4, method=method):
            A = op.dense()
            assert np.all(A >= 0)
            assert np.all(np.count_nonzero(A, axis=0) == 1)

    def test_adjoint_is_transpose(self, geometric_measure):
        op = compressed_S(geometric_measure, 1, 4)
        adj = op.adjoint()
        assert adj.kind is OpKind.S_ADJOINT and adj.level == 5 and adj.shape == (16, 32)
        rng = np.random.default_rng(0)
        u, v = rng.normal(size=16), rng.normal(size=32)
        assert (op.matrix @ u) @ v == pytest.approx(u @ (adj.matrix @ v), rel=1e-14)
        assert adj.adjoint().kind is OpKind.S

    def test_errors(self):
        with pytest.raises(NotQuasiStationary):
            compressed_S(M("signed_power"), 0, 2)
        with pytest.raises(ValidationError):
            compressed_S(M("uniform"), 2, 2)
        with pytest.raises(ValidationError):
            compressed_S(M("uniform"), 0, 0)
        with pytest.raises(ValidationError):
            compressed_S(M("uniform"), 0, 2, method="bogus")

    def test_dense_cap(self):
        op = compressed_S(M("constant3"), 0, 8)
        assert op.shape == (3**9, 3**8)
        with pytest.raises(ValidationError):
            op.dense()


class TestCuntzRelations:
    def test_uniform_level_6(self):
        r = check_cuntz_relations(M("uniform"), 6)
        assert r.residual_isometry <= 1e-12 and r.residual_sum <= 1e-12

    @pytest.mark.parametrize("name", ["constant", "uniform", "skewed", "constant3"])
    @pytest.mark.parametrize("n", [1, 4, 8])
    def test_stationary_exact(self, name, n):
        r = check_cuntz_relations(M(name), n)
        assert r.residual <= 1e-12 and r.bound == 0.0

    @pytest.mark.parametrize("name", ["geometric", "power", "eventually_constant"])
    @pytest.mark.parametrize("n", [2, 4, 6])
    @pytest.mark.parametrize("eps", [1e-8, 1e-12])
    def test_residual_within_certified_bound(self, name, n, eps):
        r = check_cuntz_relations(M(name), n, eps)
        assert r.residual <= r.bound

    @pytest.mark.parametrize("eps", [1e-4, 1e-6, 1e-8, 1e-10])
    def test_residual_shrinks_under_refinement(self, geometric_measure, eps):
        # residual(eps / 100) <= residual(eps) on the geometric family
        coarse = check_cuntz_relations(geometric_measure, 6, eps)
        fine = check_cuntz_relations(geometric_measure, 6, eps / 100)
        assert fine.residual <= coarse.residual

    @pytest.mark.parametrize("eps", [1e-4, 1e-6, 1e-8, 1e-10])
    def test_residual_converges_under_refinement(self, geometric_measure, eps):
        coarse = check_cuntz_relations(geometric_measure, 6, eps)
        fine = check_cuntz_relations(geometric_measure, 6, eps / 100)
        assert abs(fine.residual - coarse.residual) <= coarse.error_budget

    def test_residual_shrinks_with_level(self, geometric_measure):
        res = [check_cuntz_relations(geometric_measure, n).residual for n in (2, 4, 6, 8)]
        assert all(b < a for a, b in zip(res, res[1:]))

    def test_point_scheme_worse_but_bounded(self, geometric_measure):
        cond = check_cuntz_relations(geometric_measure, 6)
        point = check_cuntz_relations(geometric_measure, 6, method="point")
        assert point.residual > cond.residual
        assert point.residual <= point.bound

    def test_negative_control(self):
        ops = compressed_family(M("uniform"), 3)
        ops[1].matrix.data[:] = 0.5
        iso, tot = cuntz_residuals(ops)
        assert iso == pytest.approx(0.75) and tot == pytest.approx(0.75)


class TestPVM:
    def test_empty_word_is_identity(self, geometric_measure):
        P = projection_of_cylinder(geometric_measure, Word.empty(2), 3).dense()
        assert np.array_equal(P, np.eye(8))

    def test_prefix_selection(self, geometric_measure):
        P = projection_of_cylinder(geometric_measure, w("0"), 2).dense()
        assert np.array_equal(P, np.diag([1.0, 1, 0, 0]))

    def test_disjoint(self, geometric_measure):
        A = projection_of_cylinder(geometric_measure, w("0"), 4).matrix
        B = projection_of_cylinder(geometric_measure, w("1"), 4).matrix
        assert (A @ B).nnz == 0 or np.all((A @ B).data == 0)

    def test_too_long(self, geometric_measure):
        with pytest.raises(ValidationError):
            projection_of_cylinder(geometric_measure, w("0101"), 3)

    @pytest.mark.parametrize("name", ["geometric", "constant3"])
    def test_algebra_exact(self, name):
        r = pvm_algebra_check(M(name), 4)
        assert r.multiplicativity == 0.0 and r.resolution == 0.0

    @pytest.mark.parametrize("name", ["geometric", "power", "constant3"])
    def test_constant_vector_gives_mu(self, name):
        m = M(name)
        N = m.n_symbols
        x = build_level(m, 4).constant_one()
        for I in [Word((), N), Word((0,), N), Word((1, 0), N), Word((N - 1, 0, 1), N)]:
            assert scalar_measure_check(m, x, I) == pytest.approx(cylinder_mass(m, I), rel=1e-13)

    def test_basis_vector(self, geometric_measure):
        x = np.zeros(16)
        x[Word.parse("0110", 2).index()] = 1.0
        assert scalar_measure(geometric_measure, x, w("01")) == 1.0
        assert scalar_measure(geometric_measure, x, w("1")) == 0.0

    def test_unit_vector_required(self, geometric_measure):
        with pytest.raises(ValidationError):
            scalar_measure_check(geometric_measure, np.ones(4), w("0"))
        with pytest.raises(ValidationError):
            scalar_measure(geometric_measure, np.ones(5), w("0"))

    @given(st.integers(0, 2**32 - 1), st.integers(0, 3))
    def test_norm_identity_random(self, seed, k):
        m = families.measure("geometric")
        rng = np.random.default_rng(seed)
        x = rng.normal(size=2**5)
        x /= np.linalg.norm(x)
        assert norm_identity_residual(m, x, rng.normal(size=2**k), k) <= 1e-12

    def test_multiplication_operator_diagonal(self, geometric_measure):
        op = multiplication_operator(geometric_measure, [2.0, 3.0], 1, 2).toarray()
        assert np.array_equal(op, np.diag([2.0, 2, 3, 3]))


class TestCyclicity:
    @pytest.mark.parametrize("name", list(families.QS_SUITE) + ["uniform", "skewed"])
    def test_full_dimension_level_4(self, name):
        r = monic_cyclicity_check(M(name), 4)
        assert r.dimension == 16 and r.ok

    @pytest.mark.parametrize("name", ["geometric", "constant3"])
    def test_level_1(self, name):
        m = M(name)
        assert monic_cyclicity_check(m, 1).dimension == m.n_symbols

    def test_three_symbols(self):
        assert monic_cyclicity_check(M("constant3"), 5).dimension == 243

    @pytest.mark.parametrize("name", ["uniform", "geometric"])
    def test_negative_control(self, name):
        r = monic_cyclicity_check(M(name), 4, zero_out=1)
        assert r.dimension < 16 and not r.ok

    def test_dense_cap(self):
        with pytest.raises(EnumerationCapExceeded):
            monic_cyclicity_check(M("constant3"), 8)
