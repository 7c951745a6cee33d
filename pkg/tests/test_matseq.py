import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import stochastic_matrices
from qsmarkov import exact, families
from qsmarkov.errors import (
    DepthCapExceeded,
    HorizonExceeded,
    MissingTailCertificate,
    NonPositiveEntry,
    RowSumOff,
    ValidationError,
)
from qsmarkov.matseq import (
    Constant,
    EventuallyConstant,
    ExplicitList,
    Geometric,
    Perturbation,
    Power,
    SignedPower,
    forward_product,
    limit_matrix,
    perron_left,
    product_limit_check,
    sequence_from_record,
    validate,
)

T = [[0.7, 0.3], [0.4, 0.6]]
D = [[-0.1, 0.1], [0.1, -0.1]]


class TestValidate:
    def test_accepts(self):
        out = validate([[0.5, 0.5], [0.25, 0.75]])
        assert np.allclose(out.sum(axis=1), 1.0)
        assert not out.flags.writeable

    def test_row_sum_off(self):
        with pytest.raises(RowSumOff) as exc:
            validate([[0.5, 0.6], [0.25, 0.75]])
        assert exc.value.i == 0 and exc.value.sum == pytest.approx(1.1)

    def test_non_positive(self):
        with pytest.raises(NonPositiveEntry) as exc:
            validate([[1.0, 0.0], [0.5, 0.5]])
        assert (exc.value.i, exc.value.j) == (0, 1)

    @pytest.mark.parametrize("M", [[[1.0]], [[0.5, 0.5]], [[np.nan, 1.0], [0.5, 0.5]]])
    def test_shape_and_finiteness(self, M):
        with pytest.raises(ValidationError):
            validate(M)

    @given(stochastic_matrices(n_max=8))
    def test_idempotent(self, M):
        once = validate(M)
        assert np.array_equal(validate(once), once)

    def test_renormalizes_within_tolerance(self):
        out = validate([[0.5 + 4e-13, 0.5], [0.25, 0.75]])
        assert abs(out[0].sum() - 1.0) <= 1e-15


class TestPerron:
    def test_uniform(self):
        assert np.allclose(perron_left([[0.5, 0.5], [0.5, 0.5]]), [0.5, 0.5], atol=1e-15)

    def test_two_state(self):
        # solve v (T - I) = 0 with v summing to 1: 0.3 v0 = 0.4 v1
        assert np.allclose(perron_left(T), [4 / 7, 3 / 7], atol=1e-15)

    def test_matches_rational_oracle(self):
        M = families.T3
        v = perron_left(M)
        assert np.allclose(v, [float(x) for x in exact.perron_left(M)], atol=1e-15)

    @given(stochastic_matrices(n_max=12))
    def test_fixed_point_and_positive(self, M):
        v = perron_left(M)
        Mv = validate(M)
        assert np.all(v > 0)
        assert abs(v.sum() - 1.0) < 1e-14
        assert np.max(np.abs(v @ Mv - v)) <= 1e-12

    def test_power_iteration_branch(self):
        rng = np.random.default_rng(3)
        M = families.random_stochastic(rng, 20)
        v = perron_left(M)
        assert np.max(np.abs(v @ validate(M) - v)) <= 1e-12


class TestCoefficients:
    @pytest.mark.parametrize("coef", [Geometric(0.5), Geometric(0.9), Power(2.0), Power(1.5), SignedPower(1.5),
                                      SignedPower(3.0)])
    def test_tail_bounds_dominate_partial_sums(self, coef):
        n = np.arange(1, 200_002)
        c = coef.values(n)
        d = np.abs(np.diff(c))
        for m in (1, 2, 10, 100):
            assert coef.diff_tail(m) >= d[m - 1:].sum() * (1 - 1e-12)
        assert coef.abs_sum() >= np.abs(c).sum() * (1 - 1e-12)
        assert coef.weighted_diff_sum() >= (n[:-1] * d).sum() * (1 - 1e-12)

    def test_geometric_closed_forms(self):
        g = Geometric(0.5)
        assert g.diff_tail(3) == 0.125
        assert g.weighted_diff_sum() == pytest.approx(2.0)  # r / (1 - r)^2
        assert g.abs_sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("p", [0.5, 1.0])
    def test_signed_power_diverges(self, p):
        assert SignedPower(p).diff_diverges
        assert math.isinf(SignedPower(p).weighted_diff_sum())

    def test_signed_power_weighted_needs_p_above_two(self):
        assert math.isinf(SignedPower(2.0).weighted_diff_sum())
        assert math.isfinite(SignedPower(2.5).weighted_diff_sum())

    @pytest.mark.parametrize("bad", [lambda: Geometric(1.0), lambda: Geometric(0.0), lambda: Power(0.0)])
    def test_parameter_validation(self, bad):
        with pytest.raises(ValidationError):
            bad()


class TestSequences:
    def test_constant(self):
        s = Constant(T)
        assert s.tail_bound(1) == 0.0 and s.entry_floor == pytest.approx(0.3)
        assert np.array_equal(limit_matrix(s), validate(T))
        assert np.array_equal(s.matrices(1, 4)[2], validate(T))

    def test_perturbation_values_and_certificates(self):
        s = Perturbation(T, D, Geometric(0.5))
        assert np.allclose(s.matrix(1), [[0.65, 0.35], [0.45, 0.55]])
        assert s.entry_floor == pytest.approx(0.25)
        assert s.tail_bound(1) == pytest.approx(0.05)
        assert np.array_equal(limit_matrix(s), validate(T))

    def test_perturbation_rejects_bad_direction(self):
        with pytest.raises(ValidationError):
            Perturbation(T, [[0.1, 0.1], [0.0, 0.0]], Geometric(0.5))
        with pytest.raises(NonPositiveEntry):
            Perturbation(T, [[-0.5, 0.5], [0.5, -0.5]], Power(2))

    def test_eventually_constant(self):
        s = families.eventually_constant()
        assert np.array_equal(s.matrix(5), validate(T))
        diffs = [np.abs(s.matrix(k) - s.matrix(k + 1)).max() for k in range(1, 6)]
        assert s.tail_bound(1) == pytest.approx(sum(diffs))
        assert s.tail_bound(3) == 0.0

    def test_explicit_list(self):
        mats = [np.add(T, 0.5**n * np.asarray(D)) for n in range(1, 6)]
        s = ExplicitList(mats, T, envelope=(0.1, 0.5), entry_floor=0.25)
        assert s.horizon == 5 and s.has_certificate
        with pytest.raises(HorizonExceeded):
            s.matrix(6)
        bare = ExplicitList(mats, T)
        assert not bare.has_certificate
        with pytest.raises(MissingTailCertificate):
            bare.limit

    @pytest.mark.parametrize("name", list(families.FAMILIES))
    def test_record_roundtrip(self, name):
        s = families.family(name)
        r = sequence_from_record(s.to_record())
        assert r.same_as(s)
        assert np.array_equal(r.matrices(1, 20), s.matrices(1, 20))

    def test_unknown_record(self):
        with pytest.raises(ValidationError):
            sequence_from_record({"kind": "bogus"})
        with pytest.raises(ValidationError):
            sequence_from_record({"kind": "constant"})

    def test_floor_holds_for_every_family(self):
        for name in families.FAMILIES:
            s = families.family(name)
            assert s.matrices(1, 2000).min() >= s.entry_floor * (1 - 1e-12)


class TestProducts:
    def test_single_factor(self):
        s = Constant(T)
        assert np.array_equal(forward_product(s, 1, 2), validate(T))

    def test_constant_limit_by_51(self):
        P = forward_product(Constant(T), 1, 51)
        assert np.abs(P - np.array([[4 / 7, 3 / 7]] * 2)).max() <= 1e-7

    def test_incremental_associativity(self):
        s = families.geometric()
        for n in (3, 10, 40):
            assert np.allclose(forward_product(s, 1, n + 1), forward_product(s, 1, n) @ s.matrix(n + 1),
                               atol=1e-15)

    def test_matches_rational_product(self):
        s = families.geometric()
        Q = exact.product_exact(exact.matrices(s.to_record(), 11)[1:])
        assert np.allclose(forward_product(s, 1, 10), np.array(Q, dtype=float), atol=1e-15)

    @given(stochastic_matrices(), st.integers(1, 30))
    def test_rows_stay_stochastic(self, M, n):
        P = forward_product(Constant(M), 0, n)
        assert np.all(P > 0)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-13)

    def test_depth_cap(self):
        with pytest.raises(DepthCapExceeded):
            forward_product(Constant(T), 0, 100, depth_cap=10)

    def test_product_limit_uniform_immediate(self):
        pl = product_limit_check(Constant([[0.5, 0.5], [0.5, 0.5]]), 1, 1e-12, 10)
        assert pl.achieved_n == 2
        assert np.allclose(pl.limit, 0.5)

    def test_product_limit_constant_and_geometric(self):
        pc = product_limit_check(Constant(T), 1, 1e-7, 51)
        assert pc.converged and pc.achieved_n <= 51
        pg = product_limit_check(families.geometric(), 1, 1e-7, 200)
        assert pg.converged and np.allclose(pg.limit, pc.limit)

    def test_product_limit_not_converged(self):
        pl = product_limit_check(Constant(T), 0, 1e-14, 5)
        assert not pl.converged and pl.achieved_n is None

    def test_error_monotone_after_burn_in(self):
        s = Constant(T)
        Q = np.array([[4 / 7, 3 / 7]] * 2)
        errs = [np.abs(forward_product(s, 0, n) - Q).max() for n in range(2, 30)]
        assert all(b <= a for a, b in zip(errs, errs[1:]))
