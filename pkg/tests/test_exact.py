from fractions import Fraction

import numpy as np
import pytest

from qsmarkov import exact, families
from qsmarkov.errors import ValidationError
from qsmarkov.measure import cylinder_mass, mass_table
from qsmarkov.symbolic import Word


def test_decimal_reading():
    assert exact.q(0.7) == Fraction(7, 10)
    assert exact.q(3) == Fraction(3)
    assert exact.q(Fraction(1, 3)) == Fraction(1, 3)


def test_perron_two_state():
    assert exact.perron_left(families.T_INF) == [Fraction(4, 7), Fraction(3, 7)]


def test_perron_is_fixed_point():
    lam = exact.perron_left(families.T3)
    T = exact.qmatrix(families.T3)
    assert exact.matmul([lam], T)[0] == lam and sum(lam) == 1


def test_geometric_lambda():
    mats = exact.matrices(families.geometric().to_record(), 2)
    assert exact.perron_left(mats[0]) == [Fraction(9, 16), Fraction(7, 16)]


def test_coefficients():
    assert exact.coefficient({"family": "geometric", "r": 0.5}, 3) == Fraction(1, 8)
    assert exact.coefficient({"family": "power", "p": 2}, 3) == Fraction(1, 9)
    assert exact.coefficient({"family": "signed_power", "p": 1}, 3) == Fraction(-1, 3)
    with pytest.raises(ValidationError):
        exact.coefficient({"family": "power", "p": 0.5}, 3)


@pytest.mark.parametrize("name,params", [("constant", {}), ("eventually_constant", {}), ("geometric", {}),
                                         ("power", {}), ("signed_power", {"p": 1.0})])
def test_consistency_defect_zero(name, params):
    rec = families.family(name, **params).to_record()
    mats = exact.matrices(rec, 8)
    assert exact.consistency_defect(exact.perron_left(mats[0]), mats, 7) == 0


def test_masses_match_float(geometric_measure):
    mats = exact.matrices(geometric_measure.seq.to_record(), 5)
    lam = exact.perron_left(mats[0])
    got = mass_table(geometric_measure, 5)
    want = np.array([float(x) for x in exact.mass_table(lam, mats, 5)])
    assert np.max(np.abs(got - want)) <= 1e-16
    assert exact.cylinder_mass(lam, mats, (0, 1)) == Fraction(9, 16) * Fraction(7, 20)
    assert cylinder_mass(geometric_measure, Word.parse("01", 2)) == pytest.approx(9 / 16 * 0.35, rel=1e-15)


def test_stationary_entries_exactly_one():
    for i in range(3):
        assert exact.stationary_entry_squared(families.T3, i, (2, 0, 1)) == 1


def test_limits():
    with pytest.raises(ValidationError):
        exact.matrices(families.constant().to_record(), 20)
    with pytest.raises(ValidationError):
        exact.perron_left(np.full((4, 4), 0.25))
