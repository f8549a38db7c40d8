from fractions import Fraction
from itertools import combinations

import pytest

from uqvertex.qarith import (
    SingularValueError,
    bracket_binomial,
    bracket_factorial,
    bracket_q,
    deformed_exp_coeff,
    gauss_binomial,
    q_pochhammer,
    qpow,
    scalar,
    subset_binomial,
)

QS = ("1/2", "2/3", "-3/5", "7/4")


def brute_subset_sum(n, k, q):
    """Sum of q^{#(r<s, r chosen, s not chosen)} over k-subsets, written independently."""
    q = Fraction(q)
    total = Fraction(0)
    for chosen in combinations(range(1, n + 1), k):
        stat = sum(1 for r in chosen for s in range(r + 1, n + 1) if s not in chosen)
        total += q**stat
    return total


def test_scalar_normal_form():
    x = scalar("-6/4")
    assert (x.numerator, x.denominator) == (-3, 2)
    assert scalar(Fraction(2, 4)) == scalar("1/2")


def test_scalar_rejects_floats():
    with pytest.raises(TypeError):
        scalar(0.5)
    with pytest.raises(ValueError):
        scalar("abc")


def test_pochhammer_small_cases():
    assert q_pochhammer("3/7", "1/2", 0) == 1
    assert q_pochhammer("1/2", "1/2", 2) == scalar("3/8")
    for k in range(1, 5):
        assert q_pochhammer(1, "2/5", k) == 0


def test_gauss_binomial_quartic():
    for q in QS:
        q = scalar(q)
        assert gauss_binomial(4, 2, q) == 1 + q + 2 * q**2 + q**3 + q**4
        assert gauss_binomial(7, 0, q) == 1
        assert gauss_binomial(3, 5, q) == 0


def test_gauss_binomial_matches_subset_enumeration():
    assert gauss_binomial(6, 3, "2/3") == scalar(brute_subset_sum(6, 3, "2/3"))
    for n in range(7):
        for k in range(n + 1):
            assert subset_binomial(n, k, "-1/3") == scalar(brute_subset_sum(n, k, "-1/3"))


def test_bracket_numbers():
    assert bracket_q(0, "1/2") == 0
    assert bracket_q(1, "1/2") == 1
    assert bracket_q(5, 1) == 5
    assert bracket_factorial(3, 1) == 6


@pytest.mark.parametrize("q", QS)
def test_bracket_binomial_conversion_factor(q):
    # [n k]_q = q^{-k(n-k)} times the Gaussian binomial in q^2
    q = scalar(q)
    for n in range(7):
        for k in range(n + 1):
            assert bracket_binomial(n, k, q) == qpow(q, -k * (n - k)) * scalar(brute_subset_sum(n, k, q * q))


def test_deformed_exponential_coefficients():
    assert deformed_exp_coeff(0, "1/4") == 1
    assert deformed_exp_coeff(2, "1/4") == scalar("4/5")
    assert deformed_exp_coeff(4, 1) == scalar("1/24")


def test_singular_values_raise():
    with pytest.raises(SingularValueError):
        qpow(0, -1)
    with pytest.raises(SingularValueError):
        deformed_exp_coeff(2, -1)
