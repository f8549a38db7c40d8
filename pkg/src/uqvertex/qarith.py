"""Exact q-deformed arithmetic over arbitrary-precision rationals.

All functions accept anything coercible to :func:`scalar` (ints, strings like
``"3/7"``, :class:`fractions.Fraction`, ``gmpy2.mpq``) and return ``mpq``.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import gmpy2
from gmpy2 import mpq

Scalar = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)


class SingularValueError(ZeroDivisionError):
    """Raised when a q-deformed quantity hits a vanishing denominator."""


def scalar(x) -> Scalar:
    """Coerce ``x`` to an exact rational; floats are rejected."""
    if isinstance(x, Scalar):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        text = x.strip()
        try:
            return mpq(Fraction(text).numerator, Fraction(text).denominator)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {x!r}") from exc
    if isinstance(x, float):
        raise TypeError("floats are not exact scalars; pass a string or Fraction")
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return mpq(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational scalar")


def to_fraction(x) -> Fraction:
    x = scalar(x)
    return Fraction(int(x.numerator), int(x.denominator))


def qpow(q, k: int) -> Scalar:
    """Integer power of a rational, negative exponents included."""
    q = scalar(q)
    if k >= 0:
        return q**k
    if q == 0:
        raise SingularValueError("negative power of zero")
    return ONE / q ** (-k)


def q_pochhammer(z, q, k: int) -> Scalar:
    """(z;q)_k = (1-z)(1-zq)...(1-zq^{k-1})."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    z, q = scalar(z), scalar(q)
    out = ONE
    term = z
    for _ in range(k):
        out *= 1 - term
        term *= q
    return out


def q_factorial(k: int, q) -> Scalar:
    """(q;q)_k."""
    return q_pochhammer(q, q, k)


def gauss_binomial(n: int, k: int, q) -> Scalar:
    """Gaussian binomial (q)_n / ((q)_k (q)_{n-k}); zero when k > n or k < 0."""
    if k < 0 or k > n:
        return ZERO
    q = scalar(q)
    den = q_factorial(k, q) * q_factorial(n - k, q)
    if den == 0:
        if q == 1:
            return mpq(gmpy2.comb(n, k))
        raise SingularValueError(f"Gaussian binomial ({n} {k}) singular at q={q}")
    return q_factorial(n, q) / den


def subset_binomial(n: int, k: int, q) -> Scalar:
    """Gaussian binomial as a sum over k-subsets L of {1..n} of q^{#(r<s, r in L, s not in L)}."""
    q = scalar(q)
    total = ZERO
    for subset in combinations(range(n), k):
        chosen = set(subset)
        inversions = sum(1 for r in subset for s in range(r + 1, n) if s not in chosen)
        total += q**inversions
    return total


def bracket_q(n: int, q) -> Scalar:
    """Symmetric q-integer [n]_q = q^{n-1} + q^{n-3} + ... + q^{1-n}."""
    if n < 0:
        return -bracket_q(-n, q)
    q = scalar(q)
    return sum((qpow(q, n - 1 - 2 * j) for j in range(n)), ZERO)


def bracket_factorial(n: int, q) -> Scalar:
    out = ONE
    for j in range(1, n + 1):
        out *= bracket_q(j, q)
    return out


def bracket_binomial(n: int, k: int, q) -> Scalar:
    """[n choose k]_q from symmetric q-integers; zero outside 0 <= k <= n."""
    if k < 0 or k > n or n < 0:
        return ZERO
    den = bracket_factorial(k, q) * bracket_factorial(n - k, q)
    if den == 0:
        raise SingularValueError(f"bracket binomial ({n} {k}) singular at q={q}")
    return bracket_factorial(n, q) / den


def deformed_integer(k: int, r) -> Scalar:
    """{k}_r = 1 + r + ... + r^{k-1}."""
    r = scalar(r)
    return sum((r**j for j in range(k)), ZERO)


def deformed_exp_coeff(k: int, r) -> Scalar:
    """Coefficient 1/{k}_r! of x^k in exp_r(x)."""
    den = ONE
    for j in range(1, k + 1):
        den *= deformed_integer(j, r)
    if den == 0:
        raise SingularValueError(f"deformed factorial vanishes at r={r}, k={k}")
    return ONE / den


@lru_cache(maxsize=None)
def cached_bracket_factorial(n: int, q: Scalar) -> Scalar:
    return bracket_factorial(n, q)


@lru_cache(maxsize=None)
def cached_bracket_binomial(n: int, k: int, q: Scalar) -> Scalar:
    return bracket_binomial(n, k, q)


def as_float(x) -> float:
    return float(scalar(x))
