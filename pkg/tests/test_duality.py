from itertools import product

import pytest

from uqvertex.duality import (
    balanced_duality,
    build_transfer,
    closed_boundary_check,
    continuous_time_generators,
    dplus,
    duality_algebraic,
    duality_closed_form,
    duality_entry,
    duality_entry_factorial,
    duality_residual,
    generator_duality_check,
    infinite_line_duality_check,
    leak_mass,
    limit_duality_entry,
    padding_check,
    qboson_rate,
    reduction_check,
    residual_entry,
    transfer_column,
    verify_major,
    z_operators,
)
from uqvertex.fock import full, swap, tensor_basis, unit, vacuum
from uqvertex.qarith import ONE, ZERO, bracket_factorial, qpow, scalar
from uqvertex.qhahn import d0_entry, mu_limit_check
from uqvertex.vertex import s_matrix

Q = scalar("2/3")


def _prod_factorials(spins, q):
    v = ONE
    for m in spins:
        v *= bracket_factorial(m, q)
    return v


@pytest.mark.parametrize("n,spins", [(1, (1, 2)), (2, (2, 1)), (2, (1, 1, 2))])
def test_two_closed_forms_agree(n, spins):
    basis = tensor_basis(n, spins)
    for xi in basis.labels:
        for eta in basis.labels:
            assert duality_entry(xi, eta, spins, Q) == duality_entry_factorial(xi, eta, spins, Q)


@pytest.mark.parametrize("n,spins", [(1, (2, 3)), (2, (2, 1, 2))])
def test_empty_xi_gives_product_of_factorials(n, spins):
    empty = tuple(vacuum(n, m) for m in spins)
    target = _prod_factorials(spins, Q)
    for eta in tensor_basis(n, spins).labels:
        assert duality_entry(empty, eta, spins, Q) == target


def test_normalized_operator_is_one_on_empty_xi():
    spins = (2, 1)
    d = duality_closed_form(1, spins, Q, normalized=True)
    empty = tuple(vacuum(1, m) for m in spins)
    assert all(d.entry(eta, empty) == 1 for eta in d.domain.labels)


def test_limit_functional_is_one_on_empty_xi():
    eta = ((2, 1), (0, 3), (1, 0))
    empty = ((0, 0),) * 3
    assert d0_entry(eta, empty, Q) == 1


def test_limit_entry_is_a_pure_power():
    eta = ((1, 0, 0), (0, 1, 0))
    xi = ((0, 1, 0), (1, 0, 0))
    v = limit_duality_entry(xi, eta, Q)
    assert v != 0
    k = 0
    while k < 20 and v != qpow(Q, -k):
        k += 1
    assert v == qpow(Q, -k)


@pytest.mark.parametrize("n,spins", [(1, (1,)), (1, (1, 1)), (2, (1, 2)), (1, (2, 1, 1))])
def test_algebraic_form_matches_up_to_sector_constants(n, spins):
    op, constants = duality_algebraic(n, spins, Q)
    closed = duality_closed_form(n, spins, Q)
    assert op == closed
    assert constants


@pytest.mark.parametrize("n,l,spins", [(2, 2, (1, 2)), (1, 3, (1, 1)), (1, 1, (2,))])
def test_reduction(n, l, spins):
    assert reduction_check(n, l, spins, Q)["status"] == "pass"


def test_single_site_transfer_is_s_then_flip():
    n, l, m, z = 1, 1, 2, scalar(5)
    t = build_transfer("left", n, l, z, (m,), (1,), Q)
    expected = s_matrix(n, l, m, Q, z) @ swap(n, m, l)
    assert t == expected


def test_transfer_columns_are_stochastic():
    t = build_transfer("left", 1, 1, 5, (1, 2), (1, 1), Q)
    for j in range(len(t.domain.labels)):
        assert sum(t.column(t.domain.labels[j]).values(), ZERO) == 1


def test_transfer_column_matches_matrix():
    spins, specs = (1, 2), ("3", "7")
    t = build_transfer("right", 1, 1, 5, spins, specs, Q)
    for lab in t.domain.labels[:6]:
        assert transfer_column("right", 1, 1, 5, spins, specs, Q, lab) == {
            k: v for k, v in t.column(lab).items() if v != 0}


def test_transfer_rejects_bad_direction_and_lengths():
    with pytest.raises(ValueError):
        build_transfer("up", 1, 1, 5, (1,), (1,), Q)
    with pytest.raises(ValueError):
        build_transfer("left", 1, 1, 5, (1, 1), (1,), Q)


@pytest.mark.parametrize("n,l,u", [(1, 1, "u0"), (2, 1, ("f", 1)), (1, 2, "u0"), (1, 1, ("e", 1))])
def test_major_examples(n, l, u):
    rep = verify_major(n, l, 5, (1, 2), (3, 7), Q, u)
    assert rep["status"] == "pass", rep


def test_dplus_is_cached_and_consistent():
    a = dplus(1, (1, 2), Q)
    b = dplus(1, (1, 2), Q)
    assert a == b


def test_z_operators_pin_the_auxiliary_line():
    spins, specs = (1, 1), (1, 1)
    z_op, z_rev = z_operators(1, 1, 5, spins, specs, Q)
    t = build_transfer("left", 1, 1, 5, spins, specs, Q)
    omega, a = vacuum(1, 1), full(1, 1)
    for eta in z_op.domain.labels:
        col = t.column(eta + (a,))
        expected = {lab[1:]: v for lab, v in col.items() if lab[0] == omega and v != 0}
        assert {k: v for k, v in z_op.column(eta).items() if v != 0} == expected
    assert z_rev.domain.labels == z_op.domain.labels


def test_leak_plus_kept_mass_is_one():
    spins, specs = (1, 1), (1, 1)
    z_op, _ = z_operators(1, 1, 5, spins, specs, Q)
    for eta in z_op.domain.labels:
        kept = sum(z_op.column(eta).values(), ZERO)
        assert kept + leak_mass(1, 1, 5, spins, specs, Q, eta) == 1


def test_residual_entry_matches_full_residual():
    spins, specs = (1, 2, 1), (1, 1, 1)
    z_op, z_rev = z_operators(1, 1, "1/2", spins, specs, 2)
    d = balanced_duality(1, spins, 2)
    full_res = duality_residual(z_op, z_rev, d)
    labels = z_op.domain.labels
    for eta, xi in list(product(labels, labels))[:40]:
        assert residual_entry(1, 1, "1/2", spins, specs, 2, eta, xi) == full_res.entry(eta, xi)


def test_closed_boundary_sequence():
    rep = closed_boundary_check(1, 1, "1/2", 2, (1, 2, 3))
    assert rep["status"] == "pass"
    seq = rep["sequence"]
    assert all(row["max_abs_residual"] == "0" for row in seq)
    assert all(scalar(row["leak_ratio"]) <= scalar("1/2") for row in seq[1:])


def test_padding_residual_decays():
    e, p = vacuum(1, 1), unit(1, 1)
    rep = padding_check(1, 5, "1/2", (1, 2, 3), (p, e), (e, p))
    assert rep["status"] == "pass"
    assert rep["kappa_observed"] < 1


def test_infinite_line_on_empty_configurations_vanishes():
    e = vacuum(1, 1)
    rep = infinite_line_duality_check(1, 5, "1/2", (e, e), (e, e), paddings=(1, 2))
    assert rep["status"] == "pass"
    assert all(row["max_abs_residual"] == "0" for row in rep["sequence"])


def test_qboson_rates():
    q = scalar("1/2")
    assert qboson_rate((2, 1), 1, q) == 1 - q**4
    assert qboson_rate((2, 1), 2, q) == q**4 * (1 - q**2)
    assert qboson_rate((0, 1), 1, q) == 0


def test_generators_have_zero_column_sums():
    g_left, g_right = continuous_time_generators(2, 3, (1, 1), "1/2")
    for gen in (g_left, g_right):
        for j, col in gen.cols.items():
            assert sum(col.values(), ZERO) == 0


@pytest.mark.parametrize("n,eta_totals,xi_totals", [(1, (2,), (2,)), (1, (1,), (2,)), (2, (1, 1), (1, 1))])
def test_generator_duality(n, eta_totals, xi_totals):
    assert generator_duality_check(n, 3, eta_totals, xi_totals, "1/2")["status"] == "pass"


@pytest.mark.parametrize("q", ["1/3", "3"])
def test_site_factor_limit_in_spin(q):
    assert mu_limit_check((1, 0), (1, 1), q, (2, 6, 12, 20))["status"] == "pass"
