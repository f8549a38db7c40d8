import json
from math import comb, prod

import pytest

from uqvertex.fock import (
    ConservationError,
    LocalOperator,
    assert_conserving,
    b_matrix,
    charge_reverse,
    charge_reversal_matrix,
    embed,
    enumerate_compositions,
    gauge_matrix,
    gauge_tilde_matrix,
    kron,
    operator_from_json,
    sector_basis,
    sector_decompose,
    swap,
    tensor_basis,
)
from uqvertex.qarith import qpow, scalar
from uqvertex.vertex import s_matrix


def test_composition_order():
    assert enumerate_compositions(1, 1) == ((1, 0), (0, 1))
    assert enumerate_compositions(1, 2) == ((2, 0), (1, 1), (0, 2))
    comps = enumerate_compositions(2, 2)
    assert len(comps) == comb(4, 2)
    assert comps[0] == (2, 0, 0) and comps[-1] == (0, 0, 2)
    assert list(comps) == sorted(comps, reverse=True)


def test_tensor_dimension_and_row_major_order():
    basis = tensor_basis(2, (1, 2, 1))
    assert len(basis) == prod(comb(m + 2, 2) for m in (1, 2, 1))
    assert basis.labels[0] == ((1, 0, 0), (2, 0, 0), (1, 0, 0))
    assert basis.labels[1] == ((1, 0, 0), (2, 0, 0), (0, 1, 0))


def test_charge_reversal_is_an_involution():
    assert charge_reverse((1, 0)) == (0, 1)
    basis = tensor_basis(3, (2,))
    pi = charge_reversal_matrix(basis)
    assert pi @ pi == LocalOperator.identity(basis)


def test_b_commutes_with_charge_reversal():
    basis = tensor_basis(2, (2, 1))
    b, pi = b_matrix(basis, "2/3"), charge_reversal_matrix(basis)
    assert b @ pi == pi @ b


def test_b_entries():
    q = scalar("3/5")
    b = b_matrix(tensor_basis(1, (1,)), q)
    assert b.entry(((1, 0),), ((1, 0),)) == 1 - q**2
    b0 = b_matrix(tensor_basis(1, (0,)), q)
    assert b0.entry(((0, 0),), ((0, 0),)) == 1


def test_gauge_two_sites():
    q = scalar("2/7")
    basis = tensor_basis(1, (1, 2))
    ga = gauge_matrix(basis, q)
    for a, b in basis.labels:
        assert ga.entry((a, b), (a, b)) == qpow(q, -a[0] * b[1])
    # all particles on one site: no cross-site pairs
    assert ga.entry(((0, 1), (2, 0)), ((0, 1), (2, 0))) == qpow(q, 0)


def test_gauge_reversal_intertwines_tilde():
    basis = tensor_basis(1, (1, 2))
    q = scalar("5/3")
    pi = charge_reversal_matrix(basis)
    assert pi @ gauge_matrix(basis, q) @ pi == gauge_tilde_matrix(basis, q)


def test_sector_blocks_of_s():
    s = s_matrix(1, 1, 1, "1/3", "2/5")
    sectors, bad = sector_decompose(s)
    assert not bad
    assert sorted(len(v) for v in sectors.values()) == [1, 1, 2]
    sectors, bad = sector_decompose(swap(2, 1, 2))
    assert not bad


def test_corrupted_operator_is_reported():
    basis = tensor_basis(1, (1, 1))
    bad = LocalOperator.from_function(basis, basis, lambda lab: {((1, 0), (1, 0)): scalar(1)})
    with pytest.raises(ConservationError):
        assert_conserving(bad)


def test_kron_and_embed_agree():
    a = s_matrix(1, 1, 1, "1/3", "2/5")
    ident = LocalOperator.identity(tensor_basis(1, (2,)))
    assert kron(a, ident) == embed(a, tensor_basis(1, (1, 1, 2)), (0, 1))


def test_json_round_trip_and_csv_shape():
    op = s_matrix(2, 1, 2, "1/2", "1/5")
    data = json.loads(json.dumps(op.to_json_dict({"tag": 1})))
    assert operator_from_json(data, 2) == op
    rows = op.to_csv().strip().splitlines()
    assert len(rows) == len(op.codomain) + 1


def test_sector_basis():
    basis = sector_basis(1, (1, 1, 1), (2,))
    assert len(basis) == 3
