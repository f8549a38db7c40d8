import pytest

from uqvertex.suites import SUITES, run_suite, stronger_chain

FAST = ["ybe", "trans", "inter", "fusion-equiv", "stochastic", "lump", "inversion", "bpcp"]


@pytest.mark.parametrize("name", FAST)
def test_fast_suites_pass(name):
    rep = run_suite(name)
    assert rep["status"] == "pass", rep["failing"]
    assert rep["count"] == len(rep["items"]) > 0
    names = [item["name"] for item in rep["items"]]
    assert names == sorted(names)


def test_registry_names():
    assert set(FAST) | {"major", "qhahn-direct", "identities"} == set(SUITES)


def test_unknown_suite_raises():
    with pytest.raises(KeyError):
        run_suite("nothing")


def test_explicit_points_are_used():
    rep = run_suite("ybe", n=1, q="1/2", z=["3", "5", "7"])
    assert rep["status"] == "pass"
    assert rep["count"] == 8 and all(item["name"].endswith("-p0") for item in rep["items"])


def test_singular_explicit_point_is_reported():
    from uqvertex.qarith import SingularValueError

    with pytest.raises(SingularValueError):
        run_suite("ybe", n=1, l=1, m=[1], q="1/2", z=["1/4", "1", "1"])


def test_stronger_chain_products_agree():
    ops = stronger_chain(1, 2, "2/3", "5/7")
    assert len(ops) == 4
    assert all(op == ops[0] for op in ops[1:])


def test_small_major_run():
    rep = run_suite("major", n=1, l=1, m=[1, 2], L=2)
    assert rep["status"] == "pass"


def test_qhahn_direct_restricted():
    rep = run_suite("qhahn-direct", n=1, L=2, bound=2)
    assert rep["status"] == "pass"


def test_identities_low_bound():
    rep = run_suite("identities", bound=2)
    assert rep["status"] == "pass"
