import pytest

from uqvertex.fock import LocalOperator, swap, tensor_basis, vacuum
from uqvertex.qarith import SingularValueError, qpow, scalar
from uqvertex.vertex import (
    IntegrityError,
    bp_cp_match,
    bp_cp_weight,
    check_stochastic,
    consecutive_groups,
    continued_is_stochastic,
    continued_predicted_stochastic,
    degenerate,
    inversion_symmetry_check,
    krl_fuse,
    lump_species,
    r_matrix_l1,
    r_matrix_m1,
    reduced_entries,
    rogers_pitman_check,
    s_closed_form_l1,
    s_closed_form_m1,
    s_from_r,
    s_limit_l1,
    s_matrix,
    s_zero_infinite_spin,
    split_matrix,
    stochastic_fuse,
    sum_matrix,
    triangularity_violations,
)

POINTS = (("1/3", "2/7"), ("5/2", "-3/4"), ("-2/3", "9/5"))


def test_fundamental_r_middle_block():
    q, z = scalar("2/3"), scalar("5/7")
    r = r_matrix_l1(1, 1, q, z)
    a, b = ((1, 0), (0, 1)), ((0, 1), (1, 0))
    d = z - q * q
    assert r.entry(a, a) == q * (z - 1) / d
    assert r.entry(a, b) == z * (1 - q * q) / d
    assert r.entry(b, a) == (1 - q * q) / d
    assert r.entry(((1, 0), (1, 0)), ((1, 0), (1, 0))) == 1


def test_r_at_unit_spectral_is_the_flip():
    for q in ("1/2", "3"):
        assert r_matrix_l1(1, 1, q, 1) == swap(1, 1, 1)


def test_r_at_q_one_is_identity():
    ident = LocalOperator.identity(tensor_basis(1, (1, 1)))
    assert r_matrix_l1(1, 1, 1, "3/7") == ident


def test_l_one_and_m_one_formulas_coincide():
    for q, z in POINTS:
        for n in (1, 2):
            assert r_matrix_m1(n, 1, q, z) == r_matrix_l1(n, 1, q, z)


def test_m_one_diagonal_entry():
    q, z = scalar("3/4"), scalar("2/9")
    r = r_matrix_m1(1, 2, q, z)
    lab = ((1, 1), (1, 0))
    assert r.entry(lab, lab) == q**2 * (1 - z / q) / (q**3 - z)


@pytest.mark.parametrize("q,z", POINTS)
def test_gauge_of_r_matches_closed_form(q, z):
    for n in (1, 2):
        assert s_from_r(r_matrix_l1(n, 2, q, z), q) == s_closed_form_l1(n, 2, q, z)
        assert s_from_r(r_matrix_m1(n, 2, q, z), q) == s_closed_form_m1(n, 2, q, z)


def test_fundamental_s_is_stochastic():
    s = s_matrix(1, 1, 1, "1/3", "4/5")
    assert s.column_sums() == [1, 1, 1, 1]


def test_spin_two_column():
    q, alpha = scalar("2/3"), scalar("1/5")
    s = s_matrix(1, 2, 2, q, -alpha * q**4)
    col = s.column(((0, 2), (1, 1)))
    assert col[((0, 2), (1, 1))] == (1 + alpha * q**4) / (1 + alpha)
    assert col[((1, 1), (0, 2))] == (1 - q**4) * alpha / (1 + alpha)


def test_krl_spot_column():
    q, z = scalar("3/2"), scalar("1/7")
    col = krl_fuse(1, 1, 2, q, z).column(((1, 0), (1, 1)))
    assert col == {((1, 0), (1, 1)): q * (q - z) / (q**3 - z), ((0, 1), (2, 0)): (q * q - 1) / (q**3 - z)}


def test_merge_after_split_is_identity():
    q = scalar("2/5")
    for n, l in ((1, 2), (2, 2), (2, 3)):
        assert sum_matrix(n, l) @ split_matrix(n, l, q) == LocalOperator.identity(tensor_basis(n, (l,)))


@pytest.mark.parametrize("n,l,m", [(1, 2, 2), (2, 1, 2), (2, 2, 2)])
def test_stochastic_fusion_equals_gauged_krl(n, l, m):
    for q, z in POINTS:
        assert stochastic_fuse(n, l, m, q, z) == s_from_r(krl_fuse(n, l, m, q, z), q)


@pytest.mark.parametrize("n,l,m", [(1, 2, 1), (1, 1, 1), (2, 2, 2), (2, 3, 1)])
def test_rogers_pitman(n, l, m):
    for q, z in POINTS:
        assert rogers_pitman_check(n, l, m, q, z)["status"] == "pass"


def test_descending_staircase_is_not_fibre_constant():
    rep = rogers_pitman_check(1, 2, 1, "1/3", "5/2", descending=True)
    assert rep["status"] == "fail"


def test_singular_loci_rejected():
    with pytest.raises(SingularValueError):
        r_matrix_l1(1, 1, "1/2", "1/4")
    with pytest.raises(SingularValueError):
        r_matrix_m1(1, 2, "1/2", "1/8")
    with pytest.raises(SingularValueError):
        krl_fuse(1, 2, 1, "1/2", "1/2")


def test_infinite_spectral_limit_matches_large_z():
    q = scalar("1/3")
    for n, m in ((1, 2), (2, 1), (2, 2)):
        limit = s_limit_l1(n, m, q, "inf")
        assert s_matrix(n, 1, m, q, "inf") == limit
        far = s_matrix(n, 1, m, q, scalar(10) ** 40)
        assert float(far.max_abs_diff(limit)) < 1e-30


def test_zero_spectral_limit_is_evaluation():
    q = scalar("5/4")
    for n, m in ((1, 2), (2, 2)):
        assert s_matrix(n, 1, m, q, 0) == s_limit_l1(n, m, q, "zero")
        assert degenerate(n, 2, m, q, "zero") == s_matrix(n, 2, m, q, 0)


def test_infinite_limit_forbids_overtaking():
    for n, l, m in ((2, 1, 2), (2, 2, 2)):
        assert triangularity_violations(degenerate(n, l, m, "1/2", "inf"), "inf") == []
        assert triangularity_violations(degenerate(n, l, m, "1/2", "zero"), "zero") == []


def test_infinite_limit_independent_of_spin():
    low = reduced_entries(s_matrix(2, 1, 2, "2/3", "inf"))
    high = reduced_entries(s_matrix(2, 1, 3, "2/3", "inf"))
    common = set(low) & set(high)
    assert common and all(low[k] == high[k] for k in common)


def test_zero_limit_concentrates_as_spin_grows():
    q = scalar(2)
    alpha, beta = (1, 0, 0), (0, 1)
    target = s_zero_infinite_spin(alpha, beta)
    (gamma, settled), = target
    gaps = []
    for m in (2, 4, 6, 8):
        col = s_matrix(2, 1, m, q, 0).column((alpha, beta + (m - 1,)))
        gaps.append(1 - col.get((gamma, settled + (m - sum(settled),)), 0))
    assert all(b < a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 1e-3


def test_stochastic_points():
    q = scalar(2)
    rep = check_stochastic(s_matrix(2, 2, 2, q, qpow(q, -2) / 2))
    assert rep["sum_to_one"] and rep["nonnegative"]
    q = scalar("1/2")
    rep = check_stochastic(s_matrix(1, 1, 2, q, 4 * qpow(q, -1)))
    assert rep["sum_to_one"] and rep["nonnegative"]
    # the q-Hahn point lies outside the proven range but is still stochastic
    rep = check_stochastic(s_matrix(2, 2, 3, q, qpow(q, -1)))
    assert rep["sum_to_one"] and rep["nonnegative"]


def test_inversion_symmetry():
    assert inversion_symmetry_check(1, 1, "3/2", "1/5")["status"] == "pass"
    assert inversion_symmetry_check(2, 2, "2/7", "3")["status"] == "pass"


def test_species_lumping_to_one_species():
    s2 = s_matrix(2, 1, 2, "1/3", "5/2")
    assert lump_species(s2, consecutive_groups(2, 2)) == s_matrix(1, 1, 2, "1/3", "5/2")
    merged = lump_species(s2, [[1, 2], [3]])
    assert merged.column_sums() == [1] * len(merged.domain)


def test_lumping_failure_is_detected():
    s2 = s_matrix(2, 1, 1, "1/3", "5/2")
    # merging non-adjacent species 1 and 3 is not a lumpable pattern here
    with pytest.raises(AssertionError):
        lump_species(s2, [[1, 3], [2]])


def test_single_species_weights():
    assert bp_cp_weight(0, 0, 0, 0, "1/2", "1/3", "1/4") == 1
    for l, m in ((1, 2), (2, 2), (2, 1)):
        assert bp_cp_match(l, m, "1/2", "1/3")["status"] == "pass"


def test_continued_matrix_branches():
    assert continued_is_stochastic(2, "1/2", 0, 3, 6)
    assert continued_is_stochastic(2, 1, "1/2", "1/3", 6)
    assert continued_predicted_stochastic(2, 1, "1/2", "1/3")
    assert not continued_is_stochastic(2, 2, "1/3", "1/2", 10)
    with pytest.raises(SingularValueError):
        continued_is_stochastic(2, 1, "1/2", 2, 6)


def test_integrity_error_is_an_assertion():
    assert issubclass(IntegrityError, AssertionError)
    assert vacuum(2, 3) == (0, 0, 3)
