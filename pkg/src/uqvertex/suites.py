"""Named verification suites.

Each suite returns a JSON-ready report ``{"suite", "status", "items", "failing"}``
whose items are sorted by name.  Parameter errors (singular points, bad
arguments) propagate as exceptions so the caller can map them to exit code 2.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Sequence

from .duality import verify_major
from .fock import ConservationError, LocalOperator, assert_conserving, embed, kron, tensor_basis
from .qarith import Scalar, scalar
from .qhahn import QHahnParams, direct_duality_check, identity_suite, lumping_check
from .repalg import all_generators
from .vertex import (
    LumpabilityError,
    alt_intertwining_defects,
    bp_cp_match,
    check_stochastic,
    consecutive_groups,
    continued_is_stochastic,
    continued_predicted_stochastic,
    intertwining_defects,
    inversion_symmetry_check,
    krl_fuse,
    lump_species,
    projector,
    r_matrix,
    r_matrix_m1,
    s_from_r,
    s_matrix,
    stochastic_fuse,
    stochastic_range_points,
    transpose_defect,
    unit_defect,
    yang_baxter_defect,
)

SPIN_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
# (q, z1, z2, z3): generic rational points away from every pole used below
GENERIC_POINTS = (("1/3", "1", "3/7", "11/5"), ("5/2", "2", "-1/3", "7/4"), ("-2/3", "3", "5/11", "-4/9"))
QHAHN_POINTS = (("1/2", "1/3", "1/5"), ("2/3", "3/4", "1/7"), ("-1/3", "1/2", "2/5"))
ALPHA_POINTS = (("1/2", "1/3"), ("3", "2/7"), ("-2/5", "5/3"))
GRID_Q = ("1/3", "1/2", "2/3", "3/2", "3")


def _max_abs(op: LocalOperator) -> Scalar:
    return max((abs(v) for _, _, v in op.items()), default=scalar(0))


def _item(name: str, ok: bool, **extra) -> dict:
    return {"name": name, "status": "pass" if ok else "fail", **{k: _jsonable(v) for k, v in extra.items()}}


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return str(v)


def _report(suite: str, items: list[dict], **extra) -> dict:
    items = sorted(items, key=lambda it: it["name"])
    failing = [it["name"] for it in items if it["status"] != "pass"]
    return {"suite": suite, "status": "pass" if not failing else "fail", "failing": failing,
            "count": len(items), "items": items, **extra}


def _from_report(name: str, rep: dict) -> dict:
    extra = {k: v for k, v in rep.items() if k not in ("status",)}
    return _item(name, rep["status"] == "pass", **extra)


def _pairs(l: int | None, ms: Sequence[int] | None) -> list[tuple[int, int]]:
    if l is None and not ms:
        return list(SPIN_PAIRS)
    ls = [l] if l is not None else [1, 2]
    return [(a, b) for a in ls for b in (ms or [1, 2])]


def _ns(n: int | None) -> list[int]:
    return [n] if n is not None else [1, 2]


def _points(q, zs) -> list[tuple]:
    """Explicit (q, z...) from flags, else the generic defaults."""
    if q is None and zs is None:
        return [tuple(p) for p in GENERIC_POINTS]
    base = list(GENERIC_POINTS[0])
    if q is not None:
        base[0] = str(q)
    if zs is not None:
        zs = list(zs)
        base[1:1 + len(zs)] = zs
    return [tuple(base)]


# vertex-model suites


def suite_ybe(n=None, l=None, m=None, q=None, z=None, **_) -> dict:
    """S12 S13 S23 = S23 S13 S12 on V_a (x) V_b (x) V_c."""
    items = []
    levels_list = [(a, b, c) for a, b, c in product((1, 2), repeat=3)] if l is None and not m else \
        [(l or 1, mm, mm2) for mm in (m or [1, 2]) for mm2 in (m or [1, 2])]
    for nn in _ns(n):
        for levels in levels_list:
            for k, pt in enumerate(_points(q, z)):
                d = yang_baxter_defect(nn, levels, pt[0], pt[1:4])
                items.append(_item(f"n{nn}-levels{''.join(map(str, levels))}-p{k}", d.nnz() == 0,
                                   max_abs_residual=_max_abs(d)))
    return _report("ybe", items)


def suite_trans(n=None, l=None, m=None, q=None, z=None, **_) -> dict:
    """Transpose relation, unit normalization and particle conservation of R and S."""
    items = []
    for nn in _ns(n):
        for a, b in _pairs(l, m):
            for k, pt in enumerate(_points(q, z)):
                qq, zz = scalar(pt[0]), scalar(pt[1]) / scalar(pt[2])
                r = r_matrix(nn, a, b, qq, zz)
                s = s_matrix(nn, a, b, qq, zz)
                tag = f"n{nn}-l{a}-m{b}-p{k}"
                t = transpose_defect(r, qq)
                items.append(_item(f"transpose-{tag}", t.nnz() == 0, max_abs_residual=_max_abs(t)))
                items.append(_item(f"unit-{tag}", unit_defect(r) == 0 and unit_defect(s) == 0))
                try:
                    assert_conserving(r)
                    assert_conserving(s)
                    items.append(_item(f"conservation-{tag}", True))
                except ConservationError as exc:
                    items.append(_item(f"conservation-{tag}", False, witness=str(exc)))
    return _report("trans", items)


def suite_inter(n=None, l=None, m=None, q=None, z=None, **_) -> dict:
    """P R Delta(u) = Delta(u) P R for every generator."""
    items = []
    for nn in _ns(n):
        for a, b in _pairs(l, m):
            for k, pt in enumerate(_points(q, z)):
                qq, z1, z2 = scalar(pt[0]), scalar(pt[1]), scalar(pt[2])
                bad = intertwining_defects(r_matrix(nn, a, b, qq, z1 / z2), qq, z1, z2)
                items.append(_item(f"n{nn}-l{a}-m{b}-p{k}", not bad, failing_generators=bad))
    return _report("inter", items)


def stronger_chain(n: int, k: int, q, z) -> list[LocalOperator]:
    """The four products P R13 R12 P, P R13 R12, ... on V_k (x) V_1 (x) V_1."""
    q, z = scalar(q), scalar(z)
    basis = tensor_basis(n, (k, 1, 1))
    up13 = embed(r_matrix_m1(n, k, q, z * q), basis, (0, 2))
    dn12 = embed(r_matrix_m1(n, k, q, z / q), basis, (0, 1))
    dn13 = embed(r_matrix_m1(n, k, q, z / q), basis, (0, 2))
    up12 = embed(r_matrix_m1(n, k, q, z * q), basis, (0, 1))
    pplus = kron(LocalOperator.identity(tensor_basis(n, (k,))), projector(n, 2, q))
    return [pplus @ dn13 @ up12 @ pplus, pplus @ dn13 @ up12, pplus @ up13 @ dn12 @ pplus, up13 @ dn12 @ pplus]


FUSION_TRIPLES = ((2, 2, 1), (2, 1, 2), (2, 2, 2))


def suite_fusion_equiv(n=None, l=None, m=None, q=None, z=None, **_) -> dict:
    """Gauge-conjugated KRL fusion equals stochastic fusion; projector equalities."""
    items = []
    triples = FUSION_TRIPLES if (n is None and l is None and not m) else \
        [(l or 2, mm, nn) for mm in (m or [1, 2]) for nn in _ns(n)]
    for a, b, nn in triples:
        for k, pt in enumerate(_points(q, z)):
            qq, zz = scalar(pt[0]), scalar(pt[1]) / scalar(pt[2])
            gauged = s_from_r(krl_fuse(nn, a, b, qq, zz), qq)
            dev = gauged.max_abs_diff(stochastic_fuse(nn, a, b, qq, zz))
            items.append(_item(f"krl-vs-stochastic-l{a}-m{b}-n{nn}-p{k}", dev == 0, max_abs_residual=dev))
    for nn in _ns(n):
        for kk in (1, 2):
            for k, pt in enumerate(_points(q, z)):
                chain = stronger_chain(nn, kk, pt[0], scalar(pt[1]) / scalar(pt[2]))
                dev = max(c.max_abs_diff(chain[0]) for c in chain[1:])
                items.append(_item(f"projector-equalities-n{nn}-k{kk}-p{k}", dev == 0, max_abs_residual=dev))
    return _report("fusion-equiv", items)


def _classification_points(n: int) -> dict[str, list[tuple]]:
    """Ten (q, mu, z) points on each branch of the free-mu classification."""
    zero = [(q, "0", z) for q, z in zip(("1/2", "2", "3/4", "-1/2", "5/3", "1/3", "4", "-3/2", "2/5", "7/3"),
                                        ("1/3", "2", "-1/5", "3", "1/7", "5/2", "-2", "9", "1/11", "4/3"))]
    unit_in = [("1", "2", "3"), ("1", "3", "7/2"), ("1", "1/2", "1/3"), ("1", "1/3", "1/5"), ("1", "3/2", "2"),
               ("-1", "-2", "5/2"), ("-1", "-3", "4"), ("-1", "-1/2", "1/4"), ("1", "5/4", "3/2"), ("-1", "-4/5", "1/2")]
    unit_out = [("1", "2", "1"), ("1", "2", "3/2"), ("1", "1/2", "1"), ("1", "3", "-1"), ("1", "1/3", "1/2"),
                ("-1", "-2", "1"), ("-1", "2", "3"), ("-1", "-1/2", "3/2"), ("1", "5/4", "1"), ("1", "-2", "3")]
    generic = [("1/2", "1/3", "1/5"), ("2", "1/2", "3"), ("1/3", "2", "1/7"), ("3/2", "1/4", "1/2"),
               ("2/3", "3/4", "1/9"), ("-1/2", "1/3", "1/5"), ("3", "1/5", "2/7"), ("1/4", "1/2", "3"),
               ("5/4", "4/5", "1/3"), ("-2", "1/2", "1/9")]
    return {"mu-zero": zero, "unit-modulus-inside": unit_in, "unit-modulus-outside": unit_out,
            "generic-q": generic}


def suite_stochastic(n=None, l=None, m=None, q=None, z=None, bound=None, **_) -> dict:
    """Sum-to-one everywhere, nonnegativity on the stochastic range, free-mu classification."""
    items = []
    qs = [str(q)] if q is not None else list(GRID_Q)
    for nn in _ns(n):
        for a, b in _pairs(l, m):
            for qq in qs:
                for zz in stochastic_range_points(a, b, qq, 5):
                    rep = check_stochastic(s_matrix(nn, a, b, qq, zz))
                    items.append(_item(f"grid-n{nn}-l{a}-m{b}-q{qq}-z{zz}", rep["sum_to_one"] and rep["nonnegative"],
                                       witness=rep["witness"]))
            for k, pt in enumerate(_points(None, None)):
                rep = check_stochastic(s_matrix(nn, a, b, pt[0], scalar(pt[1]) / scalar(pt[2])))
                items.append(_item(f"sum-n{nn}-l{a}-m{b}-p{k}", rep["sum_to_one"]))
    cap = bound or 4
    for nn in ([n] if n is not None and n >= 2 else [2]):
        for branch, pts in _classification_points(nn).items():
            for k, (qq, mu, zz) in enumerate(pts):
                predicted = continued_predicted_stochastic(nn, qq, mu, zz)
                observed = continued_is_stochastic(nn, qq, mu, zz, cap)
                items.append(_item(f"classification-n{nn}-{branch}-{k}", predicted == observed,
                                   predicted=predicted, observed=observed, q=qq, mu=mu, z=zz))
    return _report("stochastic", items)


def suite_lump(q=None, z=None, **_) -> dict:
    """Species merging of S(z) and of the q-Hahn dynamics."""
    items = []
    for nn, a, b in ((2, 1, 1), (2, 1, 2), (2, 2, 1), (2, 2, 2), (3, 1, 1), (3, 1, 2)):
        for k, pt in enumerate(_points(q, z)):
            qq, zz = scalar(pt[0]), scalar(pt[1]) / scalar(pt[2])
            high = s_matrix(nn, a, b, qq, zz)
            low = s_matrix(nn - 1, a, b, qq, zz)
            for r in range(1, nn + 1):
                name = f"vertex-n{nn}-to-{nn - 1}-merge{r}{r + 1}-l{a}-m{b}-p{k}"
                try:
                    dev = lump_species(high, consecutive_groups(nn, r)).max_abs_diff(low)
                    items.append(_item(name, dev == 0, max_abs_residual=dev))
                except LumpabilityError as exc:
                    items.append(_item(name, False, witness=str(exc)))
    for k, (qq, lam, mu) in enumerate(QHAHN_POINTS):
        params2 = QHahnParams.make(2, qq, lam, mu)
        params3 = QHahnParams.make(3, qq, lam, mu)
        for totals in ((1, 1), (2, 1), (1, 2)):
            items.append(_from_report(f"qhahn-n2-to-1-totals{''.join(map(str, totals))}-p{k}",
                                      lumping_check(params2, 3, totals, 1)))
        for totals in ((1, 1, 1), (0, 1, 1), (1, 0, 2)):
            items.append(_from_report(f"qhahn-n3-to-2-totals{''.join(map(str, totals))}-p{k}",
                                      lumping_check(params3, 3, totals, 2)))
    return _report("lump", items)


MAJOR_POINTS = (("1/3", "2/7", ("1", "3/5", "7/2")), ("5/2", "-3/4", ("2", "1/3", "-5")),
                ("-2/3", "9/5", ("1/2", "4", "-2/7")))


def _major_spin_sets(size: int | None, ms: Sequence[int] | None) -> list[tuple[int, ...]]:
    if ms:
        if size is not None and len(ms) != size:
            raise ValueError("-m must list one spin per site (-L)")
        return [tuple(ms)]
    sizes = [size] if size is not None else [1, 2, 3]
    return [s for L in sizes for s in product((1, 2), repeat=L)]


def suite_major(n=None, l=None, m=None, q=None, z=None, L=None, w=None, full=False, **_) -> dict:
    """T^T D+(u) = D+(u) T_rev for all generators and u_0."""
    items = []
    spin_sets = _major_spin_sets(L, m)
    if q is not None or z is not None or w is not None:
        base_q, base_z, base_w = MAJOR_POINTS[0]
        points = [(str(q) if q is not None else base_q, str(z[0]) if z else base_z,
                   tuple(w) if w else base_w)]
    else:
        points = list(MAJOR_POINTS)
    for nn in _ns(n):
        for ll in ([l] if l is not None else [1, 2]):
            for spins in spin_sets:
                if not full and nn == 2 and ll == 2 and len(spins) == 3 and sum(spins) > 4:
                    continue  # the heaviest n = 2 cases are run by --full
                for k, (qq, zz, ws) in enumerate(points):
                    specs = tuple(ws[: len(spins)])
                    if len(specs) < len(spins):
                        raise ValueError("-w must give one spectral parameter per site")
                    for u in ["u0"] + all_generators(nn):
                        rep = verify_major(nn, ll, zz, spins, specs, qq, u)
                        uname = u if isinstance(u, str) else f"{u[0]}{u[1]}"
                        items.append(_item(f"n{nn}-l{ll}-spins{''.join(map(str, spins))}-{uname}-p{k}",
                                           rep["status"] == "pass", max_abs_residual=rep["max_abs_residual"]))
    return _report("major", items)


def suite_inversion(n=None, m=None, q=None, z=None, **_) -> dict:
    """Inversion symmetry of S and the charge-reversed intertwining."""
    items = []
    for nn in _ns(n):
        for mm in (m or [1, 2]):
            for k, pt in enumerate(_points(q, z)):
                qq, zz = scalar(pt[0]), scalar(pt[1]) / scalar(pt[2])
                items.append(_from_report(f"display-n{nn}-m{mm}-p{k}", inversion_symmetry_check(nn, mm, qq, zz)))
                for ll in (1, 2):
                    bad = alt_intertwining_defects(nn, ll, mm, qq, pt[1], pt[2])
                    items.append(_item(f"reversed-intertwining-n{nn}-l{ll}-m{mm}-p{k}", not bad,
                                       failing_generators=bad))
    return _report("inversion", items)


def suite_bpcp(l=None, m=None, q=None, alpha=None, **_) -> dict:
    """Single-species specialization against the explicit and fused weights."""
    items = []
    points = [(str(q), str(alpha))] if q is not None and alpha is not None else list(ALPHA_POINTS)
    for a, b in _pairs(l, m):
        for k, (qq, aa) in enumerate(points):
            items.append(_from_report(f"l{a}-m{b}-p{k}", bp_cp_match(a, b, qq, aa)))
    return _report("bpcp", items)


# q-Hahn suites


def _totals(n: int, most: int) -> list[tuple[int, ...]]:
    return [t for t in product(range(most + 1), repeat=n) if 0 < sum(t) <= most]


def suite_qhahn_direct(n=None, q=None, lam=None, mu=None, L=None, bound=None, **_) -> dict:
    """P^T D_0 = D_0 P_rev and L^T D_0 = D_0 L_rev on all sector pairs."""
    items = []
    size = L or 3
    most = bound or 3
    points = [(str(q), str(lam), str(mu))] if None not in (q, lam, mu) else list(QHAHN_POINTS)
    for nn in _ns(n):
        sectors = _totals(nn, most)
        for k, (qq, ll, mm) in enumerate(points):
            params = QHahnParams.make(nn, qq, ll, mm)
            for eta_t, xi_t in product(sectors, repeat=2):
                rep = direct_duality_check(params, size, eta_t, xi_t)
                name = f"n{nn}-L{size}-eta{''.join(map(str, eta_t))}-xi{''.join(map(str, xi_t))}-p{k}"
                items.append(_item(name, rep["status"] == "pass",
                                   discrete_residual=rep["discrete_residual"],
                                   continuous_residual=rep["continuous_residual"]))
    return _report("qhahn-direct", items)


def suite_identities(bound=None, **_) -> dict:
    """q-binomial, Vandermonde-type and rate-symmetry identities up to an occupation bound."""
    rep = identity_suite(bound or 4)
    items = [_item(name, rec["failures"] == 0, cases=rec["cases"],
                   witnesses=[w["witness"] for w in rep["witnesses"] if w["identity"] == name][:3])
             for name, rec in rep["by_identity"].items()]
    return _report("identities", items,
                   general_xi_vandermonde_counterexample=_jsonable(rep.get("general_xi_vandermonde_counterexample")))


SUITES: dict[str, Callable[..., dict]] = {
    "ybe": suite_ybe,
    "trans": suite_trans,
    "inter": suite_inter,
    "fusion-equiv": suite_fusion_equiv,
    "stochastic": suite_stochastic,
    "lump": suite_lump,
    "major": suite_major,
    "qhahn-direct": suite_qhahn_direct,
    "identities": suite_identities,
    "inversion": suite_inversion,
    "bpcp": suite_bpcp,
}


def run_suite(name: str, **params) -> dict:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    return SUITES[name](**params)
