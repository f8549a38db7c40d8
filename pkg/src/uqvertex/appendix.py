"""Worked n = 1 examples rebuilt from the general constructions and compared with
closed-form reference expressions.

Reference expressions are transcribed as rational functions of (q, z) or (q, alpha)
with z = -alpha q^4.  Labels use the local basis order (|10>, |01>) and
(|20>, |11>, |02>).
"""

from __future__ import annotations


from .fock import LocalOperator, embed, kron, swap, tensor_basis
from .qarith import ONE, ZERO, Scalar, scalar
from .vertex import krl_fuse, projector, r_matrix_l1, s_matrix

DEFAULT_POINTS_QZ = (("2/3", "5/7"), ("3", "1/2"), ("-1/2", "7/3"))
DEFAULT_POINTS_QA = (("2/3", "1/5"), ("3", "2/7"), ("1/2", "5/3"))

TWO, ELEVEN, ZERO_TWO = (2, 0), (1, 1), (0, 2)


def _dense(op: LocalOperator) -> list[list[Scalar]]:
    return [[op.entry(o, i) for i in op.domain.labels] for o in op.codomain.labels]


def reference_r11(q, z) -> list[list[Scalar]]:
    d = z - q * q
    return [[ONE, ZERO, ZERO, ZERO],
            [ZERO, q * (z - 1) / d, z * (1 - q * q) / d, ZERO],
            [ZERO, (1 - q * q) / d, q * (z - 1) / d, ZERO],
            [ZERO, ZERO, ZERO, ONE]]


def reference_projector(q) -> list[list[Scalar]]:
    d = q * q + 1
    return [[ONE, ZERO, ZERO, ZERO],
            [ZERO, q * q / d, q / d, ZERO],
            [ZERO, q / d, 1 / d, ZERO],
            [ZERO, ZERO, ZERO, ONE]]


def reference_outer_factor(q, z) -> list[list[Scalar]]:
    """The displayed R_13(zq) factor of the 8 x 8 product."""
    a, b, c = (1 - q * z) / (q - z), (q * q - 1) * z / (q * q - q * z), (q * q - 1) / (q - z)
    m = [[ZERO] * 8 for _ in range(8)]
    for i in (0, 2, 5, 7):
        m[i][i] = ONE
    m[1][1] = m[3][3] = m[4][4] = m[6][6] = a
    m[1][4] = m[3][6] = b
    m[4][1] = m[6][3] = c
    return m


def reference_fused_8x8(q, z) -> list[list[Scalar]]:
    d, e = (q * q + 1) * (q**3 - z), q**3 - z
    m = [[ZERO] * 8 for _ in range(8)]
    m[0][0] = m[7][7] = ONE
    m[1][1] = m[5][5] = q**3 * (q - z) / d
    m[1][2] = m[2][1] = m[5][6] = m[6][5] = q * q * (q - z) / d
    m[2][2] = m[6][6] = q * (q - z) / d
    m[1][4] = m[3][5] = q * (q * q - 1) * z / e
    m[2][4] = m[3][6] = z * (q * q - 1) / e
    m[3][3] = m[4][4] = q * (1 - q * z) / e
    m[4][1] = m[5][3] = (q * q - 1) * q / e
    m[4][2] = m[6][3] = (q * q - 1) / e
    return m


def reference_column_l1_m2(q, z) -> dict:
    """R(z)|10>|11> on V_1 (x) V_2."""
    return {((1, 0), (1, 1)): q * (q - z) / (q**3 - z), ((0, 1), (2, 0)): (q * q - 1) / (q**3 - z)}


def _diag_poly(q, a):
    z = -a * q**4
    return z, q**6 * z - 2 * q**4 * z + q**4 + q * q * z * z - 2 * q * q * z + z


def reference_r22(q, a, marked=None) -> dict:
    """R(z) on V_2 (x) V_2 as {input: {output: value}}; ``marked`` overrides the q^2 factor."""
    marked = q * q if marked is None else marked
    z, poly = _diag_poly(q, a)
    d1, d2 = 1 + a, (1 + a * q * q) * (1 + a)
    A, B, C = TWO, ELEVEN, ZERO_TWO
    return {
        (C, C): {(C, C): ONE},
        (A, A): {(A, A): ONE},
        (C, B): {(C, B): (1 + a * q**4) / (q * q * d1), (B, C): (1 - q**4) * a / d1},
        (C, A): {(C, A): (1 + a * q**4) * (1 + a * q**6) / (q**4 * d2),
                 (B, B): (1 + q * q) * (1 - q**4) * (1 + a * q**4) * a / (q * d2),
                 (A, C): (1 - q * q) * (1 - q**4) * marked * a * a / d2},
        (B, A): {(A, B): a * (1 - q**4) / d1, (B, A): (1 + a * q**4) / (q * q * d1)},
        (B, B): {(C, A): -(1 - q * q) * (1 + a * q**4) / (q**5 * d2),
                 (B, B): poly / ((q * q * (1 + a * q * q)) * (q**4 * (1 + a))),
                 (A, C): (1 - q * q) * (1 + a * q**4) * a / (q * d2)},
        (B, C): {(B, C): q * q * (1 + a * q**4) / (q**4 * d1), (C, B): -(1 - q**4) / (q**4 * d1)},
        (A, C): {(A, C): (1 + a * q**4) * (1 + a * q**6) / (q**4 * d2),
                 (B, B): -(1 + q * q) * (1 - q**4) * (1 + a * q**4) / (q**5 * d2),
                 (C, A): (1 - q * q) * (1 - q**4) / (q**6 * d2)},
        (A, B): {(A, B): (1 + a * q**4) / (q * q * d1), (B, A): -(1 - q**4) / (q**4 * d1)},
    }


def reference_s22(q, a, diagonal_power: int = 5) -> dict:
    """S(z) on V_2 (x) V_2; the (11,11) diagonal denominator carries q^{diagonal_power}."""
    z, poly = _diag_poly(q, a)
    d1, d2 = 1 + a, (1 + a * q * q) * (1 + a)
    A, B, C = TWO, ELEVEN, ZERO_TWO
    return {
        (C, C): {(C, C): ONE},
        (A, A): {(A, A): ONE},
        (C, B): {(C, B): (1 + a * q**4) / d1, (B, C): (1 - q**4) * a / d1},
        (C, A): {(C, A): (1 + a * q**4) * (1 + a * q**6) / d2,
                 (B, B): (1 + q * q) * (1 - q**4) * (1 + a * q**4) * a / d2,
                 (A, C): (q * q - q**4) * (1 - q**4) * a * a / d2},
        (B, A): {(A, B): a * (1 - q**4) / d1, (B, A): (1 + a * q**4) / d1},
        (B, B): {(C, A): (1 - q**-2) * (1 + a * q**4) / d2,
                 (B, B): poly / (q**diagonal_power * d2),
                 (A, C): (1 - q * q) * (q**-2 + a * q * q) * a / d2},
        (B, C): {(B, C): (1 + a * q**4) / (q**4 * d1), (C, B): (1 - q**-4) / d1},
        (A, C): {(A, C): (q**-4 + a) * (q**-4 + a * q * q) / d2,
                 (B, B): (1 + q * q) * (1 - q**-4) * (q**-4 + a) / d2,
                 (C, A): (1 - q**-2) * (1 - q**-4) / d2},
        (A, B): {(A, B): (q**-4 + a) / d1, (B, A): (1 - q**-4) / d1},
    }


def _mismatches_dense(got, ref, labels) -> list:
    return [{"out": str(labels[r]), "in": str(labels[c]), "computed": str(got[r][c]), "reference": str(ref[r][c])}
            for r in range(len(ref)) for c in range(len(ref)) if got[r][c] != ref[r][c]]


def _mismatches_lists(op: LocalOperator, ref: dict) -> list:
    out = []
    for inp, col in ref.items():
        got = op.column(inp)
        for o in sorted(set(got) | set(col)):
            g, e = got.get(o, ZERO), col.get(o, ZERO)
            if g != e:
                out.append({"in": str(inp), "out": str(o), "computed": str(g), "reference": str(e)})
    return out


def _matmul(a, b):
    size = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(size)), ZERO) for j in range(size)] for i in range(size)]


def _rank(rows) -> int:
    m = [list(r) for r in rows]
    rank, col, size = 0, 0, len(m[0]) if m else 0
    while rank < len(m) and col < size:
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
        col += 1
    return rank


def residue_product(q, braid: bool) -> list[list[Scalar]]:
    """lim_{z -> q^2} (z - q^2)(Rc (x) Id)(Id (x) X(z))(Rc (x) Id), X = R or P R.

    (z - q^2) R(z) is polynomial in z, so the limit is an evaluation.
    """
    q = scalar(q)
    z = q * q
    x = [[ZERO] * 4 for _ in range(4)]
    x[1][1] = x[2][2] = q * (z - 1)
    x[1][2] = z * (1 - q * q)
    x[2][1] = 1 - q * q
    if braid:
        x[1], x[2] = x[2], x[1]
    basis = tensor_basis(1, (1, 1))
    x_op = LocalOperator.from_function(basis, basis, lambda lab: {o: x[basis.index[o]][basis.index[lab]]
                                                                  for o in basis.labels})
    ident = LocalOperator.identity(tensor_basis(1, (1,)))
    rc = projector(1, 2, q)
    prod = kron(rc, ident) @ kron(ident, x_op) @ kron(rc, ident)
    return _dense(prod)


def run_appendix(points_qz=DEFAULT_POINTS_QZ, points_qa=DEFAULT_POINTS_QA) -> dict:
    items: dict[str, dict] = {}

    def add(name, mismatches, note=None):
        entry = items.setdefault(name, {"status": "pass", "mismatches": []})
        if mismatches:
            entry["status"] = "fail"
            entry["mismatches"].extend(mismatches[:5])
        if note:
            entry["note"] = note

    b4 = tensor_basis(1, (1, 1))
    b8 = tensor_basis(1, (1, 1, 1))
    for qs, zs in points_qz:
        q, z = scalar(qs), scalar(zs)
        add("r_4x4", _mismatches_dense(_dense(r_matrix_l1(1, 1, q, z)), reference_r11(q, z), b4.labels))
        rcheck = swap(1, 1, 1) @ r_matrix_l1(1, 1, q, 1 / (q * q))
        add("rcheck_q^-2", _mismatches_dense(_dense(rcheck), reference_projector(q), b4.labels))
        add("rcheck_idempotent", [] if rcheck @ rcheck == rcheck else [{"point": [qs]}])
        add("rcheck_is_symmetric_projector", [] if rcheck == projector(1, 2, q) else [{"point": [qs]}])
        r13 = embed(r_matrix_l1(1, 1, q, z * q), b8, (0, 2))
        r12 = embed(r_matrix_l1(1, 1, q, z / q), b8, (0, 1))
        r13b = embed(r_matrix_l1(1, 1, q, z / q), b8, (0, 2))
        r12b = embed(r_matrix_l1(1, 1, q, z * q), b8, (0, 1))
        pplus = kron(LocalOperator.identity(tensor_basis(1, (1,))), projector(1, 2, q))
        fused = pplus @ r13 @ r12 @ pplus
        add("fused_8x8", _mismatches_dense(_dense(fused), reference_fused_8x8(q, z), b8.labels))
        chain = [pplus @ r13b @ r12b @ pplus, pplus @ r13b @ r12b, fused, r13 @ r12 @ pplus]
        add("projector_equalities", [] if all(c == chain[0] for c in chain) else [{"point": [qs, zs]}])
        outer = _mismatches_dense(_dense(r13), reference_outer_factor(q, z), b8.labels)
        outer_scaled = reference_outer_factor(q, z)
        similar = all(
            outer_scaled[r][c] * outer_scaled[c][r] == _dense(r13)[r][c] * _dense(r13)[c][r]
            for r in range(8) for c in range(8))
        items.setdefault("outer_factor_display", {"status": "info", "matches_exactly": True,
                                                   "diagonal_similarity": True})
        if outer:
            items["outer_factor_display"]["matches_exactly"] = False
        if not similar:
            items["outer_factor_display"]["diagonal_similarity"] = False
        col = r_matrix_l1(1, 2, q, z).column(((1, 0), (1, 1)))
        ref = reference_column_l1_m2(q, z)
        add("l1_m2_column", [] if col == ref else [{"computed": str(col), "reference": str(ref)}])
        rank_ok = all(_rank(residue_product(q, braid)) == 2 for braid in (False, True))
        add("residue_rank_2", [] if rank_ok else [{"point": [qs]}])
        for braid in (False, True):
            m = residue_product(q, braid)
            c = (1 - q**6) / (1 + q * q)
            sq = _matmul(m, m)
            ok = all(sq[i][j] == c * m[i][j] for i in range(8) for j in range(8))
            key = "residue_square_braid_form" if braid else "residue_square_as_displayed"
            items.setdefault(key, {"status": "pass" if braid else "info", "holds": True})
            if not ok:
                items[key]["holds"] = False
                if braid:
                    items[key]["status"] = "fail"
    derived_marked = []
    for qs, as_ in points_qa:
        q, a = scalar(qs), scalar(as_)
        z = -a * q**4
        r22 = krl_fuse(1, 2, 2, q, z)
        s22 = s_matrix(1, 2, 2, q, z)
        add("r_2x2_action", _mismatches_lists(r22, reference_r22(q, a)))
        add("s_2x2_action", _mismatches_lists(s22, reference_s22(q, a, diagonal_power=6)),
            "the (11,11) -> (11,11) entry is compared with denominator q^6 (q^5 fails the column sum)")
        printed = _mismatches_lists(s22, reference_s22(q, a, diagonal_power=5))
        items.setdefault("s_2x2_as_displayed", {"status": "info", "mismatching_entries": set()})
        for mm in printed:
            items["s_2x2_as_displayed"]["mismatching_entries"].add((mm["in"], mm["out"]))
        # the marked coefficient from fusion and from the column sum of the displayed S entries
        scale = (1 - q * q) * (1 - q**4) * a * a / ((1 + a * q * q) * (1 + a))
        from_fusion = r22.entry((TWO, ZERO_TWO), (ZERO_TWO, TWO)) / scale
        ref_s = reference_s22(q, a)[(ZERO_TWO, TWO)]
        from_sum = (1 - ref_s[(ZERO_TWO, TWO)] - ref_s[(ELEVEN, ELEVEN)]) / scale
        derived_marked.append({"q": qs, "alpha": as_, "from_fusion": str(from_fusion),
                               "from_column_sum": str(from_sum), "q_squared": str(q * q)})
    marked_ok = all(d["from_fusion"] == d["q_squared"] == d["from_column_sum"] for d in derived_marked)
    items["marked_coefficient"] = {"status": "pass" if marked_ok else "fail", "value": "q^2" if marked_ok else None,
                                   "evidence": derived_marked}
    if "s_2x2_as_displayed" in items:
        items["s_2x2_as_displayed"]["mismatching_entries"] = sorted(items["s_2x2_as_displayed"]["mismatching_entries"])
    failing = [k for k, v in items.items() if v.get("status") == "fail"]
    return {"check": "appendix", "status": "pass" if not failing else "fail", "failing": failing,
            "items": dict(sorted(items.items()))}
