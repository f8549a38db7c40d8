"""R- and S-matrices of the U_q(A_n^(1)) vertex model.

Conventions: R(z) acts on V_l (x) V_m with z = z1/z2 the ratio of the spectral
parameters of the two factors; S = Ga~^{-1} R Ga has columns summing to 1.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

from .fock import (
    LocalOperator,
    TensorBasis,
    b_matrix,
    charge_reversal_matrix,
    embed,
    enumerate_compositions,
    gauge_matrix,
    gauge_tilde_matrix,
    kron,
    partial,
    reverse,
    swap,
    tensor_basis,
    unit,
    vacuum,
)
from .qarith import ONE, ZERO, Scalar, SingularValueError, qpow, scalar
from .repalg import ground_state_transform, u0_vacuum_column


class IntegrityError(AssertionError):
    """A structural identity that must hold by construction failed."""


@dataclass(frozen=True)
class Spectral:
    """A spectral parameter: a finite rational or the limit point infinity."""

    value: Scalar | None  # None means infinity

    @classmethod
    def parse(cls, x) -> "Spectral":
        if isinstance(x, Spectral):
            return x
        if isinstance(x, str) and x.strip().lower() in ("inf", "infinity", "oo"):
            return cls(None)
        return cls(scalar(x))

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @property
    def is_zero(self) -> bool:
        return self.value is not None and self.value == 0

    def shifted(self, factor) -> "Spectral":
        return self if self.value is None else Spectral(self.value * scalar(factor))

    def divided(self, w) -> "Spectral":
        """z / w, with w possibly infinite (giving zero)."""
        w = Spectral.parse(w)
        if w.is_infinite:
            if self.is_infinite:
                raise ValueError("inf/inf is undefined")
            return Spectral(ZERO)
        if w.value == 0:
            raise SingularValueError("division by a zero spectral parameter")
        return self if self.is_infinite else Spectral(self.value / w.value)

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


INF = Spectral(None)


def _z(z) -> Spectral:
    return Spectral.parse(z)


def _moved(comp: tuple, plus: int, minus: int) -> tuple | None:
    """comp + e_plus - e_minus (1-based species), or None if negative."""
    new = list(comp)
    new[plus - 1] += 1
    new[minus - 1] -= 1
    return None if new[minus - 1] < 0 else tuple(new)


# explicit l = 1 and m = 1 formulas


def r_matrix_l1(n: int, m: int, q, z) -> LocalOperator:
    """R(z) on V_1 (x) V_m from the closed-form entries."""
    q, zs = scalar(q), _z(z)
    if zs.is_infinite:
        raise ValueError("R(z) has no finite limit at z = inf; use s_matrix")
    z = zs.value
    den = q ** (m + 1) - z
    if den == 0:
        raise SingularValueError(f"R(z) on V_1 x V_{m} is singular at z = q^{m + 1}")
    basis = tensor_basis(n, (1, m))

    def column(label):
        eps, beta = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            delta = _moved(beta, j, k)
            if delta is None:
                continue
            if k == j:
                v = qpow(q, beta[k - 1] + 1) * (1 - qpow(q, m - 1 - 2 * delta[k - 1]) * z)
            elif k > j:
                v = -qpow(q, partial(beta, j + 1, k - 1)) * (1 - q ** (2 * beta[k - 1]))
            else:
                v = -qpow(q, m - partial(beta, k, j)) * z * (1 - q ** (2 * beta[k - 1]))
            out[(unit(n, k), delta)] = v / den
        return out

    return LocalOperator.from_function(basis, basis, column)


def r_matrix_m1(n: int, l: int, q, z) -> LocalOperator:
    """R(z) on V_l (x) V_1 from the closed-form entries."""
    q, zs = scalar(q), _z(z)
    if zs.is_infinite:
        raise ValueError("R(z) has no finite limit at z = inf; use s_matrix")
    z = zs.value
    den = q ** (l + 1) - z
    if den == 0:
        raise SingularValueError(f"R(z) on V_{l} x V_1 is singular at z = q^{l + 1}")
    basis = tensor_basis(n, (l, 1))

    def column(label):
        alpha, eps = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            gamma = _moved(alpha, j, k)
            if gamma is None:
                continue
            if k == j:
                v = qpow(q, alpha[k - 1] + 1) * (1 - qpow(q, l - 1 - 2 * alpha[k - 1]) * z)
            elif k > j:
                v = -qpow(q, l - partial(alpha, j, k)) * z * (1 - q ** (2 * alpha[k - 1]))
            else:
                v = -qpow(q, partial(alpha, k + 1, j - 1)) * (1 - q ** (2 * alpha[k - 1]))
            out[(gamma, unit(n, k))] = v / den
        return out

    return LocalOperator.from_function(basis, basis, column)


def s_from_r(r: LocalOperator, q, check: bool = True) -> LocalOperator:
    """Gauge transform S = Ga~^{-1} R Ga, asserting unit column sums."""
    s = gauge_tilde_matrix(r.codomain, q, inverse=True) @ r @ gauge_matrix(r.domain, q)
    if check:
        bad = [j for j, v in enumerate(s.column_sums()) if v != 1]
        if bad:
            raise IntegrityError(f"column {r.domain.labels[bad[0]]} of S does not sum to 1")
    return s


def r_from_s(s: LocalOperator, q) -> LocalOperator:
    return gauge_tilde_matrix(s.codomain, q) @ s @ gauge_matrix(s.domain, q, inverse=True)


def s_closed_form_l1(n: int, m: int, q, z) -> LocalOperator:
    """S(z) on V_1 (x) V_m written directly (finite z)."""
    q, z = scalar(q), _z(z).value
    den = q ** (m + 1) - z
    if den == 0:
        raise SingularValueError(f"S(z) on V_1 x V_{m} is singular at z = q^{m + 1}")
    basis = tensor_basis(n, (1, m))

    def column(label):
        eps, beta = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            delta = _moved(beta, j, k)
            if delta is None:
                continue
            if k == j:
                v = qpow(q, 2 * partial(beta, 1, k) - m + 1) * (1 - qpow(q, m - 1 - 2 * beta[k - 1]) * z)
            elif k > j:
                v = -qpow(q, 2 * partial(beta, 1, k - 1) - m + 1) * (1 - q ** (2 * beta[k - 1]))
            else:
                v = -qpow(q, 2 * partial(beta, 1, k - 1)) * z * (1 - q ** (2 * beta[k - 1]))
            out[(unit(n, k), delta)] = v / den
        return out

    return LocalOperator.from_function(basis, basis, column)


def s_closed_form_m1(n: int, l: int, q, z) -> LocalOperator:
    """S(z) on V_l (x) V_1 written directly (finite z)."""
    q, z = scalar(q), _z(z).value
    den = q ** (l + 1) - z
    if den == 0:
        raise SingularValueError(f"S(z) on V_{l} x V_1 is singular at z = q^{l + 1}")
    basis = tensor_basis(n, (l, 1))

    def column(label):
        alpha, eps = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            gamma = _moved(alpha, j, k)
            if gamma is None:
                continue
            if k == j:
                v = qpow(q, l - 2 * partial(alpha, 1, k - 1) + 1) * (1 - qpow(q, l - 1 - 2 * alpha[k - 1]) * z)
            elif k > j:
                v = -qpow(q, 2 * l - 2 * partial(alpha, 1, k)) * z * (1 - q ** (2 * alpha[k - 1]))
            else:
                v = -qpow(q, l - 2 * partial(alpha, 1, k) + 1) * (1 - q ** (2 * alpha[k - 1]))
            out[(gamma, unit(n, k))] = v / den
        return out

    return LocalOperator.from_function(basis, basis, column)


def s_limit_l1(n: int, m: int, q, at: str) -> LocalOperator:
    """S on V_1 (x) V_m at z = 0 (``at="zero"``) or z -> inf (``at="inf"``)."""
    q = scalar(q)
    basis = tensor_basis(n, (1, m))

    def column(label):
        eps, beta = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            delta = _moved(beta, j, k)
            if delta is None:
                continue
            below = partial(beta, 1, k - 1)
            if at == "inf":
                if k == j:
                    v = qpow(q, 2 * below)
                elif k > j:
                    continue
                else:
                    v = qpow(q, 2 * below) * (1 - q ** (2 * beta[k - 1]))
            else:
                if k == j:
                    v = qpow(q, 2 * partial(beta, 1, k) - 2 * m)
                elif k > j:
                    v = -qpow(q, 2 * below - 2 * m) * (1 - q ** (2 * beta[k - 1]))
                else:
                    continue
            out[(unit(n, k), delta)] = v
        return out

    return LocalOperator.from_function(basis, basis, column)


# fusion


def _site_sum(seq) -> tuple:
    return tuple(map(sum, zip(*seq)))


@lru_cache(maxsize=None)
def embedding(n: int, l: int, q: Scalar) -> LocalOperator:
    """The intertwiner I_l: V_l -> V_1^{(x) l} with I_l |Omega> = |Omega_1>^{(x) l}."""
    gr = ground_state_transform(n, (1,) * l, q)
    norm = u0_vacuum_column(n, l, q)
    dom, cod = tensor_basis(n, (l,)), tensor_basis(n, (1,) * l)
    groups = defaultdict(list)
    for seq in cod.labels:
        groups[_site_sum(seq)].append(seq)

    def column(label):
        return {seq: gr.entry(seq, seq) / norm[label] for seq in groups[label[0]]}

    return LocalOperator.from_function(dom, cod, column)


def inversion_count(seq) -> int:
    """Pairs r < s whose species satisfy seq_r > seq_s (species 1 < ... < n+1)."""
    idx = [c.index(1) for c in seq]
    return sum(1 for r in range(len(idx)) for s in range(r + 1, len(idx)) if idx[r] > idx[s])


@lru_cache(maxsize=None)
def split_matrix(n: int, l: int, q: Scalar) -> LocalOperator:
    """Stochastic splitting V_l -> V_1^{(x) l} with weights proportional to q^{-2E}."""
    q = scalar(q)
    dom, cod = tensor_basis(n, (l,)), tensor_basis(n, (1,) * l)
    groups = defaultdict(list)
    for seq in cod.labels:
        groups[_site_sum(seq)].append(seq)

    def column(label):
        weights = {seq: qpow(q, -2 * inversion_count(seq)) for seq in groups[label[0]]}
        total = sum(weights.values(), ZERO)
        if total == 0:
            raise SingularValueError("splitting weights sum to zero")
        return {seq: w / total for seq, w in weights.items()}

    return LocalOperator.from_function(dom, cod, column)


@lru_cache(maxsize=None)
def sum_matrix(n: int, l: int) -> LocalOperator:
    """Deterministic merge V_1^{(x) l} -> V_l."""
    dom, cod = tensor_basis(n, (1,) * l), tensor_basis(n, (l,))
    return LocalOperator.from_function(dom, cod, lambda seq: {(_site_sum(seq),): ONE})


def staircase(
    n: int, l: int, m: int, q, z, factor: Callable[[Spectral], LocalOperator], descending: bool = True
) -> LocalOperator:
    """X_{1,l+1}(z q^{s_1}) ... X_{l,l+1}(z q^{s_l}) on V_1^{(x) l} (x) V_m.

    With ``descending`` the shifts run l-1, l-3, ..., 1-l; otherwise reversed.
    """
    q, z = scalar(q), _z(z)
    basis = tensor_basis(n, (1,) * l + (m,))
    op = LocalOperator.identity(basis)
    for j in range(l - 1, -1, -1):
        shift = l - 1 - 2 * j
        if not descending:
            shift = -shift
        op = embed(factor(z.shifted(qpow(q, shift))), basis, (j, l)) @ op
    return op


def full_staircase(n: int, l: int, m: int, q, z, factor: Callable[[Spectral], LocalOperator]) -> LocalOperator:
    """Product of V_1 (x) V_1 factors on V_1^{(x) l} (x) V_1^{(x) m}, shift l-m+2(j-i)."""
    q, z = scalar(q), _z(z)
    basis = tensor_basis(n, (1,) * (l + m))
    op = LocalOperator.identity(basis)
    for i in range(l, 0, -1):
        for j in range(1, m + 1):
            shift = l - m + 2 * (j - 1) - 2 * (i - 1)
            op = embed(factor(z.shifted(qpow(q, shift))), basis, (i - 1, l + j - 1)) @ op
    return op


def _read_back(image: LocalOperator, emb: LocalOperator, domain: TensorBasis, group_sites: Sequence[tuple[int, int]]):
    """Express columns of ``image`` (inside Im(emb)) in the basis of ``domain``.

    ``group_sites`` lists (start, stop) ranges of sites to be merged back into
    one fused site each.  Raises if some column leaves the embedded image.
    """

    def key(lab):
        return tuple(_site_sum(lab[a:b]) for a, b in group_sites)

    def column(label):
        coeffs = {}
        for olab, v in image.column(label).items():
            k = key(olab)
            c = emb.entry(olab, k)
            if c == 0:
                raise IntegrityError(f"fused image has weight on {olab} outside the embedded subspace")
            r = v / c
            if coeffs.setdefault(k, r) != r:
                raise IntegrityError(f"fused image leaves the embedded subspace near {olab}")
        return coeffs

    return LocalOperator.from_function(domain, domain, column)


def _check_fusion_points(n, l, m, q, z):
    q, zs = scalar(q), _z(z)
    if zs.is_infinite:
        return
    for j in range(l):
        pt = zs.value * qpow(q, l - 1 - 2 * j)
        if pt == q ** (m + 1):
            raise SingularValueError(f"fusion factor {j + 1} is singular: z q^{l - 1 - 2 * j} = q^{m + 1}")


def krl_fuse(n: int, l: int, m: int, q, z) -> LocalOperator:
    """R(z) on V_l (x) V_m by fusing l copies of the V_1 (x) V_m matrix."""
    q = scalar(q)
    if l == 1:
        return r_matrix_l1(n, m, q, z)
    _check_fusion_points(n, l, m, q, z)
    emb = kron(embedding(n, l, q), LocalOperator.identity(tensor_basis(n, (m,))))
    image = staircase(n, l, m, q, z, lambda w: r_matrix_l1(n, m, q, w)) @ emb
    return _read_back(image, emb, tensor_basis(n, (l, m)), [(0, l), (l, l + 1)])


def krl_fuse_full(n: int, l: int, m: int, q, z) -> LocalOperator:
    """R(z) on V_l (x) V_m fused from V_1 (x) V_1 matrices on both sides."""
    q = scalar(q)
    emb = kron(embedding(n, l, q), embedding(n, m, q))
    image = full_staircase(n, l, m, q, z, lambda w: r_matrix_l1(n, 1, q, w)) @ emb
    return _read_back(image, emb, tensor_basis(n, (l, m)), [(0, l), (l, l + m)])


def projector(n: int, l: int, q) -> LocalOperator:
    """P+ on V_1^{(x) l}: orthogonal projection onto the image of I_l.

    Weight spaces of the image are one-dimensional, so each block is
    v v^T / (v . v) for the embedded weight vector v.
    """
    emb = embedding(n, l, scalar(q))

    def column(seq):
        vec = emb.column((_site_sum(seq),))
        norm = sum((v * v for v in vec.values()), ZERO)
        c = vec[seq] / norm
        return {s: c * v for s, v in vec.items()}

    return LocalOperator.from_function(emb.codomain, emb.codomain, column)


def stochastic_fuse(n: int, l: int, m: int, q, z, factor=None) -> LocalOperator:
    """S(z) on V_l (x) V_m as merge . staircase of V_1 (x) V_m matrices . split."""
    q = scalar(q)
    if factor is None:
        _check_fusion_points(n, l, m, q, z)
        factor = lambda w: s_matrix(n, 1, m, q, w)  # noqa: E731
    if l == 1:
        return factor(_z(z))
    ident = LocalOperator.identity(tensor_basis(n, (m,)))
    # ascending shifts: the same S as the descending order, and the only order
    # for which the merged staircase is constant on merge fibres
    stair = staircase(n, l, m, q, z, factor, descending=False)
    return kron(sum_matrix(n, l), ident) @ stair @ kron(split_matrix(n, l, q), ident)


def rogers_pitman_check(n: int, l: int, m: int, q, z, descending: bool = False) -> dict:
    """Compare (merge x id) stair (split merge x id) with (merge x id) stair.

    ``descending`` selects the staircase with shifts l-1, ..., 1-l from the
    rightmost factor; it reproduces S but is not constant on merge fibres.
    """
    q = scalar(q)
    ident = LocalOperator.identity(tensor_basis(n, (m,)))
    stair = staircase(n, l, m, q, z, lambda w: s_matrix(n, 1, m, q, w), descending=descending)
    merge = kron(sum_matrix(n, l), ident)
    lhs = merge @ stair @ kron(split_matrix(n, l, q) @ sum_matrix(n, l), ident)
    rhs = merge @ stair
    dev = lhs.max_abs_diff(rhs)
    return {"check": "rogers-pitman", "params": {"n": n, "l": l, "m": m, "q": str(q), "z": str(_z(z)),
                                                 "descending": descending},
            "status": "pass" if dev == 0 else "fail", "max_abs_residual": str(dev)}


# general constructors


def r_matrix(n: int, l: int, m: int, q, z) -> LocalOperator:
    """R(z) on V_l (x) V_m for finite z."""
    if l == 1:
        return r_matrix_l1(n, m, q, z)
    if m == 1:
        return r_matrix_m1(n, l, q, z)
    return krl_fuse(n, l, m, q, z)


@lru_cache(maxsize=4096)
def _s_cached(n: int, l: int, m: int, q: Scalar, z: Spectral) -> LocalOperator:
    if z.is_infinite:
        return degenerate(n, l, m, q, "inf")
    if l == 1:
        return s_from_r(r_matrix_l1(n, m, q, z), q)
    return stochastic_fuse(n, l, m, q, z)


def s_matrix(n: int, l: int, m: int, q, z) -> LocalOperator:
    """Stochastic S(z) on V_l (x) V_m; ``z`` may be ``"inf"``."""
    return _s_cached(n, l, m, scalar(q), _z(z))


def degenerate(n: int, l: int, m: int, q, at: str) -> LocalOperator:
    """S at z = 0 or z -> inf from the limit formulas, fused for l > 1."""
    q = scalar(q)
    if at not in ("zero", "inf"):
        raise ValueError("at must be 'zero' or 'inf'")
    factor = lambda w: s_limit_l1(n, m, q, at)  # noqa: E731
    if l == 1:
        return s_limit_l1(n, m, q, at)
    return stochastic_fuse(n, l, m, q, INF if at == "inf" else Spectral(ZERO), factor=factor)


def s_zero_infinite_spin(alpha: tuple, beta_reduced: tuple) -> dict:
    """Column of lim_{m->inf} S(0) (q > 1): the auxiliary line exits empty."""
    n = len(alpha) - 1
    l = sum(alpha)
    settled = tuple(b + a for a, b in zip(alpha[:n], beta_reduced))
    return {(vacuum(n, l), settled): ONE}


def triangularity_violations(s: LocalOperator, at: str) -> list:
    """Entries breaking the z = 0 / z = inf partial-sum ordering."""
    bad = []
    for i, j, v in s.items():
        alpha, beta = s.domain.labels[j]
        gamma, delta = s.codomain.labels[i]
        n1 = len(alpha)
        for k in range(1, n1 + 1):
            if at == "zero" and partial(gamma, 1, k) > partial(alpha, 1, k):
                bad.append(((alpha, beta), (gamma, delta), v))
                break
            if at == "inf" and partial(delta, 1, k) > partial(beta, 1, k):
                bad.append(((alpha, beta), (gamma, delta), v))
                break
    return bad


def reduced_entries(s: LocalOperator) -> dict:
    """Entries keyed by reduced labels (holes dropped on the second factor)."""
    out = {}
    for i, j, v in s.items():
        alpha, beta = s.domain.labels[j]
        gamma, delta = s.codomain.labels[i]
        out[(alpha, beta[:-1], gamma, delta[:-1])] = v
    return out


# algebraic checks


def yang_baxter_defect(n: int, levels: tuple[int, int, int], q, zs: Sequence) -> LocalOperator:
    """S12 S13 S23 - S23 S13 S12 on V_a (x) V_b (x) V_c with spectral parameters zs."""
    a, b, c = levels
    z1, z2, z3 = (scalar(x) for x in zs)
    basis = tensor_basis(n, (a, b, c))
    s12 = embed(s_matrix(n, a, b, q, z1 / z2), basis, (0, 1))
    s13 = embed(s_matrix(n, a, c, q, z1 / z3), basis, (0, 2))
    s23 = embed(s_matrix(n, b, c, q, z2 / z3), basis, (1, 2))
    return s12 @ s13 @ s23 - s23 @ s13 @ s12


def transpose_defect(r: LocalOperator, q) -> LocalOperator:
    """Pi B R - R^T Pi B on V_l (x) V_m."""
    pb = charge_reversal_matrix(r.domain) @ b_matrix(r.domain, q)
    return pb @ r - r.transpose() @ pb


def intertwining_defects(r: LocalOperator, q, z1, z2, alt: bool = False) -> list[tuple[str, int]]:
    """Generators u for which P R Delta(u) != Delta(u) P R."""
    from .repalg import all_generators, coproduct_matrix

    n = r.domain.n
    l, m = r.domain.levels
    check = swap(n, l, m) @ r
    bad = []
    for kind, i in all_generators(n):
        lhs = check @ coproduct_matrix(kind, i, n, (l, m), q, (z1, z2), alt)
        rhs = coproduct_matrix(kind, i, n, (m, l), q, (z2, z1), alt) @ check
        if lhs != rhs:
            bad.append((kind, i))
    return bad


def unit_defect(op: LocalOperator) -> Scalar:
    n = op.domain.n
    omega = tuple(vacuum(n, lev) for lev in op.domain.levels)
    return op.entry(omega, omega) - 1


def check_stochastic(op: LocalOperator) -> dict:
    sums = op.column_sums()
    negatives = [(op.codomain.labels[i], op.domain.labels[j], v) for i, j, v in op.items() if v < 0]
    return {
        "sum_to_one": all(s == 1 for s in sums),
        "nonnegative": not negatives,
        "witness": negatives[0] if negatives else None,
    }


def stochastic_range_points(l: int, m: int, q, count: int = 5) -> list[Scalar]:
    """Sample spectral points inside the proven stochastic range for this q."""
    q = scalar(q)
    edge = qpow(q, 2 - l - m)
    if q > 1:
        return [edge * k / (count - 1) for k in range(count)]
    return [edge * (1 + k) for k in range(count)]


# inversion symmetry


def inversion_formula_l1(n: int, m: int, q, z) -> LocalOperator:
    """S(1/z) at q -> 1/q for l = 1, written entrywise in charge-reversed labels.

    A stored label (eps_k, d) is read as the reversal of (eps_{n+2-k}, reverse(d)).
    The off-diagonal branches are selected by comparing the unreversed indices.
    """
    q, z = scalar(q), scalar(z)
    den = q ** (m + 1) - z
    basis = tensor_basis(n, (1, m))

    def column(label):
        eps, stored = label
        j = eps.index(1) + 1
        beta = reverse(stored)
        out = {}
        for k in range(1, n + 2):
            kk = n + 2 - k
            below = partial(beta, 1, kk - 1) if kk > 1 else 0
            if k == j:
                v = qpow(q, 2 * partial(beta, 1, kk) - m + 1) * (1 - qpow(q, m - 1 - 2 * beta[kk - 1]) * z)
            elif k > j:
                v = -qpow(q, 2 * below) * z * (1 - q ** (2 * beta[kk - 1]))
            else:
                v = -qpow(q, 2 * below - m + 1) * (1 - q ** (2 * beta[kk - 1]))
            if v == 0:
                continue
            delta = _moved(stored, j, k)
            if delta is None:
                continue
            out[(unit(n, k), delta)] = v / den
        return out

    return LocalOperator.from_function(basis, basis, column)


def inversion_symmetry_check(n: int, m: int, q, z) -> dict:
    """Compare S(1/z) at q -> 1/q in charge-reversed labels with the inversion display."""
    q, z = scalar(q), scalar(z)
    s_inv = s_matrix(n, 1, m, 1 / q, 1 / z)
    dev = s_inv.max_abs_diff(inversion_formula_l1(n, m, q, z))
    pi = charge_reversal_matrix(s_inv.domain)
    dev = max(dev, (pi @ s_inv @ pi).max_abs_diff(s_matrix(n, 1, m, q, z)))
    return {"check": "inversion", "params": {"n": n, "m": m, "q": str(q), "z": str(z)},
            "status": "pass" if dev == 0 else "fail", "max_abs_residual": str(dev)}


def alt_intertwining_defects(n: int, l: int, m: int, q, z1, z2) -> list[tuple[str, int]]:
    """Generators failing the charge-reversed intertwining with the opposite coproduct."""
    from .repalg import all_generators, coproduct_matrix

    q, z1, z2 = scalar(q), scalar(z1), scalar(z2)
    check = swap(n, l, m) @ r_matrix(n, l, m, 1 / q, z2 / z1)
    pi_in = charge_reversal_matrix(tensor_basis(n, (l, m)))
    pi_out = charge_reversal_matrix(tensor_basis(n, (m, l)))
    bad = []
    for kind, i in all_generators(n):
        lhs = check @ pi_in @ coproduct_matrix(kind, i, n, (l, m), q, (z1, z2), alt=True) @ pi_in
        rhs = pi_out @ coproduct_matrix(kind, i, n, (m, l), q, (z2, z1), alt=True) @ pi_out @ check
        if lhs != rhs:
            bad.append((kind, i))
    return bad


# lumpability


def merge_composition(comp: tuple, groups: Sequence[Sequence[int]]) -> tuple:
    """Sum the entries of ``comp`` over groups of 1-based species indices."""
    return tuple(sum(comp[s - 1] for s in g) for g in groups)


def consecutive_groups(n: int, r: int) -> list[list[int]]:
    """Partition of species 1..n+1 merging r and r+1."""
    groups, s = [], 1
    while s <= n + 1:
        if s == r:
            groups.append([r, r + 1])
            s += 2
        else:
            groups.append([s])
            s += 1
    return groups


class LumpabilityError(AssertionError):
    pass


def lump_species(op: LocalOperator, groups: Sequence[Sequence[int]]) -> LocalOperator:
    """Lump an operator on tensor bases by merging species; verify lumpability."""
    groups = [list(g) for g in groups]
    n_new = len(groups) - 1

    def merge(label):
        return tuple(merge_composition(c, groups) for c in label)

    dom = tensor_basis(n_new, op.domain.levels)
    cod = tensor_basis(n_new, op.codomain.levels)
    lumped: dict = {}
    witness: dict = {}
    reps = defaultdict(list)
    for j, lab in enumerate(op.domain.labels):
        reps[merge(lab)].append(j)
    for block, members in reps.items():
        first = None
        for j in members:
            col = defaultdict(lambda: ZERO)
            for i, v in op.cols.get(j, {}).items():
                col[merge(op.codomain.labels[i])] += v
            col = {k: v for k, v in col.items() if v != 0}
            if first is None:
                first, witness[block] = col, op.domain.labels[j]
            elif col != first:
                raise LumpabilityError(
                    f"inputs {witness[block]} and {op.domain.labels[j]} lump to different columns"
                )
        lumped[block] = first
    return LocalOperator.from_function(dom, cod, lambda lab: lumped[lab])


# single-species match and the continued l = 1 matrix


def bp_cp_weight(g: int, h_in: int, g_out: int, h_out: int, q, alpha, mu) -> Scalar:
    """Single-species weights with g particles at the site and h_in entering."""
    q, alpha, mu = scalar(q), scalar(alpha), scalar(mu)
    q2g = q ** (2 * g)
    if h_in == 0 and h_out == 0 and g_out == g:
        return (1 + alpha * q2g) / (1 + alpha)
    if h_in == 0 and h_out == 1 and g_out == g - 1:
        return alpha * (1 - q2g) / (1 + alpha)
    if h_in == 1 and h_out == 0 and g_out == g + 1:
        return (1 - mu**2 * q2g) / (1 + alpha)
    if h_in == 1 and h_out == 1 and g_out == g:
        return (alpha + mu**2 * q2g) / (1 + alpha)
    return ZERO


def bp_cp_matrix(m: int, q, alpha) -> LocalOperator:
    """The single-species weights as an operator on V_1 (x) V_m with mu = q^{-m}."""
    q = scalar(q)
    mu = qpow(q, -m)
    basis = tensor_basis(1, (1, m))

    def column(label):
        eps, beta = label
        h, g = eps[0], beta[0]
        out = {}
        for h2 in (0, 1):
            g2 = g + h - h2
            if 0 <= g2 <= m:
                out[((h2, 1 - h2), (g2, m - g2))] = bp_cp_weight(g, h, g2, h2, q, alpha, mu)
        return out

    return LocalOperator.from_function(basis, basis, column)


def bp_cp_fused(l: int, m: int, q, alpha) -> LocalOperator:
    """merge . [weights at q^{2(l-1)} alpha]_{1,l+1} ... [weights at alpha]_{l,l+1} . split."""
    q, alpha = scalar(q), scalar(alpha)
    basis = tensor_basis(1, (1,) * l + (m,))
    op = LocalOperator.identity(basis)
    for j in range(l - 1, -1, -1):
        op = embed(bp_cp_matrix(m, q, alpha * q ** (2 * (l - 1 - j))), basis, (j, l)) @ op
    ident = LocalOperator.identity(tensor_basis(1, (m,)))
    return kron(sum_matrix(1, l), ident) @ op @ kron(split_matrix(1, l, q), ident)


def bp_cp_match(l: int, m: int, q, alpha) -> dict:
    """Compare S(-alpha q^l mu^{-1}) with the single-species fused weights."""
    q, alpha = scalar(q), scalar(alpha)
    z = -alpha * q**l * q**m
    s = s_matrix(1, l, m, q, z)
    other = bp_cp_matrix(m, q, alpha) if l == 1 else bp_cp_fused(l, m, q, alpha)
    dev = s.max_abs_diff(other)
    return {"check": "bpcp", "params": {"l": l, "m": m, "q": str(q), "alpha": str(alpha)},
            "status": "pass" if dev == 0 else "fail", "max_abs_residual": str(dev)}


def continued_s_l1(n: int, q, mu, z, bound: int) -> LocalOperator:
    """The l = 1 matrix with mu free, on V_1 (x) (site states with at most ``bound`` particles).

    Site labels are reduced occupation vectors (beta_1..beta_n).  Outputs
    exceeding the bound are dropped, so columns at the boundary may not sum to 1.
    """
    from .fock import Basis

    q, mu, z = scalar(q), scalar(mu), scalar(z)
    if mu == 0:
        den = None
    else:
        den = q / mu - z
        if den == 0:
            raise SingularValueError("continued matrix singular at z = q / mu")
    sites = [c[:n] for c in enumerate_compositions(n, bound)]
    singles = enumerate_compositions(n, 1)
    basis = Basis([(e, s) for e in singles for s in sites], n)

    def entry(j, k, beta):
        size = sum(beta)
        below = partial(beta, 1, k - 1)
        bk = beta[k - 1] if k <= n else 0
        if mu == 0:
            # limit mu -> 0 after multiplying through by mu
            if k == j == n + 1:
                return ONE
            if k == n + 1 and k > j:
                return ONE
            return ZERO
        if k == j and k < n + 1:
            num = q ** (2 * partial(beta, 1, k)) * (q * mu - qpow(q, -2 * bk) * z)
        elif k == j:
            num = q / mu - q ** (2 * size) * z
        elif k > j and k < n + 1:
            num = -q ** (2 * below) * q * mu * (1 - q ** (2 * bk))
        elif k > j:
            num = q * mu * (1 / mu**2 - q ** (2 * size))
        else:
            num = -q ** (2 * below) * z * (1 - q ** (2 * bk))
        return num / den

    def column(label):
        eps, beta = label
        j = eps.index(1) + 1
        out = {}
        for k in range(1, n + 2):
            delta = list(beta)
            if j <= n:
                delta[j - 1] += 1
            if k <= n:
                delta[k - 1] -= 1
            if min(delta) < 0 or sum(delta) > bound:
                continue
            v = entry(j, k, beta)
            if v != 0:
                out[(unit(n, k), tuple(delta))] = v
        return out

    return LocalOperator.from_function(basis, basis, column)


def continued_is_stochastic(n: int, q, mu, z, bound: int) -> bool:
    """Sum-to-one and sign test of the continued matrix on columns far from the cap."""
    op = continued_s_l1(n, q, mu, z, bound)
    for j, lab in enumerate(op.domain.labels):
        if sum(lab[1]) >= bound:
            continue
        col = op.cols.get(j, {})
        if sum(col.values(), ZERO) != 1 or any(v < 0 for v in col.values()):
            return False
    return True


def continued_predicted_stochastic(n: int, q, mu, z) -> bool:
    """Real-parameter classification of the continued l = 1 matrix for n >= 2.

    At q = -1 the matrix equals the q = 1 matrix with mu replaced by -mu, so the
    unit-modulus branch is stated in terms of q mu.
    """
    if n < 2:
        raise ValueError("the classification needs a middle species (n >= 2)")
    q, mu, z = scalar(q), scalar(mu), scalar(z)
    if mu == 0:
        return True
    if abs(q) != 1:
        return False
    nu = q * mu
    return 1 / nu <= nu <= z or 1 / nu >= nu >= z
