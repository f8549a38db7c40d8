"""State spaces, tensor bases and sparse exact operators.

A composition is a tuple of n+1 nonnegative integers; the last entry counts
holes.  Site bases list compositions in descending lexicographic order, so the
fully occupied state ``(m, 0, ..., 0)`` comes first and the vacuum
``(0, ..., 0, m)`` last.  Tensor labels are tuples of compositions, ordered
row-major with the leftmost factor most significant.
"""

from __future__ import annotations

import json
from collections import defaultdict
from functools import lru_cache
from math import comb
from typing import Callable, Hashable, Iterable, Sequence

from .qarith import ONE, ZERO, Scalar, q_pochhammer, qpow, scalar, to_fraction

Composition = tuple


@lru_cache(maxsize=None)
def enumerate_compositions(n: int, m: int) -> tuple[Composition, ...]:
    """All compositions of m into n+1 parts, descending lexicographically."""
    if n < 0 or m < 0:
        raise ValueError("need n >= 0 and m >= 0")

    def rec(parts: int, total: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in rec(parts - 1, total - first):
                yield (first,) + rest

    return tuple(rec(n + 1, m))


def vacuum(n: int, m: int) -> Composition:
    return (0,) * n + (m,)


def full(n: int, m: int) -> Composition:
    return (m,) + (0,) * n


def unit(n: int, k: int) -> Composition:
    """The single-particle state of species k (1-based; k = n+1 is a hole)."""
    return tuple(1 if i == k - 1 else 0 for i in range(n + 1))


def partial(alpha: Sequence[int], i: int, j: int) -> int:
    """alpha_{[i,j]} with 1-based inclusive indices; empty when j < i."""
    if j < i:
        return 0
    return sum(alpha[i - 1 : j])


def reverse(alpha: Composition) -> Composition:
    return tuple(reversed(alpha))


class Basis:
    """An ordered list of hashable labels with an index map."""

    def __init__(self, labels: Iterable[Hashable], n: int):
        self.labels = tuple(labels)
        self.n = n
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValueError("duplicate basis labels")

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Basis) and self.labels == other.labels)

    def __hash__(self) -> int:
        return hash(self.labels)

    def sector(self, label) -> tuple[int, ...]:
        """Per-species particle totals (species 1..n) of a label."""
        return tuple(sum(c[i] for c in label) for i in range(self.n))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={len(self)}, n={self.n})"


class TensorBasis(Basis):
    def __init__(self, n: int, levels: Sequence[int]):
        self.levels = tuple(levels)
        self.site_bases = [enumerate_compositions(n, m) for m in self.levels]
        labels = [()]
        for comps in self.site_bases:
            labels = [lab + (c,) for lab in labels for c in comps]
        super().__init__(labels, n)

    def __repr__(self) -> str:
        return f"TensorBasis(n={self.n}, levels={self.levels})"

    def flat_index(self, label) -> int:
        return self.index[tuple(tuple(c) for c in label)]


@lru_cache(maxsize=None)
def tensor_basis(n: int, levels: tuple[int, ...]) -> TensorBasis:
    return TensorBasis(n, tuple(levels))


def site_basis(n: int, m: int) -> TensorBasis:
    return tensor_basis(n, (m,))


class ConservationError(AssertionError):
    pass


class LocalOperator:
    """Sparse matrix with ``entry[out, in] = <out|M|in>``, stored by column."""

    __slots__ = ("domain", "codomain", "cols")

    def __init__(self, domain: Basis, codomain: Basis, cols=None):
        self.domain = domain
        self.codomain = codomain
        self.cols: dict[int, dict[int, Scalar]] = {}
        if cols:
            for j, col in cols.items():
                col = {i: v for i, v in col.items() if v != 0}
                if col:
                    self.cols[j] = col

    # construction helpers
    @classmethod
    def from_function(cls, domain: Basis, codomain: Basis, column: Callable) -> "LocalOperator":
        """``column(label)`` returns a mapping from output labels to values."""
        cols = {}
        for j, lab in enumerate(domain.labels):
            out = {}
            for olab, v in column(lab).items():
                if v != 0:
                    i = codomain.index[olab]
                    out[i] = out.get(i, ZERO) + v
            cols[j] = out
        return cls(domain, codomain, cols)

    @classmethod
    def diagonal(cls, basis: Basis, value: Callable) -> "LocalOperator":
        return cls(basis, basis, {j: {j: scalar(value(lab))} for j, lab in enumerate(basis.labels)})

    @classmethod
    def identity(cls, basis: Basis) -> "LocalOperator":
        return cls(basis, basis, {j: {j: ONE} for j in range(len(basis))})

    @classmethod
    def zero(cls, domain: Basis, codomain: Basis | None = None) -> "LocalOperator":
        return cls(domain, codomain or domain, {})

    # access
    def __getitem__(self, key) -> Scalar:
        i, j = key
        return self.cols.get(j, {}).get(i, ZERO)

    def entry(self, out_label, in_label) -> Scalar:
        return self[self.codomain.index[out_label], self.domain.index[in_label]]

    def column(self, in_label) -> dict:
        labels = self.codomain.labels
        return {labels[i]: v for i, v in self.cols.get(self.domain.index[in_label], {}).items()}

    def items(self):
        for j, col in self.cols.items():
            for i, v in col.items():
                yield i, j, v

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols.values())

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.codomain), len(self.domain)

    # algebra
    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        if other.codomain != self.domain:
            raise ValueError(f"basis mismatch in product: {other.codomain!r} vs {self.domain!r}")
        mine = self.cols
        out = {}
        for j, col in other.cols.items():
            acc = defaultdict(lambda: ZERO)
            for k, v in col.items():
                inner = mine.get(k)
                if inner:
                    for i, w in inner.items():
                        acc[i] += w * v
            out[j] = acc
        return LocalOperator(other.domain, self.codomain, out)

    def _combine(self, other: "LocalOperator", sign: int) -> "LocalOperator":
        if self.domain != other.domain or self.codomain != other.codomain:
            raise ValueError("basis mismatch in sum")
        out = {j: dict(c) for j, c in self.cols.items()}
        for j, col in other.cols.items():
            tgt = out.setdefault(j, {})
            for i, v in col.items():
                tgt[i] = tgt.get(i, ZERO) + sign * v
        return LocalOperator(self.domain, self.codomain, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "LocalOperator":
        c = scalar(c)
        return LocalOperator(self.domain, self.codomain, {j: {i: c * v for i, v in col.items()} for j, col in self.cols.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def transpose(self) -> "LocalOperator":
        out = defaultdict(dict)
        for i, j, v in self.items():
            out[i][j] = v
        return LocalOperator(self.codomain, self.domain, out)

    @property
    def T(self) -> "LocalOperator":
        return self.transpose()

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalOperator):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.codomain == other.codomain
            and (self - other).nnz() == 0
        )

    __hash__ = None

    def max_abs_diff(self, other: "LocalOperator") -> Scalar:
        diff = self - other
        return max((abs(v) for _, _, v in diff.items()), default=ZERO)

    def inverse_diagonal(self) -> "LocalOperator":
        if self.domain != self.codomain:
            raise ValueError("not square")
        out = {}
        for j in range(len(self.domain)):
            v = self[j, j]
            if v == 0:
                raise ZeroDivisionError(f"zero diagonal entry at {self.domain.labels[j]}")
            out[j] = {j: ONE / v}
        if any(i != j for i, j, _ in self.items()):
            raise ValueError("operator is not diagonal")
        return LocalOperator(self.domain, self.domain, out)

    def column_sums(self) -> list[Scalar]:
        return [sum(self.cols.get(j, {}).values(), ZERO) for j in range(len(self.domain))]

    def is_stochastic(self) -> bool:
        return all(s == 1 for s in self.column_sums()) and all(v >= 0 for _, _, v in self.items())

    def restrict(self, domain: Basis, codomain: Basis) -> "LocalOperator":
        """Sub-block on the given label subsets (entries outside are dropped)."""
        out = {}
        for j, lab in enumerate(domain.labels):
            col = self.cols.get(self.domain.index[lab], {})
            sub = {}
            for i, v in col.items():
                k = codomain.index.get(self.codomain.labels[i])
                if k is not None:
                    sub[k] = v
            out[j] = sub
        return LocalOperator(domain, codomain, out)

    def map(self, fn: Callable[[Scalar], Scalar]) -> "LocalOperator":
        return LocalOperator(self.domain, self.codomain, {j: {i: fn(v) for i, v in c.items()} for j, c in self.cols.items()})

    def to_dense(self) -> list[list[Scalar]]:
        rows, cols = self.shape
        dense = [[ZERO] * cols for _ in range(rows)]
        for i, j, v in self.items():
            dense[i][j] = v
        return dense

    def to_float_array(self):
        import numpy as np

        arr = np.zeros(self.shape)
        for i, j, v in self.items():
            arr[i, j] = float(v)
        return arr

    def __repr__(self) -> str:
        return f"LocalOperator({self.shape[0]}x{self.shape[1]}, nnz={self.nnz()})"

    # serialization
    def to_json_dict(self, params: dict | None = None) -> dict:
        entries = []
        for j in sorted(self.cols):
            for i in sorted(self.cols[j]):
                v = self.cols[j][i]
                entries.append({"row": i, "col": j, "num": str(v.numerator), "den": str(v.denominator)})
        return {
            "params": params or {},
            "basis_domain": [[list(c) for c in lab] for lab in self.domain.labels],
            "basis_codomain": [[list(c) for c in lab] for lab in self.codomain.labels],
            "entries": entries,
        }

    def to_csv(self) -> str:
        def name(lab):
            return "|".join("".join(map(str, c)) for c in lab)

        lines = ["," + ",".join(name(lab) for lab in self.domain.labels)]
        for i, row in enumerate(self.to_dense()):
            lines.append(name(self.codomain.labels[i]) + "," + ",".join(str(to_fraction(v)) for v in row))
        return "\n".join(lines) + "\n"


def operator_from_json(data: dict | str, n: int) -> LocalOperator:
    if isinstance(data, str):
        data = json.loads(data)
    dom = Basis([tuple(tuple(c) for c in lab) for lab in data["basis_domain"]], n)
    cod = Basis([tuple(tuple(c) for c in lab) for lab in data["basis_codomain"]], n)
    cols = defaultdict(dict)
    for e in data["entries"]:
        cols[e["col"]][e["row"]] = scalar(f"{e['num']}/{e['den']}")
    return LocalOperator(dom, cod, cols)


# tensor structure


def kron(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    """Tensor product of operators on tensor bases."""
    n = a.domain.n
    dom = tensor_basis(n, a.domain.levels + b.domain.levels)
    cod = tensor_basis(n, a.codomain.levels + b.codomain.levels)
    nb_in, nb_out = len(b.domain), len(b.codomain)
    out = {}
    for ja, ca in a.cols.items():
        for jb, cb in b.cols.items():
            out[ja * nb_in + jb] = {ia * nb_out + ib: va * vb for ia, va in ca.items() for ib, vb in cb.items()}
    return LocalOperator(dom, cod, out)


def embed(op: LocalOperator, basis: TensorBasis, start: int | Sequence[int]) -> LocalOperator:
    """Act with ``op`` on some sites of ``basis`` (0-based).

    ``start`` is either the first of a run of consecutive sites or an explicit
    increasing tuple of site positions; the output sites take the codomain
    levels of ``op`` in the same positions.
    """
    k = len(op.domain.levels)
    positions = tuple(range(start, start + k)) if isinstance(start, int) else tuple(start)
    if len(positions) != k or len(op.codomain.levels) != k:
        raise ValueError("operator arity does not match the chosen sites")
    if tuple(basis.levels[p] for p in positions) != op.domain.levels:
        raise ValueError(f"site levels at {positions} do not match {op.domain.levels}")
    new_levels = list(basis.levels)
    for p, lev in zip(positions, op.codomain.levels):
        new_levels[p] = lev
    cod = tensor_basis(basis.n, tuple(new_levels))
    dom_index = op.domain.index
    cod_labels = op.codomain.labels
    cidx = cod.index
    out = {}
    for j, lab in enumerate(basis.labels):
        col = op.cols.get(dom_index[tuple(lab[p] for p in positions)])
        if not col:
            continue
        target = {}
        for i, v in col.items():
            new = list(lab)
            for p, c in zip(positions, cod_labels[i]):
                new[p] = c
            target[cidx[tuple(new)]] = v
        out[j] = target
    return LocalOperator(basis, cod, out)


def permutation(n: int, levels: Sequence[int], order: Sequence[int]) -> LocalOperator:
    """Maps |x_1,...,x_L> to |x_{order[0]}, x_{order[1]}, ...> (0-based positions)."""
    dom = tensor_basis(n, tuple(levels))
    cod = tensor_basis(n, tuple(levels[p] for p in order))
    return LocalOperator.from_function(dom, cod, lambda lab: {tuple(lab[p] for p in order): ONE})


def swap(n: int, left: int, right: int) -> LocalOperator:
    """The flip P: V_left (x) V_right -> V_right (x) V_left."""
    return permutation(n, (left, right), (1, 0))


def charge_reverse_label(label):
    return tuple(reverse(c) for c in label)


def charge_reverse(obj):
    """Charge reversal of a composition, a tensor label, or an operator (Pi M Pi)."""
    if isinstance(obj, LocalOperator):
        pd, pc = charge_reversal_matrix(obj.domain), charge_reversal_matrix(obj.codomain)
        return pc @ obj @ pd
    if obj and isinstance(obj[0], tuple):
        return charge_reverse_label(obj)
    return reverse(obj)


def charge_reversal_matrix(basis: Basis) -> LocalOperator:
    return LocalOperator.from_function(basis, basis, lambda lab: {charge_reverse_label(lab): ONE})


def b_entry(label, q) -> Scalar:
    q2 = scalar(q) ** 2
    out = ONE
    for c in label:
        for part in c:
            out *= q_pochhammer(q2, q2, part)
    return out


def b_matrix(basis: Basis, q) -> LocalOperator:
    """Diagonal B with entries prod_i (q^2;q^2)_{alpha_i} over all sites."""
    op = LocalOperator.diagonal(basis, lambda lab: b_entry(lab, q))
    if len(op.cols) != len(basis):
        raise ZeroDivisionError("B has a zero diagonal entry")
    return op


def gauge_exponent(label) -> int:
    """Sum over sites y < x and species i of xi^y_{[1,i]} xi^x_{i+1}."""
    total = 0
    n = len(label[0]) - 1 if label else 0
    for x in range(len(label)):
        for y in range(x):
            for i in range(1, n + 1):
                total += partial(label[y], 1, i) * label[x][i]
    return total


def gauge_matrix(basis: Basis, q, inverse: bool = False) -> LocalOperator:
    """Diagonal Ga with entries q^{-gauge_exponent}; ``inverse`` gives Ga^{-1}."""
    sign = 1 if inverse else -1
    return LocalOperator.diagonal(basis, lambda lab: qpow(q, sign * gauge_exponent(lab)))


def gauge_tilde_matrix(basis: Basis, q, inverse: bool = False) -> LocalOperator:
    """Space-reversed gauge: the Ga entry of the site-reversed label."""
    sign = 1 if inverse else -1
    return LocalOperator.diagonal(basis, lambda lab: qpow(q, sign * gauge_exponent(lab[::-1])))


def sector_decompose(op: LocalOperator) -> tuple[dict, list]:
    """Group column indices by sector; also return entries that cross sectors."""
    sectors = defaultdict(list)
    for j, lab in enumerate(op.domain.labels):
        sectors[op.domain.sector(lab)].append(j)
    violations = []
    for i, j, v in op.items():
        s_in = op.domain.sector(op.domain.labels[j])
        s_out = op.codomain.sector(op.codomain.labels[i])
        if s_in != s_out:
            violations.append((op.codomain.labels[i], op.domain.labels[j], v))
    return dict(sectors), violations


def assert_conserving(op: LocalOperator) -> None:
    _, bad = sector_decompose(op)
    if bad:
        raise ConservationError(f"entry crosses sectors: {bad[0]}")


def sector_basis(n: int, levels: Sequence[int], totals: Sequence[int]) -> Basis:
    """Labels of a tensor basis restricted to one particle-number sector."""
    full_basis = tensor_basis(n, tuple(levels))
    totals = tuple(totals)
    return Basis([lab for lab in full_basis.labels if full_basis.sector(lab) == totals], n)


def dimension(n: int, m: int) -> int:
    return comb(m + n, n)
