"""Generators of the quantum affine algebra acting on V_l, their coproducts,
the element u_0 and the ground-state transformation."""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

from .fock import LocalOperator, tensor_basis, vacuum
from .qarith import ONE, ZERO, bracket_q, deformed_exp_coeff, qpow, scalar

KINDS = ("e", "f", "k", "kinv")


def _positions(i: int, n: int) -> tuple[int, int]:
    """Tuple positions of species i and i+1 (cyclic, species 0 == n+1)."""
    return (i - 1) % (n + 1), i % (n + 1)


def local_action(kind: str, i: int, alpha: tuple, q, z=1) -> tuple[tuple | None, object]:
    """Image of one basis vector under a generator: (new composition, coefficient)."""
    n = len(alpha) - 1
    a, b = _positions(i, n)
    if kind == "k":
        return alpha, qpow(q, alpha[b] - alpha[a])
    if kind == "kinv":
        return alpha, qpow(q, alpha[a] - alpha[b])
    if kind == "e":
        if alpha[a] == 0:
            return None, ZERO
        new = list(alpha)
        new[a] -= 1
        new[b] += 1
        coeff = bracket_q(alpha[a], q)
        if i == 0:
            coeff *= scalar(z)
        return tuple(new), coeff
    if kind == "f":
        if alpha[b] == 0:
            return None, ZERO
        new = list(alpha)
        new[a] += 1
        new[b] -= 1
        coeff = bracket_q(alpha[b], q)
        if i == 0:
            coeff /= scalar(z)
        return tuple(new), coeff
    raise ValueError(f"unknown generator kind {kind!r}")


def generator_matrix(kind: str, i: int, n: int, l: int, q, z=1) -> LocalOperator:
    """Matrix of a generator on the spin-l representation with spectral parameter z."""
    if not 0 <= i <= n:
        raise ValueError("generator index out of range")
    basis = tensor_basis(n, (l,))

    def column(label):
        new, c = local_action(kind, i, label[0], q, z)
        return {} if new is None else {(new,): c}

    return LocalOperator.from_function(basis, basis, column)


def _legs(kind: str, alt: bool) -> tuple[str | None, str | None]:
    """Operators placed left and right of the active site in the L-fold coproduct."""
    if kind in ("k", "kinv"):
        return kind, kind
    if not alt:
        return (None, "k") if kind == "e" else ("kinv", None)
    return ("kinv", None) if kind == "e" else (None, "k")


def coproduct_matrix(
    kind: str,
    i: int,
    n: int,
    spins: Sequence[int],
    q,
    spectrals: Sequence | None = None,
    alt: bool = False,
) -> LocalOperator:
    """Iterated coproduct of a generator on V_{m_1} x ... x V_{m_L}.

    ``alt`` selects the opposite coproduct (e -> e x 1 + k^{-1} x e).
    """
    spins = tuple(spins)
    spectrals = tuple(spectrals) if spectrals is not None else (1,) * len(spins)
    basis = tensor_basis(n, spins)
    if kind in ("k", "kinv"):
        def column(label):
            c = ONE
            for site in label:
                c *= local_action(kind, i, site, q)[1]
            return {label: c}

        return LocalOperator.from_function(basis, basis, column)

    left, right = _legs(kind, alt)

    def column(label):
        out = defaultdict(lambda: ZERO)
        for x, site in enumerate(label):
            new, c = local_action(kind, i, site, q, spectrals[x])
            if new is None:
                continue
            for y in range(x):
                if left:
                    c *= local_action(left, i, label[y], q)[1]
            for y in range(x + 1, len(label)):
                if right:
                    c *= local_action(right, i, label[y], q)[1]
            out[label[:x] + (new,) + label[x + 1 :]] += c
        return out

    return LocalOperator.from_function(basis, basis, column)


def deformed_exp(op: LocalOperator, r) -> LocalOperator:
    """exp_r of a nilpotent operator as a truncated series."""
    result = LocalOperator.identity(op.domain)
    power = LocalOperator.identity(op.domain)
    k = 0
    while True:
        power = op @ power
        k += 1
        if power.nnz() == 0:
            return result
        if k > len(op.domain) + 1:
            raise ValueError("operator is not nilpotent")
        result = result + power.scale(deformed_exp_coeff(k, r))


def u0_matrix(n: int, spins: Sequence[int], q) -> LocalOperator:
    """Coproduct of u_0 = exp_{q^2}(f_1) ... exp_{q^2}(f_n) on the given sites."""
    q2 = scalar(q) ** 2
    spins = tuple(spins)
    out = LocalOperator.identity(tensor_basis(n, spins))
    for i in range(n, 0, -1):
        out = deformed_exp(coproduct_matrix("f", i, n, spins, q), q2) @ out
    return out


def u0_pseudo_factorized(n: int, spins: Sequence[int], q) -> LocalOperator:
    """Same operator assembled from one-site factors exp(k^{-1} x ... x f_i x 1 ...)."""
    q2 = scalar(q) ** 2
    spins = tuple(spins)
    basis = tensor_basis(n, spins)
    out = LocalOperator.identity(basis)
    for i in range(n, 0, -1):
        factor = LocalOperator.identity(basis)
        for x in range(len(spins) - 1, -1, -1):
            def column(label, x=x, i=i):
                new, c = local_action("f", i, label[x], q)
                if new is None:
                    return {}
                for y in range(x):
                    c *= local_action("kinv", i, label[y], q)[1]
                return {label[:x] + (new,) + label[x + 1 :]: c}

            leg = LocalOperator.from_function(basis, basis, column)
            factor = deformed_exp(leg, q2) @ factor
        out = factor @ out
    return out


def ground_state_transform(n: int, spins: Sequence[int], q) -> LocalOperator:
    """Diagonal Gr with entries <xi| Delta(u_0) |Omega^L>."""
    spins = tuple(spins)
    basis = tensor_basis(n, spins)
    u0 = u0_matrix(n, spins, q)
    omega = tuple(vacuum(n, m) for m in spins)
    col = u0.column(omega)
    missing = [lab for lab in basis.labels if col.get(lab, ZERO) == 0]
    if missing:
        raise ZeroDivisionError(f"ground state transform vanishes at {missing[0]}")
    return LocalOperator.diagonal(basis, lambda lab: col[lab])


def u0_vacuum_column(n: int, l: int, q) -> dict:
    """Coefficients of u_0 |Omega> on V_l."""
    return u0_matrix(n, (l,), q).column((vacuum(n, l),))


def commutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    return a @ b - b @ a


def weyl_defect(n: int, l: int, q, i: int, z=1) -> LocalOperator:
    """[e_i, f_i] - (k_i - k_i^{-1})/(q - q^{-1}); zero when the relation holds."""
    q = scalar(q)
    e = generator_matrix("e", i, n, l, q, z)
    f = generator_matrix("f", i, n, l, q, z)
    k = generator_matrix("k", i, n, l, q, z)
    kinv = generator_matrix("kinv", i, n, l, q, z)
    return commutator(e, f) - (k - kinv).scale(ONE / (q - 1 / q))


def serre_defect(ops: dict, i: int, j: int, q) -> LocalOperator:
    """x_i^2 x_j - (q + 1/q) x_i x_j x_i + x_j x_i^2 for a dict of matrices by index."""
    q = scalar(q)
    a, b = ops[i], ops[j]
    return a @ a @ b - (a @ b @ a).scale(q + 1 / q) + b @ a @ a


def omega_involution(kind: str, i: int, n: int) -> tuple[str, int]:
    """Image of a generator under the involution e_i <-> f_{n+1-i}, k_i -> k_{n+1-i}^{-1}."""
    j = (n + 1 - i) % (n + 1)
    return {"e": "f", "f": "e", "k": "kinv", "kinv": "k"}[kind], j


def all_generators(n: int) -> list[tuple[str, int]]:
    return [(kind, i) for i in range(n + 1) for kind in ("e", "f", "k")]
