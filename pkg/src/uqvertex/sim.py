"""Seeded Monte Carlo for the discrete- and continuous-time multi-species processes.

Every replication draws from its own counter-based stream: numpy's Philox with the
128-bit key ``(master_seed << 64) | replication_index``.  Results therefore do not
depend on how replications are split across worker processes.  Probabilities are
computed exactly, rounded once to float, and cached per local input.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .fock import full, vacuum
from .qarith import ONE, ZERO, Scalar, as_float, scalar
from .qhahn import QHahnParams, phi_prime_rate, phi_weight, sub_vectors

NEGATIVE_DUST = 1e-12
KEY_BITS = 64


class SamplingError(RuntimeError):
    pass


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    if not 0 <= master_seed < 2**KEY_BITS or not 0 <= index < 2**KEY_BITS:
        raise ValueError("seed and replication index must fit in 64 bits")
    return np.random.Generator(np.random.Philox(key=(master_seed << KEY_BITS) | index))


def _table(outcomes: list, weights: list[float]) -> tuple[list, np.ndarray]:
    w = np.asarray(weights, dtype=float)
    if (w < -NEGATIVE_DUST).any():
        raise SamplingError(f"negative probability {w.min()}")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise SamplingError(f"probabilities sum to {total}")
    return outcomes, np.cumsum(w) / total


def _draw(table: tuple[list, np.ndarray], u: float):
    outcomes, cdf = table
    k = int(np.searchsorted(cdf, u, side="right"))
    return outcomes[min(k, len(outcomes) - 1)]


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _check_totals(before, after, n: int) -> None:
    for i in range(n):
        if sum(c[i] for c in before) != sum(c[i] for c in after):
            raise AssertionError(f"species {i + 1} total changed: {before} -> {after}")


# q-Hahn parallel update


@dataclass(frozen=True)
class QHahnSampler:
    params: QHahnParams

    @lru_cache(maxsize=None)
    def table(self, beta: tuple) -> tuple[list, np.ndarray]:
        p = self.params
        outs, ws = [], []
        for g in sub_vectors(beta):
            outs.append(g)
            ws.append(as_float(phi_weight(g, beta, p.lam, p.mu, p.q)))
        return _table(outs, ws)

    @lru_cache(maxsize=None)
    def rates(self, beta: tuple) -> tuple[list, np.ndarray, float]:
        outs, rs = [], []
        for g in sub_vectors(beta):
            if any(g):
                r = as_float(phi_prime_rate(g, beta, self.params.mu, self.params.q))
                if r < -NEGATIVE_DUST:
                    raise SamplingError(f"negative rate {r}")
                if not math.isfinite(r):
                    raise SamplingError("rate overflow")
                outs.append(g)
                rs.append(max(r, 0.0))
        return outs, np.asarray(rs), float(sum(rs))


def step_parallel_qhahn(config, sampler: QHahnSampler, rng: np.random.Generator, direction: str = "right"):
    """One parallel update: independent draws at every emitting site, then the shift."""
    size = len(config)
    if direction == "right":
        movers, step = range(size - 1), 1
    elif direction == "left":
        movers, step = range(1, size), -1
    else:
        raise ValueError("direction must be 'left' or 'right'")
    u = rng.random(size)
    sites = list(config)
    for x in movers:
        g = _draw(sampler.table(config[x]), u[x])
        if any(g):
            sites[x] = _sub(sites[x], g)
            sites[x + step] = _add(sites[x + step], g)
    new = tuple(sites)
    _check_totals(config, new, sampler.params.n)
    return new


def run_continuous(config, sampler: QHahnSampler, rng: np.random.Generator, t: float, direction: str = "right"):
    """Exponential-clock simulation of the zero-range generator with rates Phi'_q."""
    size = len(config)
    step = 1 if direction == "right" else -1
    clock = 0.0
    while True:
        options = []
        total = 0.0
        for x in range(size):
            if not 0 <= x + step < size:
                continue
            outs, rs, tot = sampler.rates(config[x])
            if tot > 0:
                options.append((x, outs, rs, tot))
                total += tot
        if total == 0:
            return config
        clock += rng.exponential(1.0 / total)
        if clock > t:
            return config
        pick = rng.random() * total
        for x, outs, rs, tot in options:
            if pick < tot or x == options[-1][0]:
                k = min(int(np.searchsorted(np.cumsum(rs), pick, side="right")), len(outs) - 1)
                g = outs[k]
                sites = list(config)
                sites[x] = _sub(sites[x], g)
                sites[x + step] = _add(sites[x + step], g)
                new = tuple(sites)
                _check_totals(config, new, sampler.params.n)
                config = new
                break
            pick -= tot


# fused-vertex sequential update


@dataclass(frozen=True)
class VertexSampler:
    """Column sampler for the transfer-matrix sweep through sites with spins and spectral parameters."""

    n: int
    l: int
    z: object
    spins: tuple
    spectrals: tuple
    q: Scalar

    @lru_cache(maxsize=None)
    def _local(self, j: int, direction: str):
        from .duality import _factor
        from .fock import swap
        from .vertex import Spectral

        z = Spectral.parse(self.z)
        s = _factor(self.n, self.l, self.spins[j], self.q, z, self.spectrals[j])
        if direction == "left":
            return s @ swap(self.n, self.spins[j], self.l)
        return swap(self.n, self.l, self.spins[j]) @ s

    @lru_cache(maxsize=None)
    def table(self, j: int, direction: str, pair: tuple):
        col = self._local(j, direction).column(pair)
        outs = list(col)
        return _table(outs, [as_float(col[o]) for o in outs])


def step_sequential(config, sampler: VertexSampler, rng: np.random.Generator, direction: str = "left",
                    aux_in: str = "A"):
    """One sweep of the auxiliary line; returns the new configuration and the exiting line state.

    ``left``: the line enters at the right end and moves left (T); ``right``: the mirror (T_rev).
    """
    size = len(config)
    aux = full(sampler.n, sampler.l) if aux_in == "A" else vacuum(sampler.n, sampler.l)
    u = rng.random(size)
    sites = list(config)
    if direction == "left":
        for j in range(size - 1, -1, -1):
            aux, sites[j] = _draw(sampler.table(j, "left", (sites[j], aux)), u[j])
    elif direction == "right":
        for j in range(size):
            sites[j], aux = _draw(sampler.table(j, "right", (aux, sites[j])), u[j])
    else:
        raise ValueError("direction must be 'left' or 'right'")
    return tuple(sites), aux


# duality estimates


@dataclass
class DualityEstimate:
    mean: float
    standard_error: float
    replications: int
    exact: float | None = None
    extras: dict = field(default_factory=dict)

    def within(self, other: "DualityEstimate | None" = None, sigmas: float = 4.0) -> bool:
        if other is None:
            if self.exact is None:
                return True
            return abs(self.mean - self.exact) <= sigmas * self.standard_error + 1e-12
        se = math.hypot(self.standard_error, other.standard_error)
        return abs(self.mean - other.mean) <= sigmas * se + 1e-12


@dataclass(frozen=True)
class SimSpec:
    """What to run.  ``model`` is one of ``qhahn-parallel``, ``qhahn-continuous``, ``vertex-sequential``."""

    model: str
    direction: str
    initial: tuple
    horizon: float
    replications: int
    seed: int
    qhahn: QHahnParams | None = None
    vertex: VertexSampler | None = None
    aux_in: str = "A"


def _observable_path(spec: SimSpec, observable: Callable, index: int) -> float:
    rng = replication_rng(spec.seed, index)
    cfg = spec.initial
    if spec.model == "qhahn-parallel":
        sampler = QHahnSampler(spec.qhahn)
        for _ in range(int(spec.horizon)):
            cfg = step_parallel_qhahn(cfg, sampler, rng, spec.direction)
        return observable(cfg)
    if spec.model == "qhahn-continuous":
        return observable(run_continuous(cfg, QHahnSampler(spec.qhahn), rng, float(spec.horizon), spec.direction))
    if spec.model == "vertex-sequential":
        omega = vacuum(spec.vertex.n, spec.vertex.l)
        for _ in range(int(spec.horizon)):
            cfg, exit_state = step_sequential(cfg, spec.vertex, rng, spec.direction, spec.aux_in)
            if exit_state != omega:
                return 0.0  # the pinned operator discards paths whose line leaves occupied
        return observable(cfg)
    raise ValueError(f"unknown model {spec.model!r}")


def _chunk(args):
    spec, observable, start, stop = args
    return [_observable_path(spec, observable, i) for i in range(start, stop)]


def sample_observable(spec: SimSpec, observable: Callable, workers: int = 1) -> np.ndarray:
    """Per-replication observable values in replication order."""
    total = spec.replications
    if workers <= 1:
        return np.asarray([_observable_path(spec, observable, i) for i in range(total)])
    bounds = np.linspace(0, total, workers + 1).astype(int)
    jobs = [(spec, observable, int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_chunk, jobs))
    return np.asarray([v for part in parts for v in part])


def summarize(values: np.ndarray, exact: float | None = None) -> DualityEstimate:
    n = len(values)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return DualityEstimate(mean, se, n, exact)


class _Observable:
    """Picklable D(., fixed) or D(fixed, .) as floats, cached per configuration."""

    def __init__(self, functional: Callable, fixed, slot: str):
        self.functional, self.fixed, self.slot = functional, fixed, slot
        self.cache: dict = {}

    def __call__(self, cfg) -> float:
        if cfg not in self.cache:
            args = (cfg, self.fixed) if self.slot == "first" else (self.fixed, cfg)
            self.cache[cfg] = as_float(self.functional(*args))
        return self.cache[cfg]


def exact_expectation(column: Callable, start, steps: int, observable: Callable) -> Scalar:
    """Sum over the law after ``steps`` applications of a (sub)stochastic column map."""
    dist = {start: ONE}
    for _ in range(steps):
        new: dict = {}
        for cfg, p in dist.items():
            for nxt, w in column(cfg).items():
                new[nxt] = new.get(nxt, ZERO) + p * w
        dist = new
    return sum((p * observable(cfg) for cfg, p in dist.items()), ZERO)


def estimate_duality(forward: SimSpec, reverse: SimSpec, functional: Callable,
                     exact_columns: tuple[Callable, Callable] | None = None,
                     workers: int = 1) -> tuple[DualityEstimate, DualityEstimate]:
    """E[D(eta_t, xi)] with eta from ``forward`` and E[D(eta, xi_t)] with xi from ``reverse``.

    ``functional(eta, xi)`` is evaluated exactly and rounded.  With ``exact_columns``
    (one-step column maps for the two dynamics) the exact expectations are attached.
    """
    eta, xi = forward.initial, reverse.initial
    fwd_obs = _Observable(functional, xi, "first")
    rev_obs = _Observable(functional, eta, "second")
    fwd_vals = sample_observable(forward, fwd_obs, workers)
    rev_vals = sample_observable(reverse, rev_obs, workers)
    exact_f = exact_r = None
    if exact_columns is not None:
        steps = int(forward.horizon)
        exact_f = as_float(exact_expectation(exact_columns[0], eta, steps, lambda c: functional(c, xi)))
        exact_r = as_float(exact_expectation(exact_columns[1], xi, int(reverse.horizon), lambda c: functional(eta, c)))
    return summarize(fwd_vals, exact_f), summarize(rev_vals, exact_r)


def estimate_to_json(est: DualityEstimate) -> dict:
    return asdict(est)


# ready-made instances


def qhahn_instance(n: int, size: int, eta, xi, q, lam, mu, steps: int, replications: int, seed: int):
    """Forward/reverse specs for the q-Hahn parallel update with D_0; eta moves left."""
    from .qhahn import discrete_step_column

    params = QHahnParams.make(n, q, lam, mu)
    eta, xi = tuple(map(tuple, eta)), tuple(map(tuple, xi))
    fwd = SimSpec("qhahn-parallel", "left", eta, steps, replications, seed, qhahn=params)
    rev = SimSpec("qhahn-parallel", "right", xi, steps, replications, seed + 1, qhahn=params)
    functional = _D0(params.q)
    columns = (lambda c: discrete_step_column(c, params, "left"), lambda c: discrete_step_column(c, params, "right"))
    return fwd, rev, functional, columns


class _D0:
    def __init__(self, q):
        self.q = q

    def __call__(self, eta, xi):
        from .qhahn import d0_entry

        return d0_entry(eta, xi, self.q)


class _Dmu:
    def __init__(self, n, spins, q):
        self.n, self.spins, self.q = n, spins, q

    def __call__(self, eta, xi):
        from .duality import duality_entry, sector_weight

        return duality_entry(xi, eta, self.spins, self.q) * sector_weight(xi, eta, self.n, self.q)


def vertex_instance(n: int, l: int, spins, eta, xi, q, steps: int, replications: int, seed: int, z=None):
    """Forward/reverse specs for the pinned sequential sweep with the balanced D_mu.

    The default spectral parameter is the q-Hahn point z = q^{l-m} (common spin m).
    """
    from .duality import transfer_column
    from .qarith import qpow

    q = scalar(q)
    spins = tuple(spins)
    if z is None:
        if len(set(spins)) != 1:
            raise ValueError("give z explicitly for mixed spins")
        z = qpow(q, l - spins[0])
    specs = (1,) * len(spins)
    sampler = VertexSampler(n, l, z, spins, specs, q)
    eta, xi = tuple(map(tuple, eta)), tuple(map(tuple, xi))
    fwd = SimSpec("vertex-sequential", "left", eta, steps, replications, seed, vertex=sampler)
    rev = SimSpec("vertex-sequential", "right", xi, steps, replications, seed + 1, vertex=sampler)
    start, omega = full(n, l), vacuum(n, l)

    def col_left(cfg):
        return {lab[1:]: v for lab, v in transfer_column("left", n, l, z, spins, specs, q, cfg + (start,)).items()
                if lab[0] == omega}

    def col_right(cfg):
        return {lab[:-1]: v for lab, v in transfer_column("right", n, l, z, spins, specs, q, (start,) + cfg).items()
                if lab[-1] == omega}

    return fwd, rev, _Dmu(n, spins, q), (col_left, col_right)
