import math
from collections import Counter

import numpy as np
import pytest

from uqvertex.duality import transfer_column
from uqvertex.fock import full, vacuum
from uqvertex.qarith import as_float, scalar
from uqvertex.qhahn import QHahnParams, discrete_step_column, phi_prime_rate, phi_weight
from uqvertex.sim import (
    QHahnSampler,
    SamplingError,
    SimSpec,
    VertexSampler,
    _draw,
    _table,
    estimate_duality,
    qhahn_instance,
    replication_rng,
    run_continuous,
    sample_observable,
    step_parallel_qhahn,
    step_sequential,
    summarize,
    vertex_instance,
)
from uqvertex.vertex import s_matrix

N = 100_000
PARAMS1 = QHahnParams.make(1, "1/2", "1/3", "1/5")
PARAMS2 = QHahnParams.make(2, "1/2", "1/3", "1/5")


def _tv(counts: Counter, exact: dict, total: int) -> float:
    keys = set(counts) | set(exact)
    return 0.5 * sum(abs(counts.get(k, 0) / total - as_float(exact.get(k, 0))) for k in keys)


def test_streams_are_reproducible_and_distinct():
    a = replication_rng(7, 3).random(4)
    b = replication_rng(7, 3).random(4)
    c = replication_rng(7, 4).random(4)
    d = replication_rng(8, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_stream_key_range_is_checked():
    with pytest.raises(ValueError):
        replication_rng(-1, 0)
    with pytest.raises(ValueError):
        replication_rng(0, 2**64)


def test_table_validation():
    with pytest.raises(SamplingError):
        _table(["a", "b"], [1.1, -0.1])
    with pytest.raises(SamplingError):
        _table(["a", "b"], [0.5, 0.4])
    outs, cdf = _table(["a", "b"], [1.0, -1e-14])
    assert cdf[-1] == 1.0


def test_empty_lattice_is_unchanged():
    rng = replication_rng(1, 0)
    empty = ((0, 0),) * 3
    assert step_parallel_qhahn(empty, QHahnSampler(PARAMS2), rng, "left") == empty
    sampler = VertexSampler(1, 1, 5, (1, 1), (1, 1), scalar("1/2"))
    blank = (vacuum(1, 1),) * 2
    cfg, aux = step_sequential(blank, sampler, rng, "left", aux_in="Omega")
    assert cfg == blank and aux == vacuum(1, 1)


def test_vertex_one_step_total_variation():
    q, z = scalar("1/2"), scalar(5)
    spins, specs = (1, 1), (1, 1)
    sampler = VertexSampler(1, 1, z, spins, specs, q)
    start = ((1, 0), (0, 1))
    exact = {(lab[1:], lab[0]): v
             for lab, v in transfer_column("left", 1, 1, z, spins, specs, q, start + (full(1, 1),)).items()}
    rng = replication_rng(11, 0)
    counts = Counter(step_sequential(start, sampler, rng, "left") for _ in range(N))
    assert _tv(counts, exact, N) < 4 / math.sqrt(N)


def test_qhahn_single_site_marginal():
    beta = (3,)
    sampler = QHahnSampler(PARAMS1)
    rng = replication_rng(5, 0)
    counts = Counter(step_parallel_qhahn(((0,), beta), sampler, rng, "left")[0] for _ in range(N))
    exact = {(g,): phi_weight((g,), beta, PARAMS1.lam, PARAMS1.mu, PARAMS1.q) for g in range(4)}
    assert _tv(counts, exact, N) < 4 / math.sqrt(N)


def test_qhahn_two_step_law_matches_exact_columns():
    start = ((1, 0), (0, 1), (1, 0))
    sampler = QHahnSampler(PARAMS2)
    rng = replication_rng(9, 0)
    n = 40_000
    counts = Counter()
    for _ in range(n):
        cfg = step_parallel_qhahn(start, sampler, rng, "right")
        counts[step_parallel_qhahn(cfg, sampler, rng, "right")] += 1
    dist = {}
    for mid, p in discrete_step_column(start, PARAMS2, "right").items():
        for end, w in discrete_step_column(mid, PARAMS2, "right").items():
            dist[end] = dist.get(end, 0) + p * w
    assert _tv(counts, dist, n) < 4 / math.sqrt(n)


def test_infinite_spectral_parameter_respects_blocking():
    q = scalar("1/2")
    sampler = VertexSampler(2, 1, "inf", (2,), (1,), q)
    local = s_matrix(2, 1, 2, q, "inf")
    rng = replication_rng(3, 0)
    sampled = 0
    for aux, site in local.domain.labels:
        allowed = {(a, s) for (a, s), v in local.column((aux, site)).items() if v != 0}
        table = sampler.table(0, "left", (site, aux))
        for u in rng.random(500):
            new_aux, new_site = _draw(table, u)
            assert (new_aux, new_site) in allowed
            sampled += 1
    assert sampled == 500 * len(local.domain.labels)


def test_conservation_over_long_runs():
    sampler = QHahnSampler(PARAMS2)
    rng = replication_rng(2, 0)
    cfg = ((2, 1), (0, 1), (1, 0))
    for _ in range(300):
        cfg = step_parallel_qhahn(cfg, sampler, rng, "right")
    assert sum(c[0] for c in cfg) == 3 and sum(c[1] for c in cfg) == 2


def test_continuous_zero_time_is_identity():
    cfg = ((1, 1), (0, 2))
    assert run_continuous(cfg, QHahnSampler(PARAMS2), replication_rng(0, 0), 0.0) == cfg


def test_continuous_single_particle_jump_probability():
    params = QHahnParams.make(1, "1/2", 0, 0)
    rate = as_float(phi_prime_rate((1,), (1,), 0, "1/2"))
    t = 0.7
    n = 20_000
    moved = 0
    sampler = QHahnSampler(params)
    for i in range(n):
        out = run_continuous(((1,), (0,)), sampler, replication_rng(4, i), t, "right")
        moved += out == ((0,), (1,))
    p = 1 - math.exp(-rate * t)
    assert abs(moved / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def test_continuous_jump_time_mean():
    params = QHahnParams.make(1, "1/2", 0, 0)
    rate = as_float(phi_prime_rate((1,), (1,), 0, "1/2"))
    sampler = QHahnSampler(params)
    # the jump time is the first time at which the particle has left, located by bisection over t
    n = 4000
    times = []
    for i in range(n):
        lo, hi = 0.0, 50.0
        for _ in range(30):
            mid = (lo + hi) / 2
            if run_continuous(((1,), (0,)), sampler, replication_rng(6, i), mid, "right") == ((1,), (0,)):
                lo = mid
            else:
                hi = mid
        times.append(hi)
    est = summarize(np.asarray(times), exact=1 / rate)
    assert est.within()


def test_empty_dual_configuration_is_a_constant_observable():
    e = tuple(vacuum(1, 2) for _ in range(3))
    fwd, rev, functional, columns = vertex_instance(1, 1, (2, 2, 2), e, e, "1/2", 2, 500, 3)
    f, r = estimate_duality(fwd, rev, functional, columns)
    target = (scalar(2) + scalar("1/2")) ** 3
    assert f.mean == r.mean == as_float(target)
    assert f.standard_error == r.standard_error == 0.0

    fwd, rev, functional, columns = qhahn_instance(1, 3, ((1,), (0,), (2,)), ((0,),) * 3,
                                                   "1/2", "1/3", "1/5", 2, 500, 3)
    f, _ = estimate_duality(fwd, rev, functional, columns)
    assert f.mean == 1.0 and f.standard_error == 0.0


def test_small_duality_estimate_agrees_with_exact():
    fwd, rev, functional, columns = qhahn_instance(1, 3, ((1,), (0,), (1,)), ((0,), (1,), (1,)),
                                                   "1/2", "1/3", "1/5", 2, 5000, 17)
    f, r = estimate_duality(fwd, rev, functional, columns)
    assert f.exact == r.exact
    assert f.within() and r.within() and f.within(r)


def test_sampling_is_deterministic_and_worker_independent():
    spec = SimSpec("qhahn-parallel", "right", ((1, 0), (0, 1), (1, 1)), 3, 400, 21, qhahn=PARAMS2)

    def observable(cfg):
        return float(cfg[2][0] + 2 * cfg[2][1])

    one = sample_observable(spec, observable)
    again = sample_observable(spec, observable)
    split = sample_observable(spec, _Weighted(), workers=2)
    assert np.array_equal(one, again)
    assert np.array_equal(one, split)


class _Weighted:
    def __call__(self, cfg):
        return float(cfg[2][0] + 2 * cfg[2][1])


def test_unknown_model_is_rejected():
    spec = SimSpec("mystery", "right", ((0,),), 1, 1, 0)
    with pytest.raises(ValueError):
        sample_observable(spec, float)
