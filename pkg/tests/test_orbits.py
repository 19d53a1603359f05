import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbc import rng
from gbc.errors import MassTooSmall
from gbc.gibbs import bernoulli, parry
from gbc.orbits import (
    error_exponent,
    geometric_checkpoints,
    hit_count,
    sample_orbit,
    sbc_experiment,
    simulate_hits,
)
from gbc.sequences import CylinderSequence, constant_sequence, expected_hits_curve, dnested_sequence, prop16_sequence, run_base
from gbc.shift import golden_mean


@pytest.fixture(scope="module")
def gm():
    return parry(golden_mean())


def test_rng_is_counter_based():
    a = rng.raw(5, 1, 0, 100)
    assert np.array_equal(a[40:60], rng.raw(5, 1, 40, 60))
    assert not np.array_equal(a, rng.raw(6, 1, 0, 100))
    u = rng.uniforms(5, 1, 0, 10**5)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / u.size)


def test_bernoulli_frequency():
    x = sample_orbit(bernoulli([0.5, 0.5]), 11)
    s = x.symbols(0, 10**5 - 1)
    assert abs(s.mean() - 0.5) <= 3 * math.sqrt(0.25 / s.size)


def test_golden_mean_frequency_and_admissibility(gm):
    x = sample_orbit(gm, 12)
    s = x.symbols(-50_000, 49_999)
    p0 = gm.p[0]
    # asymptotic variance of a two-state chain with second eigenvalue rho
    rho = np.trace(gm.P) - 1
    var = p0 * (1 - p0) * (1 + rho) / (1 - rho)
    assert abs(np.mean(s == 0) - p0) <= 3 * math.sqrt(var / s.size)
    assert not np.any((s[:-1] == 1) & (s[1:] == 1))


def test_reversed_chain_rows(gm):
    assert np.abs(gm.Q.sum(axis=1) - 1).max() < 1e-15
    # pairs straddling the origin follow the stationary two-symbol law
    counts = np.zeros((2, 2))
    for seed in range(4000):
        s = sample_orbit(gm, seed).symbols(-1, 0)
        counts[s[0], s[1]] += 1
    want = gm.p[:, None] * gm.P * 4000
    assert np.all(np.abs(counts - want) <= 4 * np.sqrt(want + 1))


def test_extension_order_does_not_matter(gm):
    a = sample_orbit(gm, 99)
    a.symbols(-10, 10)
    a.symbols(-500, 700)
    b = sample_orbit(gm, 99)
    assert np.array_equal(b.symbols(-500, 700), a.symbols(-500, 700))
    assert a.window[0] <= -500 and a.window[1] >= 700


def test_planted_hits(gm):
    x = sample_orbit(gm, 3)
    cyls = []
    for n in range(1, 201):
        lo = -(n % 3)
        word = x.symbols(n + lo, n + lo + 4)
        cyls.append(gm.base.cylinder(lo, word))
    S = hit_count(x, CylinderSequence(cyls), 200)
    assert np.array_equal(S, np.arange(1, 201))


def test_constant_sequence_binomial_band():
    g = bernoulli([0.5, 0.5])
    seq = constant_sequence(g.base.cylinder(0, [1, 1, 0]), 20_000)
    x = sample_orbit(g, 8)
    S = hit_count(x, seq, 20_000)[-1]
    q = 1 / 8
    # overlapping windows of a word with no self-overlap: variance below q(1-q) per step
    assert abs(S / 20_000 - q) <= 3 * math.sqrt(q * (1 - q) / 20_000) * 1.5


def test_statistics_invariants(gm):
    seq = dnested_sequence(gm, 1000, D=2, c=20, seed=1)
    stats = simulate_hits(gm, seq, 1000, 30, seed=4)
    assert np.all(np.diff(stats.S, axis=1) >= 0)
    assert np.all(stats.S <= stats.checkpoints[None, :])
    E = expected_hits_curve(gm, seq, 1000)[stats.checkpoints - 1]
    assert np.allclose(stats.E, E, rtol=0, atol=1e-10)


def test_determinism_across_workers(gm):
    seq = dnested_sequence(gm, 500, D=2, c=20, seed=2)
    a = simulate_hits(gm, seq, 500, 16, seed=9, workers=1)
    b = simulate_hits(gm, seq, 500, 16, seed=9, workers=4)
    assert np.array_equal(a.S, b.S) and np.array_equal(a.seeds, b.seeds)
    assert a.to_csv("simulate", "h") == b.to_csv("simulate", "h")


def test_unbiased_far_apart_targets():
    g = bernoulli([0.3, 0.7])
    # placed windows [2n, 2n + 1] are disjoint, so the indicators are independent
    seq = CylinderSequence([g.base.cylinder(n, [0, 1]) for n in range(1, 401)])
    stats = simulate_hits(g, seq, 400, 300, seed=21)
    S = stats.S[:, -1]
    assert abs(S.mean() - stats.E[-1]) <= 4 * math.sqrt(S.var(ddof=1) / S.size)


def test_mass_precondition(gm):
    seq = constant_sequence(gm.base.cylinder(0, [1, 0, 1, 0, 1]), 100)
    with pytest.raises(MassTooSmall):
        sbc_experiment(gm, seq, 100, num_samples=2)


def test_sbc_constant_sequence(gm):
    C = gm.base.cylinder(0, [0, 1])
    seq = constant_sequence(C, 4000)
    stats = sbc_experiment(gm, seq, 4000, num_samples=40, seed=5)
    assert 0.9 <= stats.median_ratio() <= 1.1


def test_prop16_stabilizes():
    g = bernoulli([0.5, 0.5])
    seq = prop16_sequence(g, run_base(g.base, 1, 14))
    N = len(seq)
    stats = simulate_hits(g, seq, N, 60, seed=2, checkpoints=[N // 10, N])
    assert np.mean(stats.S[:, 0] == stats.S[:, 1]) >= 0.9


def test_checkpoints_and_exponent():
    cps = geometric_checkpoints(1000)
    assert cps[-1] == 1000 and np.all(np.diff(cps) > 0)
    E = np.geomspace(5, 50, 10)
    assert error_exponent(E, 2 * np.sqrt(E), intercept=True) == pytest.approx(0.5)
    assert error_exponent(E, E**0.5) == pytest.approx(0.5)
    assert math.isnan(error_exponent(E, np.zeros_like(E)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(-300, 0), st.integers(0, 300))
def test_orbit_regeneration(seed, lo, hi):
    g = parry(golden_mean())
    a = sample_orbit(g, seed).symbols(lo, hi)
    b = sample_orbit(g, seed)
    b.symbols(hi // 2, hi)
    assert np.array_equal(a, b.symbols(lo, hi))
