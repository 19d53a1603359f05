import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbc.errors import WindowTooLarge, ZeroMassWindow
from gbc.gibbs import Potential, bernoulli, build_markov_gibbs, correlation, cylinder_measure, parry
from gbc.sequences import CylinderSequence, constant_sequence, dnested_sequence, thm22_counterexample
from gbc.shift import golden_mean
from gbc.sp import placed_correlations, sp_ratio, sp_verdict, window_sums


def direct_sum(g, seq, M, N):
    """Double loop over correlation terms; the definition, term by term."""
    total = 0.0
    for m in range(M, N + 1):
        for n in range(M, N + 1):
            total += correlation(g, seq[m], seq[n], m, n).value
    mass = sum(cylinder_measure(g, seq[n]) for n in range(M, N + 1))
    return total, mass


@pytest.fixture(scope="module")
def gm():
    return parry(golden_mean())


def test_grouped_sum_equals_direct_loop(gm):
    seq = thm22_counterexample(gm, gm.base.cylinder(0, [0, 1]), lambda k: k, 6)
    for M, N in [(1, 21), (3, 17), (5, 5)]:
        R, mu = placed_correlations(gm, seq.placement(N))
        got = window_sums(R, mu, seq.placement(N).index, M, N)
        want = direct_sum(gm, seq, M, N)
        assert got[0] == pytest.approx(want[0], abs=1e-12)
        assert got[1] == pytest.approx(want[1], abs=1e-12)


def test_grouped_sum_equals_direct_loop_free_sequence(gm):
    seq = dnested_sequence(gm, 40, D=3, c=5, cap=0.5, seed=2)
    got = window_sums(*placed_correlations(gm, seq.placement(40)), seq.placement(40).index, 4, 40)
    want = direct_sum(gm, seq, 4, 40)
    assert got[0] == pytest.approx(want[0], abs=1e-12)


def test_bernoulli_disjoint_windows_only_diagonal():
    g = bernoulli([0.5, 0.5])
    C = g.base.cylinder(0, [1, 0])
    # sigma^-n C sits on [n, n + 1]; windows of n and n + 2 are disjoint
    seq = CylinderSequence([C if n % 2 else g.base.cylinder(0, [1]) for n in range(1, 41)])
    N = 40
    mus = np.array([cylinder_measure(g, seq[n]) for n in range(1, N + 1)])
    R, mu = placed_correlations(g, seq.placement(N))
    sumR, sumMu = window_sums(R, mu, seq.placement(N).index, 1, N)
    # only diagonal and overlapping neighbours are correlated; check against direct loop
    assert sumR == pytest.approx(direct_sum(g, seq, 1, N)[0], abs=1e-12)
    assert sumMu == pytest.approx(mus.sum(), abs=1e-12)


def test_bernoulli_far_apart_is_diagonal():
    g = bernoulli([0.5, 0.5])
    cyl = [g.base.cylinder(3 * n, [1]) for n in range(1, 31)]
    seq = CylinderSequence(cyl)
    mus = np.array([cylinder_measure(g, c) for c in cyl])
    assert sp_ratio(g, seq, 1, 30) == pytest.approx(np.sum(mus * (1 - mus)) / mus.sum(), abs=1e-12)


def test_single_index_ratio(gm):
    seq = dnested_sequence(gm, 10, seed=3)
    mu = cylinder_measure(gm, seq[7])
    assert sp_ratio(gm, seq, 7, 7) == pytest.approx(1 - mu, abs=1e-14)


def test_thm22_lower_bound(gm):
    base = gm.base.cylinder(0, [0])
    seq = thm22_counterexample(gm, base, lambda k: k, 20)
    mu = cylinder_measure(gm, base)
    K = 20
    N = int(seq.s[-1])
    ratio = sp_ratio(gm, seq, 1, N)
    ls = np.arange(1, K + 1)
    # each block contributes l^2 mu (1 - mu) from identical placed targets
    within = (ls**2).sum() * mu * (1 - mu) / (ls.sum() * mu)
    assert ratio >= 0.9 * within
    assert ratio == pytest.approx((1 - mu) * (2 * K + 1) / 3, rel=0.1)


def test_verdicts(gm):
    C = gm.base.cylinder(0, [0, 1])
    rep = sp_verdict(gm, constant_sequence(C, 800), [100, 200, 400, 800])
    assert rep.verdict == "bounded"
    t = thm22_counterexample(gm, gm.base.cylinder(0, [0]), lambda k: k, 40)
    rep = sp_verdict(gm, t, [int(t.s[9]), int(t.s[19]), int(t.s[39])])
    assert rep.verdict == "growing"
    # all off-diagonal terms are positive here, so the sum is positive
    assert all(r[2] > 0 for r in rep.rows)


def test_potential_shift_invariance():
    A = golden_mean()
    phi = Potential.from_function(A, 2, lambda w: 0.3 * w[0] - 0.1 * w[1])
    g1 = build_markov_gibbs(A, phi)
    g2 = build_markov_gibbs(A, phi.shifted(2.5))
    seq = dnested_sequence(g1, 80, seed=5)
    assert sp_ratio(g1, seq, 2, 80) == pytest.approx(sp_ratio(g2, seq, 2, 80), abs=1e-10)


def test_errors(gm):
    C = gm.base.cylinder(0, [0])
    seq = constant_sequence(C, 6000)
    with pytest.raises(WindowTooLarge):
        sp_ratio(gm, seq, 1, 5001)
    R = np.zeros((1, 1))
    with pytest.raises(ZeroMassWindow):
        window_sums(R, np.zeros(1), np.zeros(3, dtype=np.int64), 1, 3)


def test_worker_count_does_not_change_matrix(gm):
    seq = dnested_sequence(gm, 200, seed=6)
    pl = seq.placement(200)
    R1, _ = placed_correlations(gm, pl, workers=1)
    R3, _ = placed_correlations(gm, pl, workers=3)
    assert np.array_equal(R1, R3)


def test_csv_layout(gm):
    rep = sp_verdict(gm, dnested_sequence(gm, 64, seed=1), [32, 64])
    text = rep.to_csv("sp-check", "abc")
    lines = text.split("\n")
    assert lines[0] == "M,N,sumR,sumMu,ratio,kind,config_hash"
    assert "\r" not in text


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.sampled_from([1.0, 2.0, 3.0]))
def test_dnested_growth_small(seed, D, c):
    g = parry(golden_mean())
    seq = dnested_sequence(g, 400, D=D, c=c, cap=0.5, seed=seed, max_length=10)
    assert max(len(x) for x in seq) <= 10
    rep = sp_verdict(g, seq, [50, 100, 200, 400])
    assert rep.sup_growth <= 0.10, rep.sup_growth
