"""Acceptance checks, one marked group per criterion.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion with the measured values underneath.
"""

import itertools
import json
import math
import os
import time

import numpy as np
import pytest

from gbc.baker import BakerSquare, baker_step, inscribe_many, orbit_bits
from gbc.cli import main
from gbc.gibbs import (
    Potential,
    build_markov_gibbs,
    cylinder_measure,
    joint_measure,
    mixing_rate_check,
    parry,
)
from gbc.io import load_fixture, load_measure, load_sequence
from gbc.orbits import sbc_experiment
from gbc.sequences import dnested_sequence
from gbc.shift import enumerate_words, full_shift, golden_mean
from gbc.sp import sp_verdict
from gbc.toral import RectangleSequence, build_toral, fix_count, partition_function, torus_hit_experiment

from oracles import EigenGibbs, snf_fix_count

criterion = pytest.mark.criterion

FIXTURES = ["bernoulli2", "golden-mean-parry", "golden-mean-sbc", "cat-map", "baker", "thm22", "thm23", "prop16"]


@pytest.fixture(scope="session")
def cli_runs(tmp_path_factory):
    """Run every bundled fixture through the CLI, lazily, once per worker count."""
    root = tmp_path_factory.mktemp("cli")
    done = {}

    def get(name, workers=1):
        key = (name, workers)
        if key not in done:
            out = root / f"{name}-w{workers}"
            kind = load_fixture(name)["kind"]
            t0 = time.perf_counter()
            code = main([kind, "--config", f"fixture:{name}", "--workers", str(workers), "--out", str(out)])
            assert code == 0
            with open(out / "summary.json") as fh:
                summary = json.load(fh)
            with open(out / "results.csv", "rb") as fh:
                csv = fh.read()
            done[key] = (summary, csv, time.perf_counter() - t0)
        return done[key]

    return get


# 1 -------------------------------------------------------------------------


def word_table(oracle, M, L):
    """Oracle measures of all ``M**L`` words of length ``L`` (inadmissible ones are zero)."""
    words = np.array(list(itertools.product(range(M), repeat=L)), dtype=np.int64).reshape(-1, L)
    val = oracle.l[words[:, 0]] * oracle.r[words[:, -1]] / oracle.norm
    for t in range(L - 1):
        val = val * oracle.L[words[:, t], words[:, t + 1]] / oracle.lam
    return words, val


def chains():
    gm = golden_mean()
    yield "golden-mean Parry", gm, parry(gm), EigenGibbs(gm.entries)
    A = full_shift(2)
    fn = lambda w: 0.7 * w[0] - 0.4 * w[1] + 0.25 * w[0] * w[1]
    yield "memory-2 weighted 2-shift", A, build_markov_gibbs(A, Potential.from_function(A, 2, fn)), EigenGibbs(
        A.entries, lambda u, v: fn((u, v))
    )


@criterion("1", "cylinder and joint measures equal brute-force enumeration (hull <= 14, 1e-10)")
def test_c1_exact_measure_oracle(note):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    for name, A, g, oracle in chains():
        M = A.size
        tables = {L: word_table(oracle, M, L) for L in range(1, 15)}
        worst_c = 0.0
        count_c = 0
        for L in range(1, 15):
            words, val = tables[L]
            for w, v in zip(words, val):
                if not A.is_admissible(tuple(w)):
                    assert v == 0.0
                    continue
                worst_c = max(worst_c, abs(cylinder_measure(g, A.cylinder(0, tuple(int(s) for s in w))) - v))
                count_c += 1
        worst_j = 0.0
        count_j = 0
        for _ in range(3000):
            hull = int(rng.integers(2, 15))
            words, _ = tables[hull]
            n1 = int(rng.integers(1, hull + 1))
            start2 = int(rng.integers(0, hull))
            n2 = int(rng.integers(1, hull - start2 + 1))
            w1 = words[rng.integers(len(words))][:n1]
            w2 = words[rng.integers(len(words))][start2 : start2 + n2]
            if not (A.is_admissible(tuple(w1)) and A.is_admissible(tuple(w2))):
                continue
            C1 = A.cylinder(0, tuple(int(s) for s in w1))
            C2 = A.cylinder(start2, tuple(int(s) for s in w2))
            lo, hi = min(C1.lo, C2.lo), max(C1.hi, C2.hi)
            hw, hv = tables[hi - lo + 1]
            mask = np.all(hw[:, C1.lo - lo : C1.hi - lo + 1] == w1, axis=1)
            mask &= np.all(hw[:, C2.lo - lo : C2.hi - lo + 1] == w2, axis=1)
            brute = float(hv[mask].sum())
            worst_j = max(worst_j, abs(joint_measure(g, C1, C2) - brute))
            count_j += 1
        note(f"{name}: {count_c} cylinders max err {worst_c:.1e}; {count_j} pairs max err {worst_j:.1e}")
        assert worst_c <= 1e-10 and worst_j <= 1e-10
    elapsed = time.perf_counter() - t0
    note(f"runtime {elapsed:.1f}s")
    assert elapsed < 10


# 2 -------------------------------------------------------------------------


@criterion("2", "fitted mixing rate equals 1/lambda^2 within 0.02; envelope holds for every pair")
def test_c2_mixing_rate(note):
    g = parry(golden_mean())
    A = g.base
    words = [w for n in (1, 2, 3) for w in enumerate_words(A, n)]
    pairs = []
    for gap in range(1, 21):
        for w1 in words:
            for w2 in words:
                C1 = A.cylinder(0, w1)
                pairs.append((C1, A.cylinder(C1.hi + gap, w2)))
    fit = mixing_rate_check(g, pairs)
    target = 1 / ((1 + 5**0.5) / 2) ** 2
    note(f"theta3_emp = {fit.theta3_emp:.6f} vs {target:.6f} over {len(pairs)} pairs")
    assert abs(fit.theta3_emp - target) <= 0.02
    for C1, C2 in pairs:
        gap = C2.lo - C1.hi
        dev = abs(joint_measure(g, C1, C2) / (cylinder_measure(g, C1) * cylinder_measure(g, C2)) - 1)
        assert dev <= fit.c3 * fit.theta3_emp**gap * (1 + 1e-9)


# 3 -------------------------------------------------------------------------


@criterion("3", "SP dichotomy: D-nested bounded (<10% growth); thm22 growing with >5x ratio factor")
def test_c3_dnested_bounded(note):
    t0 = time.perf_counter()
    g = parry(golden_mean())
    growths = []
    for seed in range(12):
        D = 1 + seed % 3
        seq = dnested_sequence(g, 400, D=D, c=1.0, cap=0.5, seed=seed, max_length=10)
        rep = sp_verdict(g, seq, [25, 50, 100, 200, 400])
        assert rep.verdict == "bounded"
        growths.append(rep.sup_growth)
    note(f"D-nested: 12 random sequences, max sup growth {max(growths):.3f}")
    assert max(growths) < 0.10
    assert time.perf_counter() - t0 < 120


@criterion("3", "SP dichotomy: D-nested bounded (<10% growth); thm22 growing with >5x ratio factor")
def test_c3_thm22_growing(note, cli_runs):
    summary, _, elapsed = cli_runs("thm22")
    factor = summary["ratio_sK_over_sK2"]
    note(f"thm22: verdict {summary['verdict']}, ratio(s_K)/ratio(s_K/2) = {factor:.3f} (needs > 5)")
    assert summary["verdict"] == "growing"
    assert elapsed < 120
    assert factor > 5


@criterion("3c", "companion: thm22 ratio tracks (1 - mu)(2K + 1)/3, i.e. grows like sqrt(E_N)")
def test_c3_companion_growth_law(note, cli_runs):
    summary, csv, _ = cli_runs("thm22")
    rows = [line.split(",") for line in csv.decode().strip().split("\n")[1:]]
    full = {int(r[1]): (float(r[2]), float(r[3]), float(r[4])) for r in rows if r[0] == "1"}
    g = parry(golden_mean())
    mu = cylinder_measure(g, g.base.cylinder(0, (0,)))
    for N, (sumR, sumMu, ratio) in sorted(full.items()):
        K = int(round((math.sqrt(8 * N + 1) - 1) / 2))
        assert ratio == pytest.approx((1 - mu) * (2 * K + 1) / 3, rel=0.05)
    Ns = sorted(full)
    note(f"sum R grows by {full[Ns[-1]][0] / full[Ns[len(Ns) // 2 - 1]][0]:.2f}x from s_K/2 to s_K")


# 4 -------------------------------------------------------------------------


@criterion("4", "sBC Monte Carlo: median S/E in [0.85, 1.15]; exponent <= 0.75 for >= 90% of 200 seeds")
def test_c4_sbc_monte_carlo(note):
    t0 = time.perf_counter()
    cfg = load_fixture("golden-mean-sbc")
    g = load_measure(cfg["measure"])
    seq = load_sequence(g, cfg["sequence"])
    stats = sbc_experiment(g, seq, cfg["N"], num_samples=200, seed=cfg["seed"])
    med = stats.median_ratio()
    frac = float(np.mean(stats.exponents <= 0.75))
    elapsed = time.perf_counter() - t0
    note(f"E_N = {stats.E[-1]:.2f}, median ratio {med:.4f}, exponent <= 0.75 for {frac:.1%}, {elapsed:.1f}s")
    assert 45 <= stats.E[-1] <= 55
    assert 0.85 <= med <= 1.15
    assert frac >= 0.9
    assert elapsed < 300


# 5 -------------------------------------------------------------------------


@criterion("5", "counterexamples: thm23 tail < 0.05, mass +5%/decade, >= 90% stabilized; prop16 stabilized")
def test_c5_thm23(note, cli_runs):
    summary, _, elapsed = cli_runs("thm23")
    note(
        f"thm23: N = {summary['N']}, tail {summary['base_tail_top_decade']:.4f}, "
        f"mass growth {summary['mass_growth_top_decade']:.4f}, stabilized {summary['simulation']['stabilized_fraction']:.2f}, "
        f"{elapsed:.0f}s"
    )
    assert 0.9e6 <= summary["N"] <= 1.1e6
    assert summary["base_tail_top_decade"] < 0.05
    assert summary["mass_growth_top_decade"] >= 0.05
    assert summary["simulation"]["stabilized_fraction"] >= 0.9


@criterion("5", "counterexamples: thm23 tail < 0.05, mass +5%/decade, >= 90% stabilized; prop16 stabilized")
def test_c5_prop16(note, cli_runs):
    summary, _, _ = cli_runs("prop16")
    note(f"prop16: N = {summary['N']}, stabilized {summary['simulation']['stabilized_fraction']:.2f}")
    assert summary["simulation"]["stabilized_fraction"] >= 0.9


# 6 -------------------------------------------------------------------------


@criterion("6", "cat map: Z_n lambda^-n in [1 - 3 lambda^-n, 1] for n <= 30; fix_count equals SNF for n <= 10")
def test_c6_partition_and_fixed_points(note):
    T = build_toral([[2, 1], [1, 1]])
    lam = T.lambda_u
    worst = 0.0
    for n in range(1, 31):
        z = partition_function(T, 0.0, n) * math.exp(-n * math.log(lam))
        assert 1 - 3 * lam**-n <= z <= 1 + 1e-15
        worst = max(worst, (1 - z) * lam**n)
    for n in range(1, 11):
        assert fix_count(T, n) == snf_fix_count([[2, 1], [1, 1]], n)
    assert (fix_count(T, 2), fix_count(T, 3)) == (5, 16)
    note(f"max (1 - Z_n lambda^-n) lambda^n = {worst:.4f} (bound 3)")


# 7 -------------------------------------------------------------------------


@criterion("7", "cat map squares, Leb(R_n) = min(0.001, 1/n), E_N ~ 50: median S/E in [0.85, 1.15]; drift plateau")
def test_c7_literal_law(note):
    T = build_toral([[2, 1], [1, 1]])
    N = 100_000
    rects = RectangleSequence.from_law(T, (0.3, 0.6), N, c=1.0, cap=0.001)
    E = float(rects.measures.sum())
    needed = 1000 * math.exp(50 - 1)
    note(f"literal law: E_N = {E:.2f} at N = {N}; E_N = 50 needs N ~ {needed:.1e}")
    t0 = time.perf_counter()
    stats = torus_hit_experiment(T, rects, N, 200, seed=1)
    assert 45 <= stats.E[-1] <= 55
    assert 0.85 <= stats.median_ratio() <= 1.15
    assert time.perf_counter() - t0 < 300


@criterion("7", "cat map squares, Leb(R_n) = min(0.001, 1/n), E_N ~ 50: median S/E in [0.85, 1.15]; drift plateau")
def test_c7_drift_plateau(note, cli_runs):
    summary, _, _ = cli_runs("cat-map")
    d = summary["drift"]
    note(f"drift: never hit {d['never_hit_fraction']:.3f}, all-or-nothing {d['all_or_nothing_fraction']:.3f}, E_N = {d['E_N']:.0f}")
    assert d["all_or_nothing_fraction"] == 1.0
    assert d["never_hit_fraction"] >= 0.9


@criterion("7c", "companion: Leb(R_n) = min(0.001, c/n) with c = 18.6 (E_N ~ 50): median S/E in [0.85, 1.15]")
def test_c7_companion_calibrated(note, cli_runs):
    summary, _, elapsed = cli_runs("cat-map")
    t = summary["targets"]
    note(f"E_N = {t['E'][-1]:.2f}, median ratio {t['median_ratio']:.4f}, {elapsed:.1f}s")
    assert 45 <= t["E"][-1] <= 55
    assert 0.85 <= t["median_ratio"] <= 1.15
    assert elapsed < 300


# 8 -------------------------------------------------------------------------


@criterion("8", "baker: geometric and symbolic square membership agree on 1e5 pairs; area ratio >= 1/(8 pi)")
def test_c8_coding_oracle(note):
    rng = np.random.default_rng(8)
    S, steps = 2500, 40  # 2500 orbits x 40 iterates = 1e5 pairs
    seeds = rng.integers(0, 2**63, S)
    bits = np.stack([orbit_bits(int(s), -63, 62 + steps) for s in seeds])  # w_-63 .. w_{62+steps}
    off = 63
    X = np.zeros(S, dtype=np.uint64)
    Y = np.zeros(S, dtype=np.uint64)
    for t in range(63):
        X = (X << np.uint64(1)) | bits[:, off + t].astype(np.uint64)
        Y = (Y << np.uint64(1)) | bits[:, off - 1 - t].astype(np.uint64)
    mismatches = hits = 0
    for n in range(steps):
        k = rng.integers(1, 11, S)
        # geometric membership from the 63-bit point, top k bits of each coordinate
        gi = (X >> (np.uint64(63) - k.astype(np.uint64))).astype(np.int64)
        gj = (Y >> (np.uint64(63) - k.astype(np.uint64))).astype(np.int64)
        # half the squares contain the point, half are random cells
        own = rng.random(S) < 0.5
        i = np.where(own, gi, rng.integers(0, 2**k))
        j = np.where(own, gj, rng.integers(0, 2**k))
        geo = (gi == i) & (gj == j)
        for s in range(S):
            C = BakerSquare(int(k[s]), int(i[s]), int(j[s])).to_cylinder()
            sym = tuple(bits[s, off + n + C.lo : off + n + C.hi + 1]) == C.word
            mismatches += sym != bool(geo[s])
            hits += sym
        X, Y = baker_step(X, Y)
    r = rng.uniform(1e-5, 0.25, 10_000)
    cx = rng.uniform(0, 1, 10_000) * (1 - 2.0002 * r) + 1.0001 * r
    cy = rng.uniform(0, 1, 10_000) * (1 - 2.0002 * r) + 1.0001 * r
    level, _, _ = inscribe_many(cx, cy, r)
    ratio = 4.0**-level / (math.pi * r * r)
    note(f"{S * steps} pairs, {hits} inside, {mismatches} mismatches; min area ratio {ratio.min():.4f} (bound {1 / (8 * math.pi):.4f})")
    assert mismatches == 0
    assert ratio.min() >= 1 / (8 * math.pi)


# 9 -------------------------------------------------------------------------


@pytest.mark.parametrize("name", FIXTURES)
@criterion("9", "byte-identical results.csv for every bundled experiment across worker counts")
def test_c9_determinism(name, note, cli_runs):
    _, a, _ = cli_runs(name, 1)
    _, b, _ = cli_runs(name, 4)
    note(f"{name}: {len(a)} bytes, identical={a == b}")
    assert a == b
