"""Summable-product ratio: bounded for nested targets, growing for drifting blocks.

Run with ``python demos/sp_dichotomy.py``.
"""

from gbc.gibbs import parry
from gbc.sequences import dnested_sequence, thm22_counterexample
from gbc.shift import golden_mean
from gbc.sp import sp_verdict

A = golden_mean()
g = parry(A)

# Targets whose centres stay within a window of width D: the ratio plateaus.
seq = dnested_sequence(g, 400, D=2, c=1.0, cap=0.5, seed=1, max_length=10)
rep = sp_verdict(g, seq, [25, 50, 100, 200, 400])
print(f"nested targets: verdict {rep.verdict}, growth {rep.sup_growth:.3f}")
for N, r in zip(*rep.ratios_at(1)):
    print(f"  N = {int(N):4d}  ratio {r:.4f}")

# One short cylinder repeated over blocks of length k: the ratio keeps growing.
seq = thm22_counterexample(g, A.cylinder(0, (0,)), lambda k: k, 60)
grid = [k * (k + 1) // 2 for k in range(5, 61, 5)]
rep = sp_verdict(g, seq, grid)
print(f"block targets: verdict {rep.verdict}, growth {rep.sup_growth:.3f}")
for N, r in zip(*rep.ratios_at(1)):
    print(f"  N = {int(N):4d}  ratio {r:.4f}")
