"""Monte Carlo hit counts for shrinking cylinders on the golden-mean shift.

Run with ``python demos/shrinking_targets.py``.
"""

import numpy as np

from gbc.gibbs import parry
from gbc.orbits import sbc_experiment
from gbc.sequences import dnested_sequence
from gbc.shift import golden_mean

g = parry(golden_mean())
seq = dnested_sequence(g, 1000, D=2, c=20.0, cap=0.5, seed=1)
stats = sbc_experiment(g, seq, 1000, num_samples=200, seed=1)

# Hits divided by expected hits settle near one; the deviation grows like E^a with a < 1.
print("checkpoint  E_n     median S/E   [5%, 95%]")
q = stats.quantiles
for j, n in enumerate(stats.checkpoints):
    print(f"{int(n):10d}  {stats.E[j]:6.2f}  {q['0.5'][j]:10.3f}   [{q['0.05'][j]:.2f}, {q['0.95'][j]:.2f}]")
a = stats.exponents
print(f"error exponent: median {np.nanmedian(a):.3f}, share <= 0.75: {np.mean(a <= 0.75):.1%}")
