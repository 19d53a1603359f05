"""Golden-mean shift: exact cylinder measures and the decay of correlations.

Run with ``python demos/measures_and_mixing.py``.
"""

from gbc.gibbs import cylinder_measure, joint_measure, mixing_rate_check, parry
from gbc.shift import enumerate_words, golden_mean

A = golden_mean()
g = parry(A)
print(f"Parry measure: entropy log(lambda) with lambda = {g.lam:.6f}")

# The measure of a word depends only on its first and last symbols and length.
for w in [(0,), (1,), (0, 0), (0, 1), (1, 0), (0, 0, 0), (0, 1, 0)]:
    print(f"  mu[{''.join(map(str, w))}] = {cylinder_measure(g, A.cylinder(0, w)):.6f}")

# Two cylinders separated by a gap become independent geometrically fast.
C1 = A.cylinder(0, (0, 1))
C2w = (1, 0)
print("gap  mu(C1 and C2) / (mu(C1) mu(C2)) - 1")
for gap in (1, 2, 4, 8, 16):
    C2 = A.cylinder(C1.hi + gap, C2w)
    dev = joint_measure(g, C1, C2) / (cylinder_measure(g, C1) * cylinder_measure(g, C2)) - 1
    print(f"{gap:3d}  {dev:+.3e}")

words = [w for n in (1, 2) for w in enumerate_words(A, n)]
pairs = [(A.cylinder(0, a), A.cylinder(len(a) - 1 + gap, b)) for gap in range(1, 21) for a in words for b in words]
fit = mixing_rate_check(g, pairs)
print(f"fitted rate {fit.theta3_emp:.6f}; 1/lambda^2 = {1 / g.lam**2:.6f}; envelope constant {fit.c3:.3f}")
