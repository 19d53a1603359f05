"""Hyperbolic toral automorphism and the baker map.

Run with ``python demos/torus_and_baker.py``.
"""

import math

import numpy as np

from gbc.baker import baker_hit_experiment, shrinking_balls
from gbc.toral import RectangleSequence, build_toral, fix_count, partition_function, torus_hit_experiment

T = build_toral([[2, 1], [1, 1]])
print(f"cat map: expanding eigenvalue {T.lambda_u:.6f}")
print("n  fixed points  Z_n / lambda^n")
for n in (1, 2, 3, 5, 10, 20):
    print(f"{n:2d}  {fix_count(T, n):12d}  {partition_function(T, 0.0, n) / T.lambda_u**n:.8f}")

# Squares of measure min(0.001, c/n) at a fixed centre; c is chosen so that E_N is about 50.
N = 100_000
rects = RectangleSequence.from_law(T, (0.3, 0.6), N, c=18.6, cap=0.001)
stats = torus_hit_experiment(T, rects, N, 100, seed=1)
print(f"torus squares: E_N = {stats.E[-1]:.2f}, median S/E = {stats.median_ratio():.3f}")

# Balls of area 3/n and the largest dyadic squares inside them.
rep = baker_hit_experiment(shrinking_balls((0.4, 0.55), N, c=3.0), N, 50, seed=1)
print(f"baker: min square/ball area {rep.area_ratio.min():.4f} (>= 1/(8 pi) = {1 / (8 * math.pi):.4f})")
print(f"  balls   E_N = {rep.balls.E[-1]:.1f}, median S/E = {rep.balls.median_ratio():.3f}")
print(f"  squares E_N = {rep.squares.E[-1]:.1f}, median S/E = {rep.squares.median_ratio():.3f}")
print(f"  share of orbits with square hits <= ball hits: {np.mean(rep.squares.S <= rep.balls.S):.3f}")
