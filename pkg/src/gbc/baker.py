"""The baker map through its binary coding.

A point of the square is a two-sided sequence of fair bits ``w``; the
``n``-th iterate has ``x = 0.w_n w_{n+1} ...`` and ``y = 0.w_{n-1} w_{n-2} ...``.
The dyadic square ``[i 2^-k, (i+1) 2^-k) x [j 2^-k, (j+1) 2^-k)`` is then the
cylinder pinning the bits of ``i`` on ``[0, k-1]`` and the bits of ``j``,
most significant first, on ``-1, -2, ..., -k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import BallOutOfRange, MassTooSmall, ValidationError
from .orbits import HitStatistics, collect, geometric_checkpoints, run_samples
from .shift import Cylinder, full_shift

__all__ = [
    "BakerSquare",
    "baker_dyadic_inscribe",
    "inscribe_many",
    "baker_step",
    "orbit_bits",
    "coordinates",
    "baker_hit_experiment",
    "shrinking_balls",
    "MAX_RADIUS",
    "FRACTION_BITS",
]

MAX_RADIUS = 0.25
FRACTION_BITS = 63
FLOAT_BITS = 53
RIGHT, LEFT = 1, 2


@dataclass(frozen=True)
class BakerSquare:
    level: int
    i: int
    j: int

    def __post_init__(self):
        if self.level < 0 or not (0 <= self.i < 2**self.level and 0 <= self.j < 2**self.level):
            raise ValidationError(f"cell ({self.i}, {self.j}) outside level {self.level}")

    @property
    def side(self) -> float:
        return 2.0**-self.level

    @property
    def area(self) -> float:
        return 4.0**-self.level

    def contains(self, x: float, y: float) -> bool:
        k = self.level
        return math.floor(x * 2**k) == self.i and math.floor(y * 2**k) == self.j

    def to_cylinder(self) -> Cylinder:
        """The cylinder on ``[-k, k-1]`` coding this square."""
        k = self.level
        if k == 0:
            raise ValidationError("the whole square is not a proper cylinder")
        past = [(self.j >> t) & 1 for t in range(k)]  # coordinates -k .. -1
        future = [(self.i >> (k - 1 - t)) & 1 for t in range(k)]  # coordinates 0 .. k-1
        return full_shift(2).cylinder(-k, past + future)


def _check_ball(cx: np.ndarray, cy: np.ndarray, r: np.ndarray):
    if np.any(r <= 0) or np.any(r > MAX_RADIUS):
        raise BallOutOfRange(f"radius must lie in (0, {MAX_RADIUS}]")
    if np.any(cx - r <= 0) or np.any(cx + r >= 1) or np.any(cy - r <= 0) or np.any(cy + r >= 1):
        raise BallOutOfRange("ball must lie inside the open unit square")


def inscribe_many(cx, cy, r):
    """Vectorised :func:`baker_dyadic_inscribe`; returns ``(level, i, j)`` arrays.

    Starting from the least level whose cells can fit (``side <= r sqrt 2``)
    at most two levels are scanned; at each level the four cells around the
    grid vertex nearest the centre are tested, and the fitting cell closest to
    the centre wins (ties to the smaller ``(i, j)``).
    """
    cx, cy, r = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (cx, cy, r))
    _check_ball(cx, cy, r)
    k0 = np.ceil(-np.log2(r * math.sqrt(2))).astype(np.int64)
    n = cx.size
    level = np.full(n, -1, dtype=np.int64)
    I = np.zeros(n, dtype=np.int64)
    J = np.zeros(n, dtype=np.int64)
    for step in (0, 1):
        todo = level < 0
        if not todo.any():
            break
        k = k0[todo] + step
        scale = 2.0**k
        a = np.rint(cx[todo] * scale).astype(np.int64)
        b = np.rint(cy[todo] * scale).astype(np.int64)
        best = np.full(todo.sum(), np.inf)
        bi = np.zeros(todo.sum(), dtype=np.int64)
        bj = np.zeros(todo.sum(), dtype=np.int64)
        for di in (-1, 0):
            for dj in (-1, 0):
                i, j = a + di, b + dj
                x0, y0 = i / scale, j / scale
                x1, y1 = (i + 1) / scale, (j + 1) / scale
                far = np.maximum((cx[todo] - x0) ** 2, (cx[todo] - x1) ** 2) + np.maximum(
                    (cy[todo] - y0) ** 2, (cy[todo] - y1) ** 2
                )
                fits = far <= r[todo] ** 2
                dist = ((i + 0.5) / scale - cx[todo]) ** 2 + ((j + 0.5) / scale - cy[todo]) ** 2
                better = fits & (dist < best)
                best = np.where(better, dist, best)
                bi = np.where(better, i, bi)
                bj = np.where(better, j, bj)
        found = np.isfinite(best)
        idx = np.flatnonzero(todo)[found]
        level[idx] = k[found]
        I[idx] = bi[found]
        J[idx] = bj[found]
    if np.any(level < 0):
        raise ValidationError("no dyadic square found; level scan guarantee violated")
    return level, I, J


def baker_dyadic_inscribe(center, r: float) -> BakerSquare:
    """Largest dyadic square found inside the ball by the two-level scan."""
    lv, i, j = inscribe_many([center[0]], [center[1]], [r])
    return BakerSquare(int(lv[0]), int(i[0]), int(j[0]))


def baker_step(X: np.ndarray, Y: np.ndarray):
    """One baker step on ``FRACTION_BITS``-bit fixed-point coordinates.

    ``(x, y) -> (2x mod 1, (y + [2x]) / 2)``; the low bit of ``y`` is lost
    and ``x`` gains a zero at the bottom, so ``n`` steps keep the top
    ``FRACTION_BITS - n`` bits of ``x`` exact.
    """
    X = np.asarray(X, dtype=np.uint64)
    Y = np.asarray(Y, dtype=np.uint64)
    top = np.uint64(FRACTION_BITS - 1)
    mask = np.uint64((1 << FRACTION_BITS) - 1)
    b = X >> top
    return (X << np.uint64(1)) & mask, (Y >> np.uint64(1)) | (b << top)


def orbit_bits(seed: int, lo: int, hi: int) -> np.ndarray:
    """Fair bits ``w_lo .. w_hi`` of the point with the given seed."""
    parts = []
    if lo < 0:
        left = rng.bits(seed, LEFT, 0, -lo)  # w_-1, w_-2, ...
        parts.append(left[::-1][: min(hi, -1) - lo + 1])
    if hi >= 0:
        parts.append(rng.bits(seed, RIGHT, max(lo, 0), hi + 1))
    return np.concatenate(parts).astype(np.uint8)


def coordinates(bits: np.ndarray, offset: int, n_lo: int, n_hi: int):
    """Exact ``FLOAT_BITS``-bit truncations of ``x_n``, ``y_n`` for ``n_lo <= n <= n_hi``.

    ``bits[t]`` is ``w_{t + offset}``; it must cover
    ``[n_lo - FLOAT_BITS, n_hi + FLOAT_BITS - 1]``.  Every partial sum of
    ``FLOAT_BITS`` dyadic digits is exactly representable.
    """
    w = 2.0 ** -np.arange(1, FLOAT_BITS + 1)
    b = bits.astype(np.float64)
    # x_n = sum_t w_{n+t-1} 2^-t, y_n = sum_t w_{n-t} 2^-t
    xs = np.correlate(b, w, mode="valid")  # xs[s] = sum_t b[s + t - 1] w[t-1]
    ys = np.convolve(b, w, mode="full")  # ys[s] = sum_t b[s - t + 1] w[t-1]
    n = np.arange(n_lo, n_hi + 1)
    return xs[n - offset], ys[n - 1 - offset]


def shrinking_balls(center, N: int, c: float = 1.0, r_max: float = MAX_RADIUS):
    """Balls at a fixed centre with ``pi r_n**2 = c / n`` (radius capped)."""
    n = np.arange(1, N + 1)
    r = np.minimum(r_max, np.sqrt(c / (math.pi * n)))
    cx = np.full(N, float(center[0]))
    cy = np.full(N, float(center[1]))
    return cx, cy, r


@dataclass
class BakerReport:
    squares: HitStatistics
    balls: HitStatistics
    area_ratio: np.ndarray


def baker_hit_experiment(
    balls,
    N: int,
    num_samples: int,
    seed: int,
    checkpoints=None,
    workers: int = 1,
    min_mass: float = 20.0,
) -> BakerReport:
    """Hit statistics for balls and for their inscribed dyadic squares.

    ``balls`` is ``(cx, cy, r)`` with arrays of length at least ``N``.
    ``min_mass`` bounds the ball mass ``sum pi r_n**2`` from below.
    """
    cx, cy, r = (np.asarray(v, dtype=float)[:N] for v in balls)
    if cx.size < N:
        raise ValidationError(f"need {N} balls, got {cx.size}")
    ball_mass = math.pi * r**2
    E_balls = np.cumsum(ball_mass)
    if E_balls[-1] < min_mass:
        raise MassTooSmall(f"ball mass {E_balls[-1]:.3g} < {min_mass}")
    level, I, J = inscribe_many(cx, cy, r)
    E_squares = np.cumsum(4.0**-level)
    cps = geometric_checkpoints(N) if checkpoints is None else np.unique(np.asarray(checkpoints, dtype=np.int64))
    scale = 2.0**level

    def kernel(s):
        bits = orbit_bits(s, 1 - FLOAT_BITS, N + FLOAT_BITS)
        x, y = coordinates(bits, 1 - FLOAT_BITS, 1, N)
        in_sq = (np.floor(x * scale) == I) & (np.floor(y * scale) == J)
        in_ball = (x - cx) ** 2 + (y - cy) ** 2 <= r**2
        return in_sq, in_ball

    seeds = rng.derive_seeds(seed, num_samples)
    out = run_samples(kernel, seeds, workers)
    meta = {"master_seed": int(seed), "N_max": int(N)}
    sq = collect(seeds, cps, E_squares, [o[0] for o in out], {**meta, "targets": "dyadic squares"})
    bl = collect(seeds, cps, E_balls, [o[1] for o in out], {**meta, "targets": "balls"})
    return BakerReport(sq, bl, 4.0**-level / ball_mass)
