"""Hyperbolic linear automorphisms of the 2-torus.

Orbits are iterated on 64-bit fixed-point points ``X / 2**64``: an integer
matrix acts on ``(Z / 2**64)**2`` by wrap-around multiplication, which is the
exact image of the dyadic point under the torus map.  ``M**n mod 2**64`` is
tabulated once so every sample is a handful of vector operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import (
    GapTooNarrow,
    MassTooSmall,
    NotHyperbolic,
    NotUnimodular,
    Overflow,
    RectangleTooLarge,
    ValidationError,
)
from .orbits import HitStatistics, collect, geometric_checkpoints, run_samples

__all__ = [
    "ToralMap",
    "Rectangle",
    "RectangleSequence",
    "build_toral",
    "fix_count",
    "partition_function",
    "quasiround_indices",
    "make_rectangle",
    "torus_hit_experiment",
    "drift_hit_experiment",
    "rational_orbit_period",
    "matrix_order_mod",
    "to_fixed",
]

MOD64 = 1 << 64
MAX_EXTENT = 0.05
MAX_FIX_N = 60
EPS0, EPS1 = 0.01, 0.04
ROUND_SLACK = 1e-12


def _unit(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v


@dataclass(frozen=True)
class ToralMap:
    M: tuple  # ((a, b), (c, d)) as Python ints
    lambda_u: float
    lambda_s: float
    e_u: np.ndarray = field(repr=False)
    e_s: np.ndarray = field(repr=False)

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.M
        return a * d - b * c

    @property
    def trace(self) -> int:
        return self.M[0][0] + self.M[1][1]

    @property
    def inverse(self) -> tuple:
        (a, b), (c, d) = self.M
        s = self.det
        return ((d * s, -b * s), (-c * s, a * s))

    @property
    def frame(self) -> np.ndarray:
        """Columns ``e_u``, ``e_s``."""
        return np.column_stack([self.e_u, self.e_s])

    @property
    def frame_area(self) -> float:
        return abs(float(np.linalg.det(self.frame)))


def build_toral(matrix) -> ToralMap:
    """Validate a unimodular hyperbolic integer matrix and compute its eigenframe."""
    arr = np.asarray(matrix)
    if arr.shape != (2, 2):
        raise ValidationError(f"toral map must be 2x2, got shape {arr.shape}")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValidationError("toral map must have integer entries")
    M = tuple(tuple(int(x) for x in row) for row in arr.tolist())
    (a, b), (c, d) = M
    det = a * d - b * c
    tr = a + d
    if abs(det) != 1:
        raise NotUnimodular(f"|det| must be 1, got {det}")
    if abs(tr) <= 2:
        raise NotHyperbolic(f"|trace| must exceed 2, got {tr}")
    disc = math.sqrt(tr * tr - 4 * det)
    roots = [(tr + disc) / 2, (tr - disc) / 2]
    lu = max(roots, key=abs)
    ls = det / lu
    F = np.array(M, dtype=float)

    def eigvec(lam):
        # (F - lam I) v = 0; pick the better-conditioned row
        if abs(b) >= abs(c) and b != 0:
            v = np.array([b, lam - a])
        elif c != 0:
            v = np.array([lam - d, c])
        else:
            v = np.array([1.0, 0.0]) if abs(a - lam) < abs(d - lam) else np.array([0.0, 1.0])
        return _unit(v.astype(float))

    eu, es = eigvec(lu), eigvec(ls)
    for lam, v in ((lu, eu), (ls, es)):
        if np.abs(F @ v - lam * v).max() > 1e-12:
            raise ValidationError("eigenvector residual above 1e-12")
    return ToralMap(M, float(abs(lu)), float(ls), eu, es)


def _int_matpow(M, n: int):
    (a, b), (c, d) = M
    R = ((1, 0), (0, 1))
    B = ((a, b), (c, d))
    while n:
        if n & 1:
            R = _mul(R, B)
        B = _mul(B, B)
        n >>= 1
    return R


def _mul(X, Y, mod: int | None = None):
    (a, b), (c, d) = X
    (e, f), (g, h) = Y
    out = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
    if mod is not None:
        out = tuple(tuple(x % mod for x in row) for row in out)
    return out


def fix_count(T: ToralMap, n: int) -> int:
    """Number of points fixed by ``T**n``: ``|det(M**n - I)|`` in exact integers."""
    if not 1 <= n <= MAX_FIX_N:
        raise ValidationError(f"n must lie in 1..{MAX_FIX_N}")
    (a, b), (c, d) = _int_matpow(T.M, n)
    value = abs((a - 1) * (d - 1) - b * c)
    if value >= 1 << 127:
        raise Overflow(f"fixed-point count for n={n} exceeds 128-bit range")
    return value


def partition_function(T: ToralMap, phi_const: float, n: int) -> float:
    """``Z_n = #Fix(T**n) * exp(n * phi)`` for a constant potential."""
    return fix_count(T, n) * math.exp(n * phi_const)


def quasiround_indices(T: ToralMap, d_u: float, d_s: float, eps0: float = EPS0, eps1: float = EPS1):
    """Iterate counts that bring each extent into ``[eps0, eps1)``.

    ``k_plus`` is the least ``k`` with ``lambda_u**k d_u >= eps0``; the window
    then also bounds it above because ``eps1 / eps0 > lambda_u``.  ``k_minus``
    is ``-j`` for the least ``j`` with ``lambda_u**j d_s >= eps0``.  The lower
    comparison allows a relative slack of 1e-12 against rounding.
    """
    if not 0 < eps0 < eps1:
        raise ValidationError("need 0 < eps0 < eps1")
    lam = T.lambda_u
    if eps1 / eps0 <= lam:
        raise GapTooNarrow(f"eps1/eps0 = {eps1 / eps0:.4g} must exceed lambda_u = {lam:.6g}")
    if not (0 < d_u < eps1 and 0 < d_s < eps1):
        raise ValidationError("extents must lie in (0, eps1); an extent of eps1 never enters [eps0, eps1)")

    def least(d):
        k = max(0, math.ceil(math.log(eps0 / d) / math.log(lam)))
        while k > 0 and lam ** (k - 1) * d >= eps0 * (1 - ROUND_SLACK):
            k -= 1
        while lam**k * d < eps0 * (1 - ROUND_SLACK):
            k += 1
        return k

    return -least(d_s), least(d_u)


@dataclass(frozen=True)
class Rectangle:
    """Parallelogram ``center + [-d_u/2, d_u/2] e_u + [-d_s/2, d_s/2] e_s``."""

    center: tuple
    d_u: float
    d_s: float
    k_minus: int
    k_plus: int
    aspect_bound: float

    def area(self, T: ToralMap) -> float:
        return self.d_u * self.d_s * T.frame_area


def make_rectangle(T: ToralMap, center, d_u: float, d_s: float, eps0: float = EPS0, eps1: float = EPS1) -> Rectangle:
    if max(d_u, d_s) > MAX_EXTENT:
        raise RectangleTooLarge(f"extents must not exceed {MAX_EXTENT}")
    km, kp = quasiround_indices(T, d_u, d_s, eps0, eps1)
    cx, cy = (float(x) % 1.0 for x in center)
    return Rectangle((cx, cy), float(d_u), float(d_s), km, kp, max(d_u / d_s, d_s / d_u))


def to_fixed(x) -> np.ndarray:
    """Coordinates in ``[0, 1)`` to 64-bit fixed point (round to nearest)."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    hi = np.floor(x * 2.0**32)
    lo = np.rint((x * 2.0**32 - hi) * 2.0**32)
    return ((hi.astype(np.uint64) << np.uint64(32)) + lo.astype(np.uint64))


class RectangleSequence:
    """Targets ``R_1 .. R_N`` stored as arrays of centres and extents."""

    def __init__(self, T: ToralMap, centers, d_u, d_s, info: dict | None = None):
        self.T = T
        self.centers = np.mod(np.asarray(centers, dtype=float).reshape(-1, 2), 1.0)
        self.d_u = np.asarray(d_u, dtype=float)
        self.d_s = np.asarray(d_s, dtype=float)
        if not (len(self.centers) == len(self.d_u) == len(self.d_s)):
            raise ValidationError("centres and extents must have equal length")
        if np.any(self.d_u <= 0) or np.any(self.d_s <= 0):
            raise ValidationError("extents must be positive")
        if max(self.d_u.max(), self.d_s.max()) > MAX_EXTENT:
            raise RectangleTooLarge(f"extents must not exceed {MAX_EXTENT}")
        self.cx = to_fixed(self.centers[:, 0])
        self.cy = to_fixed(self.centers[:, 1])
        self.info = dict(info or {})

    def __len__(self):
        return self.d_u.size

    @property
    def aspect_bound(self) -> float:
        return float(np.max(np.maximum(self.d_u / self.d_s, self.d_s / self.d_u)))

    @property
    def measures(self) -> np.ndarray:
        return self.d_u * self.d_s * self.T.frame_area

    @classmethod
    def from_targets(cls, T: ToralMap, targets) -> "RectangleSequence":
        c = [t["center"] for t in targets]
        return cls(T, c, [t["du"] for t in targets], [t["ds"] for t in targets])

    @classmethod
    def from_law(cls, T: ToralMap, center, N: int, c: float = 1.0, cap: float = 0.001, aspect: float = 1.0):
        """Rectangles at a fixed centre with ``Leb(R_n) = min(cap, c / n)``."""
        n = np.arange(1, N + 1)
        area = np.minimum(cap, c / n)
        du = np.sqrt(area * aspect / T.frame_area)
        ds = du / aspect
        info = {"measure_law": "c_over_n", "c": c, "cap": cap, "aspect": aspect, "center": list(center)}
        return cls(T, np.tile(np.asarray(center, dtype=float), (N, 1)), du, ds, info)


def _power_table(M, N: int) -> np.ndarray:
    """``M**n mod 2**64`` for ``n = 1..N`` as a ``(4, N)`` uint64 array."""
    out = np.empty((4, N), dtype=np.uint64)
    cur = ((1, 0), (0, 1))
    Mm = tuple(tuple(x % MOD64 for x in row) for row in M)
    for n in range(N):
        cur = _mul(cur, Mm, MOD64)
        out[:, n] = (cur[0][0], cur[0][1], cur[1][0], cur[1][1])
    return out


def _apply(table: np.ndarray, X, Y):
    with np.errstate(over="ignore"):
        Xn = table[0] * X + table[1] * Y
        Yn = table[2] * X + table[3] * Y
    return Xn, Yn


def _signed_unit(D: np.ndarray) -> np.ndarray:
    """Wrap-around difference to a float in ``[-1/2, 1/2)``."""
    return D.view(np.int64).astype(np.float64) * 2.0**-64


def _inside(T: ToralMap, Xn, Yn, cx, cy, du, ds) -> np.ndarray:
    with np.errstate(over="ignore"):
        dx = _signed_unit(Xn - cx)
        dy = _signed_unit(Yn - cy)
    inv = np.linalg.inv(T.frame)
    a = inv[0, 0] * dx + inv[0, 1] * dy
    b = inv[1, 0] * dx + inv[1, 1] * dy
    return (np.abs(a) <= du / 2) & (np.abs(b) <= ds / 2)


def _start(seed: int):
    r = rng.raw(seed, 7, 0, 2)
    return r[0], r[1]


def torus_hit_experiment(
    T: ToralMap,
    rects: RectangleSequence,
    N: int,
    num_samples: int,
    seed: int,
    checkpoints=None,
    workers: int = 1,
    min_expected: float = 20.0,
) -> HitStatistics:
    """Hits of Lebesgue-random orbits on a rectangle sequence.

    The start point of sample ``i`` is a uniform 64-bit fixed-point pair;
    ``T**n x`` is tested against ``R_n`` in eigen-coordinates after reducing
    the difference to the fundamental cell nearest zero.
    """
    if N < 1 or N > len(rects):
        raise ValidationError(f"N must lie in 1..{len(rects)}")
    E_curve = np.cumsum(rects.measures[:N])
    if E_curve[-1] < min_expected:
        raise MassTooSmall(f"E_N = {E_curve[-1]:.3g} < {min_expected}")
    cps = geometric_checkpoints(N) if checkpoints is None else np.unique(np.asarray(checkpoints, dtype=np.int64))
    table = _power_table(T.M, N)
    cx, cy, du, ds = rects.cx[:N], rects.cy[:N], rects.d_u[:N], rects.d_s[:N]

    def kernel(s):
        X, Y = _start(s)
        Xn, Yn = _apply(table, X, Y)
        return _inside(T, Xn, Yn, cx, cy, du, ds)

    seeds = rng.derive_seeds(seed, num_samples)
    traj = run_samples(kernel, seeds, workers)
    meta = {"master_seed": int(seed), "N_max": int(N), "map": [list(r) for r in T.M], **rects.info}
    return collect(seeds, cps, E_curve, traj, meta)


def drift_hit_experiment(
    T: ToralMap,
    R0: Rectangle,
    N: int,
    num_samples: int,
    seed: int,
    checkpoints=None,
    workers: int = 1,
) -> HitStatistics:
    """Hits on ``R_n = T**n R0``.

    ``T**n R0`` is long and thin, so membership is decided by pulling
    ``T**n x`` back with the integer inverse and testing it against ``R0``.
    """
    cps = geometric_checkpoints(N) if checkpoints is None else np.unique(np.asarray(checkpoints, dtype=np.int64))
    fwd = _power_table(T.M, N)
    bwd = _power_table(T.inverse, N)
    area = R0.area(T)
    E_curve = area * np.arange(1, N + 1)
    (cx,), (cy,) = to_fixed([R0.center[0]]), to_fixed([R0.center[1]])

    def kernel(s):
        X, Y = _start(s)
        Xn, Yn = _apply(fwd, X, Y)
        with np.errstate(over="ignore"):
            Xb = bwd[0] * Xn + bwd[1] * Yn
            Yb = bwd[2] * Xn + bwd[3] * Yn
        if not (np.all(Xb == X) and np.all(Yb == Y)):
            raise ValidationError("pull-back did not return the start point")
        return _inside(T, Xb, Yb, cx, cy, R0.d_u, R0.d_s)

    seeds = rng.derive_seeds(seed, num_samples)
    traj = run_samples(kernel, seeds, workers)
    meta = {"master_seed": int(seed), "N_max": int(N), "drift": True, "R0_area": area}
    return collect(seeds, cps, E_curve, traj, meta)


def rational_orbit_period(T: ToralMap, point, q: int) -> int:
    """Period of the rational point ``point / q`` under ``T`` (integer arithmetic mod ``q``)."""
    v0 = tuple(int(x) % q for x in point)
    (a, b), (c, d) = T.M
    v = v0
    for n in range(1, q**4 + 2):
        v = ((a * v[0] + b * v[1]) % q, (c * v[0] + d * v[1]) % q)
        if v == v0:
            return n
    raise ValidationError("no return found; q too large")


def matrix_order_mod(T: ToralMap, q: int) -> int:
    """Order of ``M`` in ``GL_2(Z / q)``."""
    I = ((1 % q, 0), (0, 1 % q))
    cur = tuple(tuple(x % q for x in row) for row in T.M)
    for n in range(1, q**4 + 2):
        if cur == I:
            return n
        cur = _mul(cur, T.M, q)
    raise ValidationError("order not found")
