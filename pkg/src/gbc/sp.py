"""Exact correlation sums and the summability verdict.

For a window ``M <= m, n <= N`` the sum of ``R_mn`` is evaluated exactly.
Placed targets ``sigma^-n C_n`` that coincide are grouped, so the work is
quadratic in the number of *distinct* placed cylinders rather than in the
window width; the result is the same double sum.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError, WindowTooLarge, ZeroMassWindow
from .gibbs import MarkovGibbs, joint_measure
from .sequences import CylinderSequence, Placement, word_measures

__all__ = [
    "SPReport",
    "placed_correlations",
    "window_sums",
    "sp_ratio",
    "sp_verdict",
    "MAX_WINDOW",
    "PLATEAU_TOLERANCE",
]

MAX_WINDOW = 5000
PLATEAU_TOLERANCE = 0.20


def _row(g: MarkovGibbs, pl: Placement, alpha, beta, Pstack, i: int, mu: np.ndarray, out: np.ndarray):
    """Covariances of placed cylinder ``i`` with every cylinder starting to its right.

    Entries with ``j`` left-disjoint are filled by the row of ``j``; together
    the rows cover every unordered pair exactly once.
    """
    lo, hi = pl.lo, pl.hi
    G = Pstack.shape[0] - 1
    right = np.flatnonzero(lo > hi[i] + 1)
    if right.size:
        gaps = np.minimum(lo[right] - hi[i], G)
        bridged = np.einsum("s,gst->gt", alpha[i], Pstack)
        joint = np.einsum("jt,jt->j", bridged[gaps], beta[right])
        out[i, right] = joint - mu[i] * mu[right]
        out[right, i] = out[i, right]
    near = np.flatnonzero((lo <= hi[i] + 1) & (hi >= lo[i] - 1))
    for j in near[near >= i]:
        if j == i:
            out[i, i] = mu[i] - mu[i] * mu[i]
        else:
            out[i, j] = joint_measure(g, pl.placed[i], pl.placed[j]) - mu[i] * mu[j]
            out[j, i] = out[i, j]


def placed_correlations(g: MarkovGibbs, pl: Placement, workers: int = 1):
    """Symmetric covariance matrix of the distinct placed cylinders.

    Returns ``(R, mu)`` with ``R[i, j] = mu(P_i & P_j) - mu(P_i) mu(P_j)``
    for placed cylinders ``P_i``.  Each entry is computed independently, so
    the matrix does not depend on ``workers``.
    """
    U = pl.n_unique
    mu = word_measures(g, pl.placed)
    if U == 0:
        return np.zeros((0, 0)), mu
    alpha = np.array([g.alpha(c) for c in pl.placed])
    beta = np.array([g.beta(c) for c in pl.placed])
    span = int(pl.hi.max() - pl.lo.min()) + 1
    Pstack = g.power_stack(max(span, 2))
    # trim the stack once it has frozen at the stationary projector
    frozen = np.flatnonzero(np.all(Pstack == Pstack[-1], axis=(1, 2)))
    if frozen.size:
        Pstack = Pstack[: int(frozen[0]) + 1]
    R = np.zeros((U, U))

    def run(rows):
        for i in rows:
            _row(g, pl, alpha, beta, Pstack, i, mu, R)

    if workers <= 1 or U < 64:
        run(range(U))
    else:
        chunks = [range(a, U, workers) for a in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    return R, mu


def window_sums(R: np.ndarray, mu: np.ndarray, index: np.ndarray, M: int, N: int):
    """``(sum R_mn, sum mu(C_n))`` over ``M <= m, n <= N``."""
    if not 1 <= M <= N <= index.size:
        raise ValidationError(f"need 1 <= M <= N <= {index.size}, got M={M}, N={N}")
    if N - M + 1 > MAX_WINDOW:
        raise WindowTooLarge(f"window width {N - M + 1} exceeds {MAX_WINDOW}")
    sel = index[M - 1 : N]
    counts = np.bincount(sel, minlength=R.shape[0]).astype(float)
    used = np.flatnonzero(counts)
    c = counts[used]
    sumR = float(np.sum(c * np.sum(R[np.ix_(used, used)] * c[None, :], axis=1)))
    sumMu = float(np.sum(mu[sel]))
    if not sumMu > 0:
        raise ZeroMassWindow(f"window [{M}, {N}] carries zero mass")
    return sumR, sumMu


def sp_ratio(g: MarkovGibbs, seq: CylinderSequence, M: int, N: int, workers: int = 1) -> float:
    """``sum_{m,n=M}^N R_mn / sum_{n=M}^N mu(C_n)``."""
    pl = seq.placement(N)
    R, mu = placed_correlations(g, pl, workers)
    sumR, sumMu = window_sums(R, mu, pl.index, M, N)
    return sumR / sumMu


@dataclass
class SPReport:
    """Raw window sums plus the derived summary.

    ``rows`` holds ``(M, N, sumR, sumMu, ratio)`` ordered by ``N`` then ``M``.
    ``sup_growth`` compares the supremum over ``N <= N_max`` with the one over
    ``N <= N_max / 2``; the verdict is ``bounded`` when it stays within
    ``PLATEAU_TOLERANCE``.
    """

    rows: list
    sup_ratio: float
    sup_growth: float
    trend_slope: float
    verdict: str
    meta: dict = field(default_factory=dict)

    def ratios_at(self, M: int = 1) -> tuple[np.ndarray, np.ndarray]:
        sel = [(r[1], r[4]) for r in self.rows if r[0] == M]
        arr = np.array(sel, dtype=float).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def summary(self) -> dict:
        return {
            "sup_ratio": self.sup_ratio,
            "sup_growth": self.sup_growth,
            "trend_slope": self.trend_slope,
            "verdict": self.verdict,
            "plateau_tolerance": PLATEAU_TOLERANCE,
            **self.meta,
        }

    def to_csv(self, kind: str | None = None, config_hash: str | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        extra = [] if kind is None else ["kind", "config_hash"]
        w.writerow(["M", "N", "sumR", "sumMu", "ratio"] + extra)
        for M, N, sR, sM, r in self.rows:
            tail = [] if kind is None else [kind, config_hash]
            w.writerow([M, N, repr(sR), repr(sM), repr(r)] + tail)
        return buf.getvalue()


def sp_verdict(g: MarkovGibbs, seq: CylinderSequence, N_grid, workers: int = 1) -> SPReport:
    """Evaluate the ratio on ``{(M, N)}`` with ``M`` in ``{1, 2, 4, ...}``, ``M <= N``."""
    grid = sorted({int(n) for n in N_grid})
    if not grid:
        raise ValidationError("N grid must be non-empty")
    Nmax = grid[-1]
    if grid[0] < 1 or Nmax > len(seq):
        raise ValidationError(f"grid must lie in 1..{len(seq)}")
    pl = seq.placement(Nmax)
    R, mu = placed_correlations(g, pl, workers)
    rows = []
    for N in grid:
        M = 1
        while M <= N:
            if N - M + 1 <= MAX_WINDOW:
                sumR, sumMu = window_sums(R, mu, pl.index, M, N)
                rows.append((M, N, sumR, sumMu, sumR / sumMu))
            M *= 2
    if not rows:
        raise WindowTooLarge(f"every window exceeds {MAX_WINDOW}")
    ratios = np.array([r[4] for r in rows])
    Ns = np.array([r[1] for r in rows])
    sup_ratio = float(ratios.max())
    lower = ratios[Ns <= Nmax / 2]
    if lower.size == 0:
        raise ValidationError("N grid must reach down to N_max / 2 to judge growth")
    sup_lower = float(lower.max())
    sup_growth = sup_ratio / sup_lower - 1.0 if sup_lower > 0 else (0.0 if sup_ratio <= 0 else math.inf)
    Ms = np.array([r[0] for r in rows])
    trend = 0.0
    for Mtop in sorted(set(Ms.tolist()), reverse=True):
        sel = Ms == Mtop
        if sel.sum() >= 2:
            trend = float(np.polyfit(Ns[sel].astype(float), ratios[sel], 1)[0])
            break
    verdict = "bounded" if sup_growth <= PLATEAU_TOLERANCE else "growing"
    return SPReport(rows, sup_ratio, float(sup_growth), trend, verdict, {"N_max": Nmax, "distinct_targets": pl.n_unique})
