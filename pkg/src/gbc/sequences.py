"""Target sequences of cylinders and the constructions built from them.

Indices are 1-based as in ``C_1, C_2, ...``.  A *derived* sequence slides
each base cylinder backwards along the shift: with ``s_k = l_1 + ... + l_k``
and ``s_{k-1} < n <= s_k`` the ``n``-th target is ``sigma^(n - s_k) C~_k``,
which is ``C~_k`` translated right by ``s_k - n``.  Every ``n`` of block ``k``
is then hit by ``w`` exactly when ``sigma^(s_k) w`` lies in ``C~_k``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DivergentBase, EpsOutOfRange, LengthMismatch, NotMonotone, ValidationError
from .gibbs import MarkovGibbs, cylinder_measure
from .shift import Cylinder, TransitionMatrix, shift_cylinder

__all__ = [
    "CylinderSequence",
    "Placement",
    "derive_sequence",
    "constant_sequence",
    "expected_hits",
    "expected_hits_curve",
    "word_measures",
    "thm22_counterexample",
    "thm23_counterexample",
    "thm23_blocks_for",
    "prop16_sequence",
    "dnested_sequence",
    "run_base",
]

NEST_TOLERANCE = 3


@dataclass(frozen=True)
class Placement:
    """The targets ``sigma^-n C_n`` for ``n = 1..N`` in absolute coordinates.

    Identical placed cylinders are stored once; ``index[n - 1]`` names the
    placed cylinder used at time ``n``.
    """

    placed: list
    index: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    words: np.ndarray  # (U, Lmax) padded with -1
    lengths: np.ndarray

    @property
    def n_unique(self) -> int:
        return len(self.placed)


def _placement(placed: list, index: np.ndarray) -> Placement:
    lo = np.array([c.lo for c in placed], dtype=np.int64)
    hi = np.array([c.hi for c in placed], dtype=np.int64)
    lengths = hi - lo + 1
    Lmax = int(lengths.max()) if len(placed) else 0
    words = np.full((len(placed), Lmax), -1, dtype=np.int16)
    for i, c in enumerate(placed):
        words[i, : len(c.word)] = c.word
    return Placement(placed, index, lo, hi, words, lengths)


class CylinderSequence:
    """Indexed sequence of target cylinders ``C_1 .. C_len``.

    Either an explicit list of cylinders or a derivation ``(base, lengths)``;
    derived sequences are never materialised cylinder by cylinder.
    """

    def __init__(
        self,
        cylinders: Sequence[Cylinder] | None = None,
        *,
        base: Sequence[Cylinder] | None = None,
        lengths: Sequence[int] | None = None,
        alignment_tag: str | None = None,
        info: dict | None = None,
    ):
        if (cylinders is None) == (base is None):
            raise ValidationError("give either explicit cylinders or a (base, lengths) derivation")
        self._cylinders = list(cylinders) if cylinders is not None else None
        self.base = list(base) if base is not None else None
        if base is not None:
            lengths = [int(x) for x in lengths]
            if len(lengths) != len(self.base):
                raise LengthMismatch(f"{len(self.base)} base cylinders but {len(lengths)} lengths")
            if any(x < 1 for x in lengths):
                raise ValidationError("derivation lengths must be positive")
            self.lengths = np.asarray(lengths, dtype=np.int64)
            self.s = np.cumsum(self.lengths)
        else:
            self.lengths = None
            self.s = None
        self.flags: list[str] = []
        self.info = dict(info or {})
        self._cache: dict = {}
        self.alignment_tag = alignment_tag or self._compute_tag()

    @property
    def is_derived(self) -> bool:
        return self.base is not None

    @property
    def derivation(self):
        if not self.is_derived:
            return None
        return {"base": self.base, "lengths": self.lengths, "s": np.concatenate([[0], self.s])}

    def __len__(self):
        return int(self.s[-1]) if self.is_derived else len(self._cylinders)

    def block_of(self, n: int) -> int:
        """1-based block index ``k`` with ``s_{k-1} < n <= s_k``."""
        if not self.is_derived:
            raise ValidationError("sequence is not derived")
        self._check_index(n)
        return int(np.searchsorted(self.s, n)) + 1

    def _check_index(self, n: int):
        if not 1 <= n <= len(self):
            raise IndexError(f"index {n} outside 1..{len(self)}")

    def __getitem__(self, n: int) -> Cylinder:
        self._check_index(n)
        if not self.is_derived:
            return self._cylinders[n - 1]
        k = int(np.searchsorted(self.s, n))
        return shift_cylinder(self.base[k], n - int(self.s[k]))

    def __iter__(self):
        for n in range(1, len(self) + 1):
            yield self[n]

    def placement(self, N: int | None = None) -> Placement:
        N = len(self) if N is None else int(N)
        if N < 0 or N > len(self):
            raise ValidationError(f"N={N} outside 0..{len(self)}")
        if N in self._cache:
            return self._cache[N]
        if self.is_derived:
            K = int(np.searchsorted(self.s, N)) + 1 if N > 0 else 0
            K = min(K, len(self.base))
            placed = [shift_cylinder(self.base[k], -int(self.s[k])) for k in range(K)]
            index = np.repeat(np.arange(K), self.lengths[:K])[:N]
        else:
            placed, index, seen = [], np.empty(N, dtype=np.int64), {}
            for n in range(1, N + 1):
                c = shift_cylinder(self._cylinders[n - 1], -n)
                key = (c.lo, c.word)
                if key not in seen:
                    seen[key] = len(placed)
                    placed.append(c)
                index[n - 1] = seen[key]
        out = _placement(placed, np.asarray(index, dtype=np.int64))
        self._cache[N] = out
        return out

    def _endpoint_ranges(self):
        """Per-block (min, max) of left endpoints, right endpoints and doubled centres."""
        if self.is_derived:
            lo = np.array([c.lo for c in self.base])
            hi = np.array([c.hi for c in self.base])
            span = self.lengths - 1  # offsets s_k - n run over 0..l_k - 1
            return (lo, lo + span), (hi, hi + span), (lo + hi, lo + hi + 2 * span)
        lo = np.array([c.lo for c in self._cylinders])
        hi = np.array([c.hi for c in self._cylinders])
        return (lo, lo), (hi, hi), (lo + hi, lo + hi)

    def nesting_bound(self) -> int:
        """A ``D`` for which every pair of defining intervals is ``D``-nested.

        Left endpoints (or right endpoints, or centres) confined to a window
        of width ``D`` imply ``D``-nestedness; the smallest such width is
        returned.
        """
        if len(self) == 0:
            return 0
        (l0, l1), (r0, r1), (c0, c1) = self._endpoint_ranges()
        spread_left = int(l1.max() - l0.min())
        spread_right = int(r1.max() - r0.min())
        spread_center = math.ceil((c1.max() - c0.min()) / 2)
        return min(spread_left, spread_right, spread_center)

    def _compute_tag(self) -> str:
        if len(self) == 0:
            return "free"
        D = self.nesting_bound()
        if not self.is_derived or D <= NEST_TOLERANCE:
            return f"D_nested({D})"
        (l0, l1), _, (c0, c1) = self._endpoint_ranges()
        ell = self.lengths
        if np.all(l0 >= 0) and np.all(l1 <= ell):
            return "l_aligned"
        if np.all(c0 >= -ell) and np.all(c1 <= ell):
            return "l_centered"
        return "free"


def derive_sequence(base: Sequence[Cylinder], lengths: Sequence[int], info: dict | None = None) -> CylinderSequence:
    """Sequence derived from base cylinders ``C~_k`` and block lengths ``l_k``."""
    if len(base) != len(lengths):
        raise LengthMismatch(f"{len(base)} base cylinders but {len(lengths)} lengths")
    return CylinderSequence(base=base, lengths=lengths, info=info)


def constant_sequence(C: Cylinder, N: int) -> CylinderSequence:
    return CylinderSequence([C] * N)


def word_measures(g: MarkovGibbs, placed: Sequence[Cylinder]) -> np.ndarray:
    """Measures of many cylinders; identical words are evaluated once."""
    cache: dict = {}
    out = np.empty(len(placed))
    for i, c in enumerate(placed):
        mu = cache.get(c.word)
        if mu is None:
            mu = cache[c.word] = cylinder_measure(g, c)
        out[i] = mu
    return out


def expected_hits_curve(g: MarkovGibbs, seq: CylinderSequence, N: int) -> np.ndarray:
    """``E_1 .. E_N`` as an array (cumulative sum in index order)."""
    pl = seq.placement(N)
    mu = word_measures(g, pl.placed)
    return np.cumsum(mu[pl.index]) if N > 0 else np.zeros(0)


def expected_hits(g: MarkovGibbs, seq: CylinderSequence, N: int) -> float:
    if N == 0:
        return 0.0
    return float(expected_hits_curve(g, seq, N)[-1])


def _lengths_from(l: Union[Callable[[int], int], Sequence[int]], K: int) -> list[int]:
    vals = [int(l(k)) for k in range(1, K + 1)] if callable(l) else [int(x) for x in l][:K]
    if len(vals) < K:
        raise LengthMismatch(f"need {K} lengths, got {len(vals)}")
    return vals


def _center_shift(C: Cylinder) -> int:
    """Shift ``t`` such that ``sigma^t C`` has its centre in ``[-1/2, 0]``."""
    return math.floor(C.interval.center)


def thm22_counterexample(
    g: MarkovGibbs,
    base_cylinder: Cylinder,
    l: Union[Callable[[int], int], Sequence[int]],
    K: int,
    mode: str = "aligned",
) -> CylinderSequence:
    """Constant base cylinder repeated over blocks of growing length ``l_k``.

    In ``aligned`` mode the base is moved to left endpoint 0, so the left
    endpoint of ``L_n`` lies in ``[0, l_n]``; in ``centered`` mode each block
    copy is shifted so that centres stay in ``[-l_n/2, l_n/2]``.  A bounded
    ``l`` is accepted with a warning flag, since the result is then nested.
    """
    lengths = _lengths_from(l, K)
    if any(a > b for a, b in zip(lengths[:-1], lengths[1:])):
        raise NotMonotone("l must be non-decreasing")
    if lengths[0] < 1:
        raise ValidationError("l_k must be positive")
    if mode == "aligned":
        base0 = shift_cylinder(base_cylinder, base_cylinder.lo)
        base = [base0] * K
    elif mode == "centered":
        base0 = shift_cylinder(base_cylinder, _center_shift(base_cylinder))
        base = [shift_cylinder(base0, (lk - 1) // 2) for lk in lengths]
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    seq = derive_sequence(base, lengths, info={"construction": "thm22", "mode": mode})
    if lengths[-1] == lengths[0]:
        seq.flags.append("l bounded: SP may hold")
        warnings.warn("l_k is bounded; the derived sequence is nested and (SP) may hold", stacklevel=2)
    return seq


def _greedy_lengths(g: MarkovGibbs, targets: np.ndarray):
    """Grow one word greedily until its measure drops below each target.

    The first symbol maximises the marginal; each extension picks the
    successor with the largest conditional probability, ties to the smallest
    symbol.  Returns the full word and the length reached for every target.
    """
    mass = g.symbol_mass
    word = [int(np.argmax(mass))]
    v = g.p * g.mask(word[0])
    lengths = np.empty(len(targets), dtype=np.int64)
    masks = [g.mask(a) for a in range(g.base.size)]
    for i, t in enumerate(targets):
        while v.sum() > t:
            step = v @ g.P
            cand = [float((step * mk).sum()) for mk in masks]
            a = int(np.argmax(cand))
            word.append(a)
            v = step * masks[a]
        lengths[i] = len(word)
    return word, lengths


def thm23_counterexample(g: MarkovGibbs, eps: float, K: int, mode: str = "aligned") -> CylinderSequence:
    """Derived sequence with ``mu(C~_k) <= 1/(k ln^2 k)`` and ``l_k = max(1, [eps |L~_k|])``.

    Blocks run over ``k = 2..K``.  ``info`` carries the partial sums of
    ``mu(C~_k)`` and ``l_k mu(C~_k)`` at block ends.
    """
    if not 0 < eps < 1:
        raise EpsOutOfRange(f"eps must lie in (0, 1), got {eps}")
    if K < 2:
        raise ValidationError("K must be at least 2")
    ks = np.arange(2, K + 1)
    targets = 1.0 / (ks * np.log(ks) ** 2)
    word, Ls = _greedy_lengths(g, targets)
    A = g.base
    words = {}
    base, mus = [], np.empty(len(ks))
    for i, L in enumerate(Ls):
        L = int(L)
        if L not in words:
            c = A.cylinder(0, word[:L])
            words[L] = (c, cylinder_measure(g, c))
        c, mus[i] = words[L]
        base.append(c)
    lengths = np.maximum(1, np.floor(eps * Ls).astype(np.int64))
    if mode == "centered":
        base = [shift_cylinder(c, _center_shift(c) + (int(lk) - 1) // 2) for c, lk in zip(base, lengths)]
    elif mode != "aligned":
        raise ValidationError(f"unknown mode {mode!r}")
    info = {
        "construction": "thm23",
        "eps": eps,
        "k": ks,
        "base_measure": mus,
        "base_partial": np.cumsum(mus),
        "mass_partial": np.cumsum(lengths * mus),
        "targets": targets,
        "mode": mode,
    }
    return derive_sequence(base, lengths, info=info)


def thm23_blocks_for(g: MarkovGibbs, eps: float, N_target: int) -> int:
    """Smallest ``K`` whose construction reaches ``s_K >= N_target``."""
    K = 16
    while True:
        ks = np.arange(2, K + 1)
        _, Ls = _greedy_lengths(g, 1.0 / (ks * np.log(ks) ** 2))
        s = np.cumsum(np.maximum(1, np.floor(eps * Ls).astype(np.int64)))
        if s[-1] >= N_target:
            return int(np.searchsorted(s, N_target)) + 2
        K *= 2


def prop16_sequence(g: MarkovGibbs, base: Sequence[Cylinder]) -> CylinderSequence:
    """Derived sequence with ``l_k = [1/mu(C~_k)] + 1``.

    The base must have a summable measure sequence.  With finitely many terms
    this is checked heuristically: the second half of the partial sum may
    contribute at most 10% of the total.
    """
    mus = np.array([cylinder_measure(g, c) for c in base])
    if len(mus) >= 4:
        half = len(mus) // 2
        if mus[half:].sum() > 0.1 * mus.sum():
            raise DivergentBase("base measures do not plateau; their sum looks divergent")
    lengths = np.floor(1.0 / mus).astype(np.int64) + 1
    info = {"construction": "prop16", "base_measure": mus, "base_partial": np.cumsum(mus)}
    return derive_sequence(list(base), lengths, info=info)


def run_base(A: TransitionMatrix, symbol: int, K: int) -> list[Cylinder]:
    """Words ``symbol^k`` on ``[0, k-1]`` for ``k = 1..K``."""
    return [A.cylinder(0, [symbol] * k) for k in range(1, K + 1)]


def dnested_sequence(
    g: MarkovGibbs,
    N: int,
    D: int = 2,
    c: float = 10.0,
    cap: float = 0.5,
    seed: int = 0,
    max_length: int | None = None,
) -> CylinderSequence:
    """Random ``D``-centred targets around a random reference point.

    A reference point is sampled from ``g``; the ``n``-th cylinder copies it
    on an interval whose centre is drawn from ``[-D/2, D/2]`` (half-integer
    grid), grown two symbols at a time until its measure is at most
    ``min(cap, c/n)``.  Centres within a window of width ``D`` make every pair
    of intervals ``D``-nested.  With ``max_length`` the growth stops at that
    many symbols even if the measure target is not met.
    """
    from .orbits import sample_orbit

    rng = np.random.default_rng(seed)
    ref = sample_orbit(g, seed)
    centers2 = np.arange(-D, D + 1)  # doubled centres
    chosen = rng.choice(centers2, size=N)
    reach = 16
    cyls = []
    for n in range(1, N + 1):
        t = min(cap, c / n)
        c2 = int(chosen[n - 1])
        L = 1 if c2 % 2 == 0 else 2
        while True:
            lo = (c2 - (L - 1)) // 2
            if lo < -reach or lo + L - 1 > reach:
                reach *= 2
            word = ref.symbols(lo, lo + L - 1)
            cyl = g.base.cylinder(lo, word)
            if cylinder_measure(g, cyl) <= t or (max_length is not None and L + 2 > max_length):
                break
            L += 2
        cyls.append(cyl)
    return CylinderSequence(
        cyls, info={"construction": "dnested", "D": D, "c": c, "cap": cap, "seed": seed, "max_length": max_length},
    )
