"""Topological Markov chains: transition matrices, intervals and cylinders.

Symbols are the integers ``0..M-1``.  A cylinder pins a word on an integer
interval ``[n_minus, n_plus]``; the left shift ``sigma`` moves a cylinder on
``L`` to one on ``L - t`` (``sigma^t C``), so a point ``w`` satisfies
``sigma^n w in C`` iff ``w[n + i] == word[i - n_minus]`` for ``i`` in ``L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    InadmissibleWord,
    InvalidInterval,
    LengthTooLarge,
    NotTransitive,
    Periodic,
    ZeroRowOrColumn,
)

__all__ = [
    "TransitionMatrix",
    "Interval",
    "Cylinder",
    "Disjoint",
    "Merged",
    "Inconsistent",
    "check_transitive",
    "enumerate_words",
    "delta",
    "is_D_nested",
    "shift_cylinder",
    "overlap_consistent",
    "full_shift",
    "golden_mean",
]

MAX_ALPHABET = 64
MAX_WORD_LENGTH = 30
INDEX_BOUND = 2**31 - 1


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Validated 0/1 adjacency matrix of a transitive, aperiodic SFT.

    Build instances with :func:`check_transitive`; ``transitivity_K`` is the
    least ``K`` with ``A**K`` strictly positive.
    """

    entries: np.ndarray
    transitivity_K: int

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def allowed(self, a: int, b: int) -> bool:
        return bool(self.entries[a, b])

    def is_admissible(self, word: Sequence[int]) -> bool:
        w = np.asarray(word, dtype=np.int64)
        if w.size == 0:
            return False
        if w.min() < 0 or w.max() >= self.size:
            return False
        return bool(np.all(self.entries[w[:-1], w[1:]]))

    def cylinder(self, lo: int, word: Sequence[int], one_sided: bool = False) -> "Cylinder":
        """Admissible cylinder pinning ``word`` on ``[lo, lo + len(word) - 1]``."""
        word = tuple(int(s) for s in word)
        if not word:
            raise InvalidInterval("cylinder word must be non-empty")
        if not self.is_admissible(word):
            raise InadmissibleWord(f"word {word} is not admissible")
        return Cylinder(Interval(lo, lo + len(word) - 1, one_sided), word, self)

    def to_list(self) -> list[list[int]]:
        return self.entries.astype(int).tolist()

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"TransitionMatrix({self.to_list()}, K={self.transitivity_K})"


@dataclass(frozen=True)
class Interval:
    n_minus: int
    n_plus: int
    one_sided: bool = False

    def __post_init__(self):
        if self.n_minus > self.n_plus:
            raise InvalidInterval(f"empty interval [{self.n_minus}, {self.n_plus}]")
        if max(abs(self.n_minus), abs(self.n_plus)) > INDEX_BOUND:
            raise InvalidInterval("interval endpoints exceed 2**31 - 1")
        if self.one_sided and self.n_minus < 0:
            raise InvalidInterval("one-sided intervals must satisfy n_minus >= 0")

    @property
    def length(self) -> int:
        return self.n_plus - self.n_minus + 1

    def __len__(self):
        return self.length

    @property
    def center(self) -> float:
        return (self.n_minus + self.n_plus) / 2

    def translate(self, t: int) -> "Interval":
        return Interval(self.n_minus + t, self.n_plus + t, self.one_sided)


@dataclass(frozen=True)
class Cylinder:
    interval: Interval
    word: tuple
    matrix: TransitionMatrix = field(compare=False, repr=False, default=None)

    @property
    def lo(self) -> int:
        return self.interval.n_minus

    @property
    def hi(self) -> int:
        return self.interval.n_plus

    def __len__(self):
        return len(self.word)

    def contains(self, symbols: np.ndarray, offset: int = 0) -> bool:
        """Membership of the point whose coordinate ``i`` is ``symbols[i - offset]``."""
        seg = symbols[self.lo - offset:self.hi - offset + 1]
        return bool(np.array_equal(seg, self.word))


@dataclass(frozen=True)
class Disjoint:
    gap: int


@dataclass(frozen=True)
class Merged:
    cylinder: Cylinder


@dataclass(frozen=True)
class Inconsistent:
    pass


OverlapResult = Union[Disjoint, Merged, Inconsistent]


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def check_transitive(A) -> TransitionMatrix:
    """Validate a square 0/1 matrix and find its transitivity exponent.

    Raises :class:`ZeroRowOrColumn` for a dead end, :class:`Periodic` for an
    irreducible matrix with period > 1 and :class:`NotTransitive` when no
    power up to ``M**2`` is positive.

    >>> check_transitive([[1, 1], [1, 0]]).transitivity_K
    2
    """
    if isinstance(A, TransitionMatrix):
        return A
    arr = np.asarray(A)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NotTransitive(f"matrix must be square, got shape {arr.shape}")
    M = arr.shape[0]
    if not 2 <= M <= MAX_ALPHABET:
        raise NotTransitive(f"alphabet size must be in [2, {MAX_ALPHABET}], got {M}")
    if not np.all((arr == 0) | (arr == 1)):
        raise NotTransitive("entries must be 0 or 1")
    B = arr.astype(bool)
    if not B.any(axis=1).all() or not B.any(axis=0).all():
        raise ZeroRowOrColumn("matrix has an all-zero row or column")

    power = B.copy()
    seen = set()
    for K in range(1, M * M + 1):
        if power.all():
            entries = B.astype(np.int8)
            entries.setflags(write=False)
            return TransitionMatrix(entries, K)
        key = power.tobytes()
        if key in seen:
            break  # boolean powers cycle without ever becoming positive
        seen.add(key)
        power = _bool_matmul(power, B)

    reach = B | np.eye(M, dtype=bool)
    for _ in range(int(np.ceil(np.log2(M))) + 1):
        reach = _bool_matmul(reach, reach)
    if reach.all():
        raise Periodic("matrix is irreducible but periodic; no power is positive")
    raise NotTransitive("matrix is reducible")


def enumerate_words(A: TransitionMatrix, length: int) -> list[tuple]:
    """All admissible words of ``length`` symbols in lexicographic order."""
    if length < 1:
        raise LengthTooLarge("word length must be >= 1")
    if length > MAX_WORD_LENGTH:
        raise LengthTooLarge(f"word length {length} exceeds {MAX_WORD_LENGTH}")
    A = check_transitive(A)
    succ = [np.flatnonzero(A.entries[a]).tolist() for a in range(A.size)]
    words = [(a,) for a in range(A.size)]
    for _ in range(length - 1):
        words = [w + (b,) for w in words for b in succ[w[-1]]]
    return words


def delta(L1: Interval, L2: Interval) -> int:
    """Smallest ``D`` such that ``L2`` lies in the ``D``-neighbourhood of ``L1``."""
    return max(L2.n_plus - L1.n_plus, L1.n_minus - L2.n_minus, 0)


def is_D_nested(L1: Interval, L2: Interval, D: int) -> bool:
    return min(delta(L1, L2), delta(L2, L1)) <= D


def shift_cylinder(C: Cylinder, t: int) -> Cylinder:
    """``sigma^t C``: the same word on the translated interval ``L - t``."""
    return Cylinder(C.interval.translate(-t), C.word, C.matrix)


def overlap_consistent(C1: Cylinder, C2: Cylinder, A: TransitionMatrix | None = None) -> OverlapResult:
    """Classify the intersection of two cylinders.

    Overlapping or abutting intervals give :class:`Merged` (or
    :class:`Inconsistent` when pinned symbols clash or the junction is
    forbidden).  Otherwise the result is ``Disjoint(gap)`` with
    ``gap = n2_minus - n1_plus >= 2`` measured from the left cylinder.
    """
    A = A if A is not None else (C1.matrix or C2.matrix)
    left, right = (C1, C2) if C1.lo <= C2.lo else (C2, C1)
    gap = right.lo - left.hi
    if gap >= 2:
        return Disjoint(gap)
    lo = left.lo
    hi = max(left.hi, right.hi)
    word = [-1] * (hi - lo + 1)
    for C in (left, right):
        for i, s in enumerate(C.word):
            j = C.lo - lo + i
            if word[j] != -1 and word[j] != s:
                return Inconsistent()
            word[j] = s
    if A is not None and not A.is_admissible(word):
        return Inconsistent()
    one_sided = C1.interval.one_sided and C2.interval.one_sided
    return Merged(Cylinder(Interval(lo, hi, one_sided), tuple(word), A))


def full_shift(M: int = 2) -> TransitionMatrix:
    return check_transitive(np.ones((M, M), dtype=int))


def golden_mean() -> TransitionMatrix:
    """``[[1, 1], [1, 0]]``: symbol 1 may not follow itself."""
    return check_transitive([[1, 1], [1, 0]])


def cylinders_from_spec(A: TransitionMatrix, items: Iterable[dict]) -> list[Cylinder]:
    """Cylinders from ``{"lo": .., "hi": .., "word": [..]}`` records."""
    out = []
    for item in items:
        word = item["word"]
        lo = int(item["lo"])
        if "hi" in item and int(item["hi"]) != lo + len(word) - 1:
            raise InvalidInterval(f"hi={item['hi']} does not match lo={lo} and word length {len(word)}")
        out.append(A.cylinder(lo, word))
    return out
