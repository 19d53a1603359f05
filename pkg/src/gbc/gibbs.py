"""Gibbs measures of locally constant potentials on a subshift of finite type.

A potential of memory ``m`` depends on ``w_0 .. w_{m-1}``.  For ``m > 2`` the
chain is recoded onto admissible ``(m-1)``-blocks, so the Gibbs measure is a
stationary Markov chain on a finite state space in every case.  The state at
coordinate ``i`` is the block ``w_i .. w_{i+m-2}`` (the symbol itself when
``m <= 2``); pinning the symbol at ``i`` constrains the first letter of that
state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BlowUp,
    InsufficientSamples,
    InvalidPotential,
    NoConvergence,
)
from .shift import (
    Cylinder,
    Inconsistent,
    Merged,
    TransitionMatrix,
    check_transitive,
    delta,
    enumerate_words,
    overlap_consistent,
    shift_cylinder,
)

__all__ = [
    "Potential",
    "MarkovGibbs",
    "CorrelationTerm",
    "MixingFit",
    "FactConstants",
    "build_markov_gibbs",
    "cylinder_measure",
    "joint_measure",
    "correlation",
    "mixing_rate_check",
    "fact_constants",
    "overlap_envelope",
    "bernoulli",
    "parry",
]

MAX_MEMORY = 12
MAX_STATES = 4096
POWER_TOL = 1e-14
POWER_MAX_ITER = 10**6
STRUCT_TOL = 1e-12
ZERO_CORRELATION = 1e-12


@dataclass(frozen=True)
class Potential:
    """Locally constant potential: one real value per admissible ``memory``-block."""

    memory: int
    values: Mapping[tuple, float]

    @classmethod
    def constant(cls, A: TransitionMatrix, c: float = 0.0, memory: int = 1) -> "Potential":
        return cls(memory, {w: float(c) for w in enumerate_words(A, memory)})

    @classmethod
    def from_function(cls, A: TransitionMatrix, memory: int, fn: Callable[[tuple], float]) -> "Potential":
        return cls(memory, {w: float(fn(w)) for w in enumerate_words(A, memory)})

    @classmethod
    def from_dict(cls, data: Mapping) -> "Potential":
        try:
            memory = int(data["memory"])
            values = {tuple(int(s) for s in item["block"]): float(item["value"]) for item in data["values"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPotential(f"malformed potential document: {exc}") from exc
        return cls(memory, values)

    def to_dict(self) -> dict:
        return {
            "memory": self.memory,
            "values": [{"block": list(b), "value": v} for b, v in sorted(self.values.items())],
        }

    def shifted(self, c: float) -> "Potential":
        return Potential(self.memory, {b: v + c for b, v in self.values.items()})

    def validate(self, A: TransitionMatrix) -> None:
        if not 1 <= self.memory <= MAX_MEMORY:
            raise BlowUp(f"memory must be in [1, {MAX_MEMORY}], got {self.memory}")
        expected = set(enumerate_words(A, self.memory))
        got = set(self.values)
        if got != expected:
            missing = sorted(expected - got)[:3]
            extra = sorted(got - expected)[:3]
            raise InvalidPotential(f"potential blocks mismatch; missing {missing}, unexpected {extra}")
        vals = np.fromiter(self.values.values(), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise InvalidPotential("potential values must be finite")


@dataclass(frozen=True, eq=False)
class MarkovGibbs:
    """Ruelle-Perron-Frobenius data of a Gibbs measure, as a Markov chain.

    Attributes
    ----------
    base : TransitionMatrix
    memory : int
        Memory of the potential the measure was built from.
    block_order : list of tuple
        Recoded alphabet; ``block_order[u]`` is the block for state ``u``.
    P : ndarray (S, S)
        Row-stochastic transition matrix.
    p : ndarray (S,)
        Stationary distribution of ``P``.
    lam : float
        Perron eigenvalue of the weighted matrix.
    pressure : float
        ``log(lam)``.
    theta3 : float
        Largest modulus among the non-Perron eigenvalues of ``P``.
    """

    base: TransitionMatrix
    memory: int
    block_order: list
    P: np.ndarray
    p: np.ndarray
    lam: float
    pressure: float
    theta3: float
    first_symbol: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.P.shape[0]

    @property
    def symbol_mass(self) -> np.ndarray:
        """Marginal distribution of a single coordinate."""
        return np.bincount(self.first_symbol, weights=self.p, minlength=self.base.size)

    def mask(self, symbol: int) -> np.ndarray:
        return (self.first_symbol == symbol).astype(float)

    def alpha(self, C: Cylinder) -> np.ndarray:
        """``alpha[u] = mu(C and state u at C.hi)``."""
        v = self.p * self.mask(C.word[0])
        for s in C.word[1:]:
            v = (v @ self.P) * self.mask(s)
        return v

    def beta(self, C: Cylinder) -> np.ndarray:
        """``beta[u] = mu(C | state u at C.lo)``."""
        b = self.mask(C.word[-1])
        for s in reversed(C.word[:-1]):
            b = self.mask(s) * (self.P @ b)
        return b

    def power(self, g: int) -> np.ndarray:
        return np.linalg.matrix_power(self.P, g)

    def power_stack(self, G: int) -> np.ndarray:
        """``P**g`` for ``g = 0..G``, frozen at the stationary projector once converged."""
        S = self.n_states
        limit = np.outer(np.ones(S), self.p)
        out = np.empty((G + 1, S, S))
        out[0] = np.eye(S)
        converged = False
        for g in range(1, G + 1):
            if converged:
                out[g] = limit
                continue
            out[g] = out[g - 1] @ self.P
            if np.abs(out[g] - limit).max() < 1e-18:
                out[g] = limit
                converged = True
        return out

    def to_dict(self) -> dict:
        return {
            "pressure": self.pressure,
            "theta3": self.theta3,
            "P": self.P.tolist(),
            "p": self.p.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class CorrelationTerm:
    m: int
    n: int
    value: float


@dataclass(frozen=True)
class MixingFit:
    c3: float
    theta3_emp: float
    independent: bool = False
    n_used: int = 0


@dataclass(frozen=True)
class FactConstants:
    """Explicit constants for the cylinder-measure envelopes of one measure."""

    c1: float
    theta1: float
    c2: float
    theta2: float


def _perron(L: np.ndarray, left: bool = False):
    """Power iteration for the Perron vector of a primitive non-negative matrix.

    Deterministic all-ones start; stops when the normalised iterate moves by
    less than ``POWER_TOL`` (relative, max norm).
    """
    M = L.T if left else L
    v = np.ones(M.shape[0])
    v /= v.sum()
    lam = 0.0
    for _ in range(POWER_MAX_ITER):
        w = M @ v
        lam = w.sum()
        w /= lam
        if np.abs(w - v).max() <= POWER_TOL * np.abs(w).max():
            return lam, w
        v = w
    raise NoConvergence(f"power iteration did not converge in {POWER_MAX_ITER} steps")


def _recode(A: TransitionMatrix, phi: Potential):
    m = phi.memory
    if m <= 2:
        states = [(a,) for a in range(A.size)]
        adj = A.entries.astype(bool)
        S = A.size
        weights = np.zeros((S, S))
        for u in range(S):
            for v in range(S):
                if adj[u, v]:
                    block = (u,) if m == 1 else (u, v)
                    weights[u, v] = math.exp(phi.values[block])
        return states, weights
    states = enumerate_words(A, m - 1)
    if len(states) > MAX_STATES:
        raise BlowUp(f"recoded alphabet has {len(states)} > {MAX_STATES} states")
    index = {s: i for i, s in enumerate(states)}
    S = len(states)
    weights = np.zeros((S, S))
    for u, su in enumerate(states):
        for b in np.flatnonzero(A.entries[su[-1]]):
            sv = su[1:] + (int(b),)
            weights[u, index[sv]] = math.exp(phi.values[su + (int(b),)])
    return states, weights


def _second_modulus(P: np.ndarray) -> float:
    if P.shape[0] == 1:
        return 0.0
    ev = np.linalg.eigvals(P)
    drop = int(np.argmin(np.abs(ev - 1.0)))
    rest = np.delete(ev, drop)
    return float(np.abs(rest).max())


def build_markov_gibbs(A, phi: Potential | None = None) -> MarkovGibbs:
    """Stochasticise the weighted transfer matrix of ``phi``.

    ``P[u, v] = L[u, v] r[v] / (lam r[u])`` and ``p[u] ~ l[u] r[u]`` with
    ``l``, ``r`` the left/right Perron vectors of ``L``.  Raises
    :class:`~gbc.errors.Periodic` when ``A`` is irreducible but periodic.
    """
    A = check_transitive(A)
    if phi is None:
        phi = Potential.constant(A, 0.0)
    phi.validate(A)
    states, L = _recode(A, phi)
    S = len(states)
    if S > MAX_STATES:
        raise BlowUp(f"recoded alphabet has {S} > {MAX_STATES} states")

    # factor out the largest weight so that e^phi never overflows the iteration
    scale = L.max()
    lam_r, r = _perron(L / scale)
    _, l = _perron(L / scale, left=True)
    lam = lam_r * scale

    P = L * r[None, :] / (lam * r[:, None])
    P /= P.sum(axis=1, keepdims=True)
    p = l * r
    p /= p.sum()
    for _ in range(100):
        if np.abs(p @ P - p).max() <= STRUCT_TOL * 1e-2:
            break
        p = p @ P
        p /= p.sum()
    if np.abs(P.sum(axis=1) - 1).max() > STRUCT_TOL or np.abs(p @ P - p).max() > STRUCT_TOL:
        raise NoConvergence("stochasticity/stationarity residual above 1e-12")
    if np.any(p <= 0):
        raise NoConvergence("stationary vector has non-positive entries")

    Q = (P.T * p[None, :]) / p[:, None]
    Q /= Q.sum(axis=1, keepdims=True)
    first = np.array([s[0] for s in states], dtype=np.int64)
    for arr in (P, p, Q, first):
        arr.setflags(write=False)
    return MarkovGibbs(
        base=A,
        memory=phi.memory,
        block_order=list(states),
        P=P,
        p=p,
        lam=float(lam),
        pressure=float(math.log(lam)),
        theta3=_second_modulus(P),
        first_symbol=first,
        Q=Q,
    )


def bernoulli(weights: Sequence[float]) -> MarkovGibbs:
    """Product measure on the full shift with the given symbol probabilities."""
    w = np.asarray(weights, dtype=float)
    A = check_transitive(np.ones((len(w), len(w)), dtype=int))
    return build_markov_gibbs(A, Potential(1, {(a,): math.log(x) for a, x in enumerate(w)}))


def parry(A) -> MarkovGibbs:
    """Measure of maximal entropy (zero potential)."""
    return build_markov_gibbs(A)


def cylinder_measure(g: MarkovGibbs, C: Cylinder) -> float:
    return float(g.alpha(C).sum())


def joint_measure(g: MarkovGibbs, C1: Cylinder, C2: Cylinder) -> float:
    """``mu(C1 & C2)``; disjoint cylinders are bridged with ``P**gap``."""
    res = overlap_consistent(C1, C2, g.base)
    if isinstance(res, Inconsistent):
        return 0.0
    if isinstance(res, Merged):
        return cylinder_measure(g, res.cylinder)
    left, right = (C1, C2) if C1.lo <= C2.lo else (C2, C1)
    return float(g.alpha(left) @ g.power(res.gap) @ g.beta(right))


def correlation(g: MarkovGibbs, Cm: Cylinder, Cn: Cylinder, m: int, n: int) -> CorrelationTerm:
    """``R_mn = mu(sigma^-m C_m & sigma^-n C_n) - mu(C_m) mu(C_n)``.

    By invariance this equals ``mu(C_m & sigma^(m-n) C_n) - mu(C_m) mu(C_n)``.
    """
    mu_m = cylinder_measure(g, Cm)
    if m == n and Cm == Cn:
        return CorrelationTerm(m, n, mu_m - mu_m * mu_m)
    mu_n = cylinder_measure(g, Cn)
    joint = joint_measure(g, Cm, shift_cylinder(Cn, m - n))
    return CorrelationTerm(m, n, joint - mu_m * mu_n)


def _fit_log_linear(x: np.ndarray, y: np.ndarray):
    slope, intercept = np.polyfit(x.astype(float), np.log(y), 1)
    return slope, intercept


def mixing_rate_check(g: MarkovGibbs, samples: Iterable[tuple]) -> MixingFit:
    """Fit the exponential decay of normalised correlations of disjoint pairs.

    For each pair ``(C1, C2)`` with ``C1`` left of ``C2`` the normalised
    correlation ``|mu(C1 & C2) / (mu(C1) mu(C2)) - 1|`` is regressed in log
    scale against ``gap = n2_minus - n1_plus``.  ``theta3_emp`` is the
    exponential of the slope; ``c3`` is the smallest constant that makes
    ``c3 * theta3_emp**gap`` an upper envelope for all non-zero samples.
    Values below ``1e-12`` count as exact independence.
    """
    samples = list(samples)
    if len(samples) < 10:
        raise InsufficientSamples(f"need at least 10 pairs, got {len(samples)}")
    gaps, vals = [], []
    for C1, C2 in samples:
        left, right = (C1, C2) if C1.lo <= C2.lo else (C2, C1)
        gap = right.lo - left.hi
        if gap < 1:
            raise InsufficientSamples("mixing-rate pairs must sit on disjoint intervals")
        mu1 = cylinder_measure(g, left)
        mu2 = cylinder_measure(g, right)
        joint = joint_measure(g, left, right)
        gaps.append(gap)
        vals.append(abs(joint / (mu1 * mu2) - 1.0))
    gaps = np.asarray(gaps)
    vals = np.asarray(vals)
    keep = vals > ZERO_CORRELATION
    if not keep.any():
        return MixingFit(c3=0.0, theta3_emp=0.0, independent=True, n_used=0)
    if np.unique(gaps[keep]).size < 2:
        raise InsufficientSamples("need non-zero correlations at two or more distinct gaps")
    slope, _ = _fit_log_linear(gaps[keep], vals[keep])
    theta = math.exp(slope)
    c3 = float(np.max(np.log(vals[keep]) - slope * gaps[keep]))
    return MixingFit(c3=math.exp(c3), theta3_emp=theta, independent=False, n_used=int(keep.sum()))


def fact_constants(g: MarkovGibbs) -> FactConstants:
    """Constants for the cylinder envelopes ``c1 th1^n <= mu(C) <= c2 th2^n``.

    ``theta1``/``theta2`` are the smallest positive/largest entries over the
    forward and time-reversed kernels (left extensions are governed by the
    reversed chain).  With ``n0`` symbols per recoded state, ``c1 = min p``
    and ``c2 = theta2**-n0 / min p``; both bounds, and the nested-ratio bound,
    hold for every admissible cylinder.
    """
    entries = np.concatenate([g.P.ravel(), g.Q.ravel()])
    pos = entries[entries > 0]
    th1 = float(pos.min())
    th2 = float(pos.max())
    n0 = max(g.memory - 1, 1)
    pmin = float(g.p.min())
    return FactConstants(c1=pmin, theta1=th1, c2=th2 ** (-n0) / pmin, theta2=th2)


def overlap_envelope(g: MarkovGibbs, pairs: Iterable[tuple]):
    """Fit ``(c4, theta4)`` with ``|mu(C1&C2) - mu(C1)mu(C2)| <= c4 theta4^delta mu(C1)``.

    ``delta`` is the asymmetric distance between the two defining intervals.
    The per-``delta`` maxima are regressed in log scale; ``c4`` is then the
    tightest constant making the envelope hold for every pair.
    """
    ds, vals = [], []
    for C1, C2 in pairs:
        mu1 = cylinder_measure(g, C1)
        cov = joint_measure(g, C1, C2) - mu1 * cylinder_measure(g, C2)
        ds.append(delta(C1.interval, C2.interval))
        vals.append(abs(cov) / mu1)
    ds = np.asarray(ds)
    vals = np.asarray(vals)
    keep = vals > ZERO_CORRELATION
    levels = np.unique(ds[keep])
    if levels.size < 2:
        raise InsufficientSamples("need non-zero covariances at two or more distinct deltas")
    peak = np.array([vals[keep & (ds == d)].max() for d in levels])
    slope, _ = _fit_log_linear(levels, peak)
    theta4 = math.exp(slope)
    c4 = float(np.max(vals[keep] / theta4 ** ds[keep]))
    return c4, theta4

