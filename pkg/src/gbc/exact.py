"""Exact eigendata for the two cases where it is cheap.

* Bernoulli measures with rational weights: everything is a ``Fraction``.
* Parry measures on two-letter alphabets: the Perron root of a 2x2 0/1
  matrix is a quadratic irrational, so ``P`` and ``p`` have entries of the
  form ``(a + b*sqrt(d)) / c`` with integers ``a, b, c, d``.

General Perron data are irrational of high degree; use :mod:`gbc.gibbs`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy as sp

from .errors import ValidationError
from .shift import TransitionMatrix, check_transitive

__all__ = ["QuadraticSurd", "ExactChain", "exact_bernoulli", "exact_parry"]


@dataclass(frozen=True)
class QuadraticSurd:
    """The number ``(a + b*sqrt(d)) / c``."""

    a: int
    b: int
    d: int
    c: int

    @classmethod
    def from_expr(cls, expr) -> "QuadraticSurd":
        expr = sp.radsimp(sp.nsimplify(sp.expand(expr)))
        num, den = sp.fraction(sp.together(expr))
        num = sp.expand(num)
        den = sp.Integer(den)
        rad = [t for t in num.atoms(sp.Pow) if t.exp == sp.Rational(1, 2)]
        if len(rad) > 1:
            raise ValidationError(f"{expr} is not a quadratic surd")
        if not rad:
            return cls(int(num), 0, 1, int(den))
        root = rad[0]
        b = num.coeff(root)
        a = sp.expand(num - b * root)
        return cls(int(a), int(b), int(root.base), int(den))

    def to_sympy(self):
        return (sp.Integer(self.a) + sp.Integer(self.b) * sp.sqrt(self.d)) / sp.Integer(self.c)

    def __float__(self):
        return float(self.to_sympy().evalf(30))


@dataclass(frozen=True)
class ExactChain:
    """Exact stochastic matrix and stationary vector (sympy expressions)."""

    P: sp.Matrix
    p: sp.Matrix
    lam: object

    def cylinder_measure(self, word: Sequence[int]):
        value = self.p[word[0]]
        for a, b in zip(word[:-1], word[1:]):
            value *= self.P[a, b]
        return sp.nsimplify(sp.radsimp(sp.simplify(value)))

    def as_surds(self):
        return (
            [[QuadraticSurd.from_expr(x) for x in self.P.row(i)] for i in range(self.P.rows)],
            [QuadraticSurd.from_expr(x) for x in self.p],
        )


def exact_bernoulli(weights: Sequence) -> ExactChain:
    w = [Fraction(x) for x in weights]
    if sum(w) != 1 or any(x <= 0 for x in w):
        raise ValidationError("Bernoulli weights must be positive and sum to 1")
    row = [sp.Rational(x.numerator, x.denominator) for x in w]
    n = len(w)
    return ExactChain(sp.Matrix([row] * n), sp.Matrix(row), sp.Integer(1))


def exact_parry(A) -> ExactChain:
    """Parry measure of a two-letter SFT with exact quadratic eigendata."""
    A = check_transitive(A)
    if A.size != 2:
        raise ValidationError("exact Parry data are provided for 2x2 matrices only")
    L = sp.Matrix(A.to_list())
    t = sp.symbols("t")
    roots = sp.solve(L.charpoly(t).as_expr(), t)
    lam = max(roots, key=lambda r: float(r))
    r = (L - lam * sp.eye(2)).nullspace()[0]
    l = (L.T - lam * sp.eye(2)).nullspace()[0]
    if float(r[0]) < 0:
        r = -r
    if float(l[0]) < 0:
        l = -l
    P = sp.Matrix(2, 2, lambda u, v: sp.radsimp(sp.simplify(L[u, v] * r[v] / (lam * r[u]))))
    w = sp.Matrix([l[i] * r[i] for i in range(2)])
    total = sum(w)
    p = sp.Matrix([sp.radsimp(sp.simplify(x / total)) for x in w])
    return ExactChain(P, p, sp.radsimp(lam))
