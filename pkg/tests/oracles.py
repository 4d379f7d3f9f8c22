"""Independent reference computations in exact sympy arithmetic."""

import itertools
from fractions import Fraction

import sympy


def _key(M: sympy.Matrix, d: int):
    """rref row tuple of the row space of M (rows are spanning vectors)."""
    if M.rows == 0:
        return ()
    R, piv = M.rref()
    return tuple(tuple(Fraction(int(x.p), int(x.q)) for x in R.row(i)) for i in range(len(piv)))


def _oracle_span(rows, d):
    return sympy.Matrix(rows) if rows else sympy.zeros(0, d)


def _oracle_meet(a, b, d):
    """Intersection via sympy: nullspace of the stacked annihilators."""
    ann = []
    for key in (a, b):
        M = _oracle_span([list(r) for r in key], d)
        ann += [list(v) for v in (M.nullspace() if M.rows else [sympy.eye(d).col(i) for i in range(d)])]
    A = sympy.Matrix([[sympy.Rational(x) for x in row] for row in ann]) if ann else sympy.zeros(0, d)
    basis = A.nullspace() if A.rows else [sympy.eye(d).col(i) for i in range(d)]
    return _key(sympy.Matrix.hstack(*basis).T if basis else sympy.zeros(0, d), d)


def oracle_closure(generators, d):
    """Brute force: intersect every pair until nothing new appears."""
    S = {()} | {_key(_oracle_span([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in g.basis], d), d) for g in generators}
    while True:
        new = {_oracle_meet(a, b, d) for a in S for b in S} - S
        if not new:
            return S
        S |= new


def msc_oracle_generators(n, d):
    """Straight from the definition, via sympy nullspaces."""
    D = n * d
    out = []
    for i in range(n):
        C = sympy.Matrix([[1 if c == i * d + k else 0 for c in range(D)] for k in range(d)])
        out.append(C)
    for i, j in itertools.combinations(range(n), 2):
        C = sympy.Matrix([[1 if c == i * d + k else (-1 if c == j * d + k else 0) for c in range(D)] for k in range(d)])
        out.append(C)
    keys = []
    for C in out:
        ns = C.nullspace()
        keys.append(_key(sympy.Matrix.hstack(*ns).T, D))
    return keys
