"""Exact rational subspace arithmetic and intersection semilattices.

Everything here works over :class:`fractions.Fraction`; no floating point is
used.  Subspaces are stored in reduced row-echelon form so that equality of
subspaces is plain tuple equality.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import permutations, product
from math import gcd, lcm
from typing import Iterable, Iterator, Sequence

__all__ = [
    "DimensionMismatch",
    "ClosureTooLarge",
    "SubspaceQ",
    "DirectionQ",
    "SemiLattice",
    "Stratum",
    "CheckResult",
    "canonicalize",
    "nullspace",
    "intersect",
    "contains_direction",
    "generate_semilattice",
    "msc_generators",
    "block_permute",
    "preimage",
    "check_symmetric_action",
    "check_projection_and_difference",
    "enumerate_strata",
    "stratum_of",
]

DEFAULT_MAX_CLOSURE = 100_000


class DimensionMismatch(ValueError):
    pass


class ClosureTooLarge(RuntimeError):
    pass


def as_fraction(x) -> Fraction:
    """Convert ints, strings like ``"3/4"`` and Fractions exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rational entries")
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if hasattr(x, "__index__"):
        return Fraction(x.__index__())
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def _rref(rows: Sequence[Sequence[Fraction]], ncols: int):
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(m):
            break
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return tuple(tuple(row) for row in m[:r]), tuple(pivots)


def _check_rows(vectors, d: int) -> list[list[Fraction]]:
    rows = []
    for v in vectors:
        v = list(v)
        if len(v) != d:
            raise DimensionMismatch(f"vector of length {len(v)} in ambient dimension {d}")
        rows.append([as_fraction(x) for x in v])
    return rows


def nullspace(rows: Sequence[Sequence], d: int) -> list[tuple[Fraction, ...]]:
    """Basis of ``{x : r.x = 0 for every row r}`` in ``Q^d``."""
    R, pivots = _rref(_check_rows(rows, d), d)
    free = [c for c in range(d) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * d
        v[f] = Fraction(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return basis


def _primitive_integer_row(row: Sequence[Fraction]) -> tuple[int, ...]:
    den = lcm(*(x.denominator for x in row)) if row else 1
    ints = [int(x * den) for x in row]
    g = reduce(gcd, ints, 0)
    if g > 1:
        ints = [i // g for i in ints]
    return tuple(ints)


@dataclass(frozen=True)
class SubspaceQ:
    """A linear subspace of ``Q^d`` held by its reduced row-echelon basis.

    Build instances through :func:`canonicalize` or the ``zero``/``full``/
    ``span`` constructors; the raw constructor trusts its input.
    """

    ambient_dim: int
    basis: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def span(cls, vectors: Iterable[Sequence], d: int) -> "SubspaceQ":
        return canonicalize(list(vectors), d)

    @classmethod
    def zero(cls, d: int) -> "SubspaceQ":
        return cls(d, ())

    @classmethod
    def full(cls, d: int) -> "SubspaceQ":
        one, nil = Fraction(1), Fraction(0)
        return cls(d, tuple(tuple(one if i == j else nil for j in range(d)) for i in range(d)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codim(self) -> int:
        return self.ambient_dim - len(self.basis)

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x != 0) for row in self.basis)

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return len(self.basis) == self.ambient_dim

    def annihilator(self) -> list[tuple[Fraction, ...]]:
        """Rows spanning the orthogonal complement (the constraint system)."""
        return nullspace(self.basis, self.ambient_dim)

    def contains_vector(self, v: Sequence) -> bool:
        if len(v) != self.ambient_dim:
            raise DimensionMismatch("vector length differs from ambient dimension")
        w = [as_fraction(x) for x in v]
        for row, p in zip(self.basis, self.pivots):
            c = w[p]
            if c:
                w = [a - c * b for a, b in zip(w, row)]
        return not any(w)

    def issubspace(self, other: "SubspaceQ") -> bool:
        _same_dim(self, other)
        return all(other.contains_vector(row) for row in self.basis)

    def integer_rows(self) -> list[list[int]]:
        return [list(_primitive_integer_row(row)) for row in self.basis]

    def sort_key(self):
        return (self.dim, self.basis)

    def __repr__(self) -> str:
        rows = ", ".join("(" + ",".join(str(x) for x in r) + ")" for r in self.basis)
        return f"SubspaceQ(d={self.ambient_dim}, span{{{rows}}})"


def _same_dim(*spaces) -> int:
    dims = {s.ambient_dim for s in spaces}
    if len(dims) != 1:
        raise DimensionMismatch(f"ambient dimensions differ: {sorted(dims)}")
    return dims.pop()


def canonicalize(vectors: Sequence[Sequence], d: int) -> SubspaceQ:
    """Span of ``vectors`` in reduced row-echelon canonical form."""
    if d < 1:
        raise ValueError("ambient dimension must be positive")
    basis, _ = _rref(_check_rows(vectors, d), d)
    return SubspaceQ(d, basis)


def intersect(A: SubspaceQ, B: SubspaceQ) -> SubspaceQ:
    d = _same_dim(A, B)
    if A.is_full():
        return B
    if B.is_full():
        return A
    return canonicalize(nullspace(A.annihilator() + B.annihilator(), d), d)


@dataclass(frozen=True)
class DirectionQ:
    """A rational half-line, stored as a primitive integer vector.

    The sign is kept: ``(1, 0)`` and ``(-1, 0)`` are different directions.
    """

    ambient_dim: int
    vector: tuple[int, ...]

    def __post_init__(self):
        if len(self.vector) != self.ambient_dim:
            raise DimensionMismatch("direction length differs from ambient dimension")
        if not any(self.vector):
            raise ValueError("a direction must be a nonzero vector")
        if reduce(gcd, self.vector, 0) != 1:
            raise ValueError("direction vector is not primitive; use DirectionQ.of")

    @classmethod
    def of(cls, vector: Sequence) -> "DirectionQ":
        v = [as_fraction(x) for x in vector]
        if not any(v):
            raise ValueError("a direction must be a nonzero vector")
        return cls(len(v), _primitive_integer_row(v))

    def __neg__(self) -> "DirectionQ":
        return DirectionQ(self.ambient_dim, tuple(-x for x in self.vector))

    def __str__(self) -> str:
        return ",".join(str(x) for x in self.vector)


def contains_direction(Y: SubspaceQ, alpha: DirectionQ) -> bool:
    _same_dim(Y, alpha)
    return Y.contains_vector(alpha.vector)


@dataclass(frozen=True)
class SemiLattice:
    """A finite intersection-closed family of subspaces containing ``{0}``."""

    ambient_dim: int
    elements: tuple[SubspaceQ, ...]
    check: InitVar[bool] = True
    _index: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self, check: bool):
        elems = self.elements
        if any(e.ambient_dim != self.ambient_dim for e in elems):
            raise DimensionMismatch("semilattice element with foreign ambient dimension")
        index = frozenset(elems)
        if len(index) != len(elems):
            raise ValueError("duplicate subspaces in semilattice")
        if SubspaceQ.zero(self.ambient_dim) not in index:
            raise ValueError("semilattice must contain the zero subspace")
        object.__setattr__(self, "_index", index)
        if not check:
            return
        for i, a in enumerate(elems):
            for b in elems[i + 1:]:
                if intersect(a, b) not in index:
                    raise ValueError(f"not closed under intersection: {a} and {b}")

    @classmethod
    def of(cls, elements: Iterable[SubspaceQ], d: int, check: bool = True) -> "SemiLattice":
        return cls(d, tuple(sorted(set(elements), key=SubspaceQ.sort_key)), check)

    def __contains__(self, Y) -> bool:
        return Y in self._index

    def __iter__(self) -> Iterator[SubspaceQ]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


def generate_semilattice(
    generators: Iterable[SubspaceQ], d: int, max_size: int = DEFAULT_MAX_CLOSURE
) -> SemiLattice:
    """Smallest intersection-closed family containing ``generators`` and ``{0}``."""
    elems: set[SubspaceQ] = {SubspaceQ.zero(d)}
    for g in generators:
        if g.ambient_dim != d:
            raise DimensionMismatch(f"generator {g} is not in dimension {d}")
        elems.add(g)
    frontier = list(elems)
    while frontier:
        fresh = []
        known = list(elems)
        for a in frontier:
            for b in known:
                c = intersect(a, b)
                if c not in elems:
                    elems.add(c)
                    fresh.append(c)
                    known.append(c)
                    if len(elems) > max_size:
                        raise ClosureTooLarge(
                            f"intersection closure exceeded {max_size} elements"
                        )
        frontier = fresh
    return SemiLattice.of(elems, d, check=False)


def _block(i: int, d: int) -> range:
    return range(i * d, (i + 1) * d)


def msc_generators(n: int, d: int) -> list[SubspaceQ]:
    """The subspaces ``{x_i = 0}`` then ``{x_i = x_j}`` (i < j) of ``(R^d)^n``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    D = n * d
    gens = []
    for i in range(n):
        rows = []
        for c in _block(i, d):
            r = [0] * D
            r[c] = 1
            rows.append(r)
        gens.append(canonicalize(nullspace(rows, D), D))
    for i in range(n):
        for j in range(i + 1, n):
            rows = []
            for k in range(d):
                r = [0] * D
                r[i * d + k] = 1
                r[j * d + k] = -1
                rows.append(r)
            gens.append(canonicalize(nullspace(rows, D), D))
    return gens


def block_permute(Y: SubspaceQ, sigma: Sequence[int], d: int) -> SubspaceQ:
    """Image of ``Y`` under ``(x_1..x_n) -> y`` with ``y_sigma(i) = x_i`` (0-based sigma)."""
    n = len(sigma)
    if Y.ambient_dim != n * d:
        raise DimensionMismatch("subspace is not in (R^d)^n")
    rows = []
    for row in Y.basis:
        new = [Fraction(0)] * (n * d)
        for i, s in enumerate(sigma):
            new[s * d:(s + 1) * d] = row[i * d:(i + 1) * d]
        rows.append(new)
    return canonicalize(rows, n * d)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: tuple | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def check_symmetric_action(S: SemiLattice, n: int, d: int) -> CheckResult:
    """Is ``S`` stable under every block permutation of ``(R^d)^n``?"""
    if S.ambient_dim != n * d:
        raise DimensionMismatch("semilattice is not in (R^d)^n")
    for sigma in permutations(range(n)):
        for Y in S:
            image = block_permute(Y, sigma, d)
            if image not in S:
                return CheckResult(False, (sigma, Y), f"{sigma} maps {Y} outside S")
    return CheckResult(True, None, f"stable under all {n}! block permutations")


def preimage(Y: SubspaceQ, I: Sequence[int], n: int, d: int) -> SubspaceQ:
    """Preimage of ``Y`` under ``(x_1..x_n) -> (x_i1..x_ik)`` (1-based indices)."""
    k = len(I)
    if Y.ambient_dim != k * d:
        raise DimensionMismatch("target subspace is not in (R^d)^k")
    if len(set(I)) != k or any(not 1 <= i <= n for i in I):
        raise ValueError(f"index list {tuple(I)} is not {k} distinct indices in 1..{n}")
    D = n * d
    lifted = []
    for w in Y.annihilator():
        row = [Fraction(0)] * D
        for j, i in enumerate(I):
            row[(i - 1) * d:i * d] = w[j * d:(j + 1) * d]
        lifted.append(row)
    return canonicalize(nullspace(lifted, D), D)


def check_projection_and_difference(
    Sn: SemiLattice, Sk: SemiLattice, I: Sequence[int], n: int, k: int, d: int
) -> CheckResult:
    """Coordinate projections pull ``Sk`` into ``Sn``; every ``ker(x_i - x_j)`` lies in ``Sn``."""
    if len(I) != k:
        raise ValueError(f"expected {k} indices, got {len(I)}")
    if Sn.ambient_dim != n * d or Sk.ambient_dim != k * d:
        raise DimensionMismatch("semilattices do not live in (R^d)^n and (R^d)^k")
    for Y in Sk:
        P = preimage(Y, I, n, d)
        if P not in Sn:
            return CheckResult(False, ("projection", tuple(I), Y), f"preimage of {Y} missing")
    pair_kernels = msc_generators(n, d)[n:]
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for (i, j), K in zip(pairs, pair_kernels):
        if K not in Sn:
            return CheckResult(False, ("difference", (i, j), K), f"ker delta_{i}{j} missing")
    return CheckResult(True, None, "projections and difference maps compatible")


@dataclass(frozen=True)
class Stratum:
    """Directions whose containing family equals ``filter``.

    ``base`` is the smallest element of the family containing the
    directions, or the whole space for directions in no proper element.
    """

    base: SubspaceQ
    filter: tuple[SubspaceQ, ...]
    excluded: tuple[SubspaceQ, ...]
    representative: DirectionQ

    @property
    def generic(self) -> bool:
        return not self.filter

    def contains(self, alpha: DirectionQ) -> bool:
        return contains_direction(self.base, alpha) and not any(
            contains_direction(Y, alpha) for Y in self.excluded
        )


def _height_values(h: int) -> list[int]:
    vals = [0]
    for k in range(1, h + 1):
        vals += [k, -k]
    return vals


def _representative(Z: SubspaceQ, excluded: Sequence[SubspaceQ], max_height: int = 256) -> DirectionQ:
    m = Z.dim
    for h in range(1, max_height + 1):
        for coeffs in product(_height_values(h), repeat=m):
            if max(abs(c) for c in coeffs) != h:
                continue
            v = [sum(c * row[j] for c, row in zip(coeffs, Z.basis)) for j in range(Z.ambient_dim)]
            if not any(Y.contains_vector(v) for Y in excluded):
                return DirectionQ.of(v)
    raise RuntimeError(f"no representative direction of height <= {max_height} in {Z}")


def enumerate_strata(S: SemiLattice) -> list[Stratum]:
    d = S.ambient_dim
    X = SubspaceQ.full(d)
    bases = [Z for Z in S if not Z.is_zero()]
    if X not in S:
        bases.append(X)
    strata = []
    for Z in bases:
        filt = tuple(Y for Y in S if Z.issubspace(Y))
        excl = tuple(Y for Y in S if not Z.issubspace(Y))
        strata.append(Stratum(Z, filt, excl, _representative(Z, excl)))
    return strata


def stratum_of(strata: Sequence[Stratum], alpha: DirectionQ) -> int:
    """Index of the unique stratum containing ``alpha``."""
    hits = [i for i, s in enumerate(strata) if s.contains(alpha)]
    if len(hits) != 1:
        raise ValueError(f"direction {alpha} lies in {len(hits)} strata")
    return hits[0]
