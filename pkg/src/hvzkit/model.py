"""Hamiltonians ``-Laplacian + sum_Y v_Y(pi_Y x)`` and their limits at infinity."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as _fold
import numpy as np

from .lattice import (
    DimensionMismatch,
    DirectionQ,
    SemiLattice,
    SubspaceQ,
    canonicalize,
    contains_direction,
    generate_semilattice,
    intersect,
)
from .potentials import AsymptoticFunction, Constant

__all__ = [
    "DirectionInsideY",
    "PotentialTerm",
    "Hamiltonian",
    "LimitHamiltonian",
    "ReducedHamiltonian",
    "quotient_frame",
    "subspace_frame",
    "unit_vector",
    "evaluate_potential",
    "limit_value",
    "tau_limit",
    "reduce",
    "translation_conjugation_probe",
]


class DirectionInsideY(ValueError):
    pass


def unit_vector(alpha: DirectionQ) -> np.ndarray:
    a = np.asarray(alpha.vector, dtype=float)
    return a / np.linalg.norm(a)


def _orthogonal_rows(Y: SubspaceQ) -> list[list[Fraction]]:
    """Exact Gram-Schmidt (without normalisation) of the annihilator of ``Y``."""
    ortho: list[list[Fraction]] = []
    for v in Y.annihilator():
        w = list(v)
        for u in ortho:
            c = sum(a * b for a, b in zip(w, u)) / sum(b * b for b in u)
            w = [a - c * b for a, b in zip(w, u)]
        ortho.append(w)
    return ortho


def quotient_frame(Y: SubspaceQ) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of ``Y``.

    Gram-Schmidt runs in exact arithmetic; only the final normalisation is
    rounded, so rows are orthogonal to ``Y`` up to one rounding per entry.
    """
    ortho = _orthogonal_rows(Y)
    frame = np.zeros((len(ortho), Y.ambient_dim))
    for i, w in enumerate(ortho):
        norm = math.sqrt(sum(x * x for x in w))
        frame[i] = [float(x) / norm for x in w]
    return frame


def subspace_frame(Z: SubspaceQ) -> np.ndarray:
    """Orthonormal rows spanning ``Z`` itself."""
    return quotient_frame(canonicalize(Z.annihilator(), Z.ambient_dim))


@dataclass(frozen=True)
class PotentialTerm:
    """A function on ``X/Y`` seen on ``X`` through the projection onto ``Y^perp``."""

    subspace: SubspaceQ
    function: AsymptoticFunction
    frame: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = self.subspace.codim
        if self.function.dim != q:
            raise DimensionMismatch(
                f"function on R^{self.function.dim} attached to a subspace of codimension {q}"
            )
        frame = quotient_frame(self.subspace)
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)

    @property
    def ambient_dim(self) -> int:
        return self.subspace.ambient_dim


def evaluate_potential(term: PotentialTerm, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != term.ambient_dim:
        raise DimensionMismatch(f"points of dimension {x.shape[-1]} for a term on R^{term.ambient_dim}")
    return term.function(x @ term.frame.T)


def limit_value(term: PotentialTerm, alpha: DirectionQ) -> float:
    """Value at infinity of the term along ``alpha`` (``alpha`` not in ``Y``)."""
    if contains_direction(term.subspace, alpha):
        raise DirectionInsideY(f"direction {alpha} lies in {term.subspace}")
    u = term.frame @ unit_vector(alpha)
    return float(term.function.limit(u / np.linalg.norm(u)))


@dataclass(frozen=True)
class Hamiltonian:
    ambient_dim: int
    terms: tuple[PotentialTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.ambient_dim != self.ambient_dim:
                raise DimensionMismatch("potential term lives in another dimension")

    def potential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            out = out + evaluate_potential(t, x)
        return out

    def subspace_family(self) -> tuple[SubspaceQ, ...]:
        seen = {SubspaceQ.zero(self.ambient_dim): None}
        for t in self.terms:
            seen.setdefault(t.subspace, None)
        return tuple(seen)

    def semilattice(self) -> SemiLattice:
        return generate_semilattice(self.subspace_family(), self.ambient_dim)


@dataclass(frozen=True)
class LimitHamiltonian:
    direction: DirectionQ
    retained: tuple[PotentialTerm, ...]
    shift: float
    invariant_subspace: SubspaceQ

    def as_hamiltonian(self) -> Hamiltonian:
        """Fold the shift back in as a constant term on ``X/{0}``."""
        d = self.direction.ambient_dim
        const = PotentialTerm(SubspaceQ.zero(d), Constant(self.shift, d))
        return Hamiltonian(d, self.retained + (const,))


def tau_limit(H: Hamiltonian, alpha: DirectionQ) -> LimitHamiltonian:
    if alpha.ambient_dim != H.ambient_dim:
        raise DimensionMismatch("direction and Hamiltonian live in different dimensions")
    retained, dropped = [], []
    for t in H.terms:
        (retained if contains_direction(t.subspace, alpha) else dropped).append(t)
    shift = math.fsum(limit_value(t, alpha) for t in dropped)
    Z = _fold(intersect, (t.subspace for t in retained), SubspaceQ.full(H.ambient_dim))
    return LimitHamiltonian(alpha, tuple(retained), shift, Z)


@dataclass(frozen=True)
class ReducedHamiltonian:
    """``-Laplacian + sum_i f_i(P_i t)`` on ``R^m`` in orthonormal coordinates ``t``
    of the complement of the invariant subspace (``x = t @ embedding``)."""

    ambient_dim: int
    embedding: np.ndarray
    terms: tuple[tuple[np.ndarray, AsymptoticFunction], ...] = ()

    def potential(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape[:-1])
        for P, f in self.terms:
            out = out + f(t @ P.T)
        return out


def reduce(L: LimitHamiltonian) -> tuple[ReducedHamiltonian, float]:
    """Separate variables along the invariant subspace.

    Returns the operator on the complement and the constant shift, so that
    the spectrum of the limit operator is ``[shift + min spec(H_red), oo)``.
    """
    W = quotient_frame(L.invariant_subspace)
    shift = L.shift
    terms = []
    for t in L.retained:
        if t.function.dim == 0:
            shift += float(t.function(np.zeros((0,))))
            continue
        terms.append((t.frame @ W.T, t.function))
    return ReducedHamiltonian(W.shape[0], W, tuple(terms)), shift


def _window_points(d: int, half_width: float, per_axis: int) -> np.ndarray:
    axis = np.linspace(-half_width, half_width, per_axis)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def translation_conjugation_probe(
    H: Hamiltonian,
    alpha: DirectionQ,
    r: float,
    half_width: float = 5.0,
    per_axis: int | None = None,
) -> float:
    """Sup over a window of ``|V(x + r a) - V_alpha(x)|`` with ``a`` the unit
    vector of ``alpha`` and ``V_alpha`` the potential of the limit operator."""
    if r <= 0:
        raise ValueError("r must be positive")
    d = H.ambient_dim
    if per_axis is None:
        per_axis = {1: 201, 2: 41, 3: 15}.get(d, 7)
    x = _window_points(d, half_width, per_axis)
    L = tau_limit(H, alpha)
    far = np.zeros(len(x))
    for t in H.terms:
        # projected shift from exact dot products: exactly 0 when alpha lies in Y
        rows = _orthogonal_rows(t.subspace)
        dots = [sum(w_i * a_i for w_i, a_i in zip(w, alpha.vector)) for w in rows]
        norms = [math.sqrt(sum(c * c for c in w)) for w in rows]
        shift = np.array([float(c) / n for c, n in zip(dots, norms)]) / math.hypot(*alpha.vector)
        far = far + t.function(x @ t.frame.T + r * shift)
    near = L.shift + sum((evaluate_potential(t, x) for t in L.retained), np.zeros(len(x)))
    return float(np.max(np.abs(far - near)))
