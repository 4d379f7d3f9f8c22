"""Order-zero operators ``lambda + sum_i m_{f_i} a_i(D)`` and their limits.

Multiplication parts ``f`` are finite sums of products of pulled-back
asymptotic functions (:class:`ESFunction`); multiplier parts ``a`` are
asymptotic functions on frequency space, realised on periodic grids by the
discrete Fourier transform.  A multiplier whose radial limit vanishes plays
the role of a convolution operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from numbers import Number
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import integrate
from scipy.stats import norm, qmc

from .lattice import DirectionQ, SemiLattice, SubspaceQ, contains_direction, enumerate_strata, generate_semilattice
from .model import PotentialTerm, evaluate_potential, limit_value
from .numerics import ConvergenceError, Grid, GridCapExceeded, OperatorMatrix, min_singular_value, sample_directions
from .potentials import AsymptoticFunction, Constant, Product

__all__ = [
    "Monomial",
    "ESFunction",
    "PlainFunction",
    "Bump",
    "BumpTransform",
    "AlgebraElement",
    "SymbolValue",
    "kernel_matrix",
    "fourier_multiplier_matrix",
    "apply_element",
    "symbol",
    "restricted_norm",
    "multiplicativity_defect",
    "symbol_multiplicativity_defect",
    "commutator_profile",
    "tau_element",
    "AlgebraConfig",
    "DirectionEvidence",
    "FredholmReport",
    "fredholm_check",
    "EssentialSpectrumReport",
    "essential_spectrum_points",
]

EVIDENCE_FREDHOLM = "evidence-Fredholm"
EVIDENCE_NOT_FREDHOLM = "evidence-not-Fredholm"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Monomial:
    coeff: float
    factors: tuple[PotentialTerm, ...] = ()


def _factor_at_infinity(t: PotentialTerm, omega) -> float:
    if isinstance(omega, DirectionQ):
        if contains_direction(t.subspace, omega):
            return float(t.function(np.zeros(t.function.dim)))
        return limit_value(t, omega)
    u = t.frame @ np.asarray(omega, dtype=float)
    n = np.linalg.norm(u)
    if n < 1e-12:
        return float(t.function(np.zeros(t.function.dim)))
    return float(t.function.limit(u / n))


@dataclass(frozen=True)
class ESFunction:
    """Finite sum of coefficient times product of pulled-back factors."""

    ambient_dim: int
    monomials: tuple[Monomial, ...] = ()

    @classmethod
    def constant(cls, c: float, d: int) -> "ESFunction":
        return cls(d, (Monomial(float(c)),))

    @classmethod
    def pullback(cls, Y: SubspaceQ, v: AsymptoticFunction, coeff: float = 1.0) -> "ESFunction":
        return cls(Y.ambient_dim, (Monomial(float(coeff), (PotentialTerm(Y, v),)),))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for m in self.monomials:
            val = np.full(x.shape[:-1], m.coeff)
            for t in m.factors:
                val = val * evaluate_potential(t, x)
            out = out + val
        return out

    def __add__(self, other):
        if isinstance(other, Number):
            other = ESFunction.constant(other, self.ambient_dim)
        if not isinstance(other, ESFunction):
            return NotImplemented
        return ESFunction(self.ambient_dim, self.monomials + other.monomials)

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, Number):
            return ESFunction(
                self.ambient_dim, tuple(Monomial(m.coeff * other, m.factors) for m in self.monomials)
            )
        if not isinstance(other, ESFunction):
            return NotImplemented
        return ESFunction(
            self.ambient_dim,
            tuple(
                Monomial(a.coeff * b.coeff, a.factors + b.factors)
                for a in self.monomials
                for b in other.monomials
            ),
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def subspaces(self) -> set[SubspaceQ]:
        return {t.subspace for m in self.monomials for t in m.factors}

    def radial_limit(self, omega) -> float:
        """``lim f(r omega)``; ``omega`` is a :class:`DirectionQ` (exact) or a unit vector."""
        return math.fsum(
            m.coeff * math.prod(_factor_at_infinity(t, omega) for t in m.factors) for m in self.monomials
        )

    def tau(self, alpha: DirectionQ) -> "ESFunction":
        out = []
        for m in self.monomials:
            kept, frozen = [], []
            for t in m.factors:
                (kept if contains_direction(t.subspace, alpha) else frozen).append(t)
            coeff = m.coeff * math.prod(limit_value(t, alpha) for t in frozen)
            out.append(Monomial(coeff, tuple(kept)))
        return ESFunction(self.ambient_dim, tuple(out))

    @property
    def is_c0(self) -> bool:
        """Structural test: every monomial has a vanishing-at-infinity factor on ``X``."""
        return all(
            m.coeff == 0 or any(t.subspace.is_zero() and t.function.is_c0 for t in m.factors)
            for m in self.monomials
        )


@dataclass(frozen=True)
class PlainFunction:
    """A bare callable on ``R^d``; used for functions outside the algebra."""

    fn: Callable
    ambient_dim: int
    name: str = "plain"

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def __mul__(self, other):
        return PlainFunction(lambda x: self(x) * np.asarray(other(x)), self.ambient_dim, f"{self.name}*")

    __rmul__ = __mul__

    def radial_limit(self, omega):
        raise TypeError(f"{self.name} has no radial limits")

    def tau(self, alpha):
        raise TypeError(f"{self.name} is not in the algebra; no limit operator")

    def subspaces(self):
        return set()


@lru_cache(maxsize=None)
def _bump_mass(dim: int) -> float:
    g = lambda u: math.exp(-1.0 / (1.0 - u * u)) if u < 1 else 0.0
    if dim == 1:
        return 2 * integrate.quad(g, 0, 1)[0]
    if dim == 2:
        return 2 * math.pi * integrate.quad(lambda u: u * g(u), 0, 1)[0]
    if dim == 3:
        return 4 * math.pi * integrate.quad(lambda u: u * u * g(u), 0, 1)[0]
    raise ValueError("bumps are implemented for dimensions 1..3")


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported ``phi >= 0`` with unit integral."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        u2 = np.sum((s - np.asarray(self.center)) ** 2, axis=-1) / self.radius**2
        out = np.zeros(u2.shape)
        inside = u2 < 1
        out[inside] = np.exp(-1.0 / (1.0 - u2[inside]))
        return out / (_bump_mass(self.dim) * self.radius**self.dim)


@dataclass(frozen=True)
class BumpTransform(AsymptoticFunction):
    """Multiplier ``a(xi) = int phi(s) exp(i xi.s) ds`` of ``u -> int phi(y - x) u(y) dy``."""

    bump: Bump
    quadrature_points: int = 401
    family = "bump_transform"

    @property
    def dim(self):
        return self.bump.dim

    def _nodes(self):
        n = self.quadrature_points if self.dim == 1 else max(61, int(self.quadrature_points ** (1 / self.dim)) | 1)
        c, r = np.asarray(self.bump.center), self.bump.radius
        axes = [np.linspace(ci - r, ci + r, n) for ci in c]
        mesh = np.meshgrid(*axes, indexing="ij")
        s = np.stack([m.ravel() for m in mesh], axis=-1)
        w = self.bump(s) * (2 * r / (n - 1)) ** self.dim
        return s, w

    def _eval(self, xi):
        s, w = self._nodes()
        flat = xi.reshape(-1, self.dim)
        out = np.empty(len(flat), dtype=complex)
        for start in range(0, len(flat), 512):
            block = flat[start:start + 512]
            out[start:start + 512] = np.exp(1j * block @ s.T) @ w
        out = out.reshape(xi.shape[:-1])
        if np.all(np.asarray(self.bump.center) == 0):
            return out.real
        return out

    def _limit(self, omega):
        return np.zeros(omega.shape[:-1])

    @property
    def is_c0(self):
        return True

    def params(self):
        return {"center": list(self.bump.center), "radius": self.bump.radius}


def _as_function(f, d: int):
    if f is None:
        return ESFunction.constant(1.0, d)
    if isinstance(f, Number):
        return ESFunction.constant(float(f), d)
    return f


def _fn_product(f, g):
    if isinstance(f, ESFunction) and isinstance(g, ESFunction):
        return f * g
    f = f if isinstance(f, PlainFunction) else PlainFunction(f, g.ambient_dim, "f")
    return f * g


def _symbol_product(a, b):
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value, a.dim)
    return Product((a, b))


@dataclass(frozen=True)
class AlgebraElement:
    """``scalar + sum_i m_{f_i} a_i(D)`` with terms ``(f_i, a_i)``."""

    ambient_dim: int
    scalar: float = 0.0
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((f, a) for f, a in self.terms))
        for f, a in self.terms:
            if a.dim != self.ambient_dim or getattr(f, "ambient_dim", self.ambient_dim) != self.ambient_dim:
                raise ValueError("element term lives in another dimension")

    @classmethod
    def multiplication(cls, f, d: int | None = None) -> "AlgebraElement":
        d = d or f.ambient_dim
        return cls(d, 0.0, ((f, Constant(1.0, d)),))

    @classmethod
    def fourier_multiplier(cls, a: AsymptoticFunction) -> "AlgebraElement":
        d = a.dim
        return cls(d, 0.0, ((ESFunction.constant(1.0, d), a),))

    def __add__(self, other):
        if isinstance(other, Number):
            return AlgebraElement(self.ambient_dim, self.scalar + other, self.terms)
        return AlgebraElement(self.ambient_dim, self.scalar + other.scalar, self.terms + other.terms)

    __radd__ = __add__

    def __mul__(self, other):
        """Product at the level of symbols: ``a(D)`` is moved past ``m_g``."""
        if isinstance(other, Number):
            return AlgebraElement(
                self.ambient_dim, self.scalar * other, tuple((_fn_product(f, _as_function(other, self.ambient_dim)), a) for f, a in self.terms)
            )
        terms = [(_fn_product(f, _as_function(other.scalar, self.ambient_dim)), a) for f, a in self.terms if other.scalar != 0]
        terms += [(_fn_product(_as_function(self.scalar, self.ambient_dim), g), b) for g, b in other.terms if self.scalar != 0]
        terms += [(_fn_product(f, g), _symbol_product(a, b)) for f, a in self.terms for g, b in other.terms]
        return AlgebraElement(self.ambient_dim, self.scalar * other.scalar, tuple(terms))

    __rmul__ = __mul__

    def subspaces(self) -> set[SubspaceQ]:
        out = set()
        for f, _ in self.terms:
            out |= f.subspaces()
        return out

    def semilattice(self) -> SemiLattice:
        return generate_semilattice(self.subspaces(), self.ambient_dim)

    @property
    def in_ideal(self) -> bool:
        """No scalar part and only vanishing-at-infinity multipliers."""
        return self.scalar == 0 and all(a.is_c0 for _, a in self.terms)


@dataclass(frozen=True)
class SymbolValue:
    """The principal symbol ``(xi_hat, x) -> scalar + sum_i f_i(x) a_i,oo(xi_hat)``."""

    element: AlgebraElement

    def __call__(self, xi_hat, x) -> np.ndarray:
        E = self.element
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[:-1], E.scalar, dtype=complex)
        for f, a in E.terms:
            out = out + f(x) * complex(a.limit(np.asarray(xi_hat, dtype=float)))
        return _maybe_real(out)

    def at_infinity(self, xi_hat, omega) -> complex:
        """Symbol value at the point at infinity of ``X`` in direction ``omega``."""
        E = self.element
        val = complex(E.scalar)
        for f, a in E.terms:
            val += f.radial_limit(omega) * complex(a.limit(np.asarray(xi_hat, dtype=float)))
        return val.real if val.imag == 0 else val

    @property
    def identically_zero(self) -> bool:
        return self.element.in_ideal


def symbol(E: AlgebraElement) -> SymbolValue:
    return SymbolValue(E)


def _maybe_real(M, rtol: float = 1e-12):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        scale = max(float(np.abs(M).max()), 1.0) if M.size else 1.0
        if M.size == 0 or float(np.abs(M.imag).max()) <= rtol * scale:
            return M.real.copy()
    return M


def kernel_matrix(f, phi: Bump, grid: Grid) -> OperatorMatrix:
    """Dense ``K_ij = f(x_i) phi(x_j - x_i) h^q`` on the nodes of ``grid``."""
    if grid.dim not in (1, 2):
        raise ValueError("kernel matrices are built in dimensions 1 and 2")
    x = grid.points()
    fx = np.ones(len(x)) if f is None else np.asarray(_as_function(f, grid.dim)(x), dtype=float)
    w = grid.spacing**grid.dim
    K = np.empty((len(x), len(x)))
    for start in range(0, len(x), 256):
        rows = x[start:start + 256]
        K[start:start + 256] = phi(x[None, :, :] - rows[:, None, :]) * w
    K *= fx[:, None]
    return OperatorMatrix(K)


def _circulant_indices(grid: Grid):
    n = grid.axis_size
    idx = np.unravel_index(np.arange(grid.size), grid.shape)
    return tuple((i[:, None] - i[None, :]) % n for i in idx)


def fourier_multiplier_matrix(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Dense ``F^-1 diag(values) F`` for symbol values at ``grid.frequencies()``."""
    if grid.boundary != "periodic":
        raise ValueError("Fourier multipliers need a periodic grid")
    c = np.fft.ifftn(np.asarray(values).reshape(grid.shape))
    return _maybe_real(c[_circulant_indices(grid)])


def apply_element(E: AlgebraElement, grid: Grid) -> OperatorMatrix:
    """Matrix of ``E`` on a periodic grid, each term composed as ``m_f`` after ``a(D)``."""
    if grid.dim != E.ambient_dim or grid.dim > 2:
        raise ValueError("apply_element needs a periodic grid of the element's dimension (<= 2)")
    if grid.boundary != "periodic":
        raise ValueError("apply_element needs a periodic grid")
    x, xi = grid.points(), grid.frequencies()
    M = np.eye(grid.size) * E.scalar
    for f, a in E.terms:
        fx = np.asarray(f(x))
        if isinstance(a, Constant):
            M = M + np.diag(fx * a.value)
        else:
            M = M + fx[:, None] * fourier_multiplier_matrix(a(xi), grid)
    return OperatorMatrix(_maybe_real(M))


def restricted_norm(M, grid: Grid, radius: float, outer: float | None = None) -> float:
    """Spectral norm of ``M`` compressed to nodes with ``radius < |x|`` (and
    ``|x|_inf <= outer`` when given)."""
    M = M.toarray() if isinstance(M, OperatorMatrix) else np.asarray(M)
    x = grid.points()
    mask = np.linalg.norm(x, axis=-1) > radius
    if outer is not None:
        mask &= np.max(np.abs(x), axis=-1) <= outer
    if not mask.any():
        return 0.0
    sub = M[np.ix_(mask, mask)]
    return float(sla.svdvals(sub, check_finite=False)[0])


def multiplicativity_defect(E1: AlgebraElement, E2: AlgebraElement, grid: Grid) -> np.ndarray:
    """``apply(E1) apply(E2) - apply(E1 * E2)`` (the product taken on symbols)."""
    A = apply_element(E1, grid).toarray() @ apply_element(E2, grid).toarray()
    return A - apply_element(E1 * E2, grid).toarray()


def symbol_multiplicativity_defect(
    E1: AlgebraElement,
    E2: AlgebraElement,
    grids: Sequence[Grid],
    radius: float,
    margin: float | None = None,
) -> float:
    """Min over ``grids`` of the defect norm restricted to ``radius < |x|``.

    Nodes within ``margin`` (default ``L/4``) of the box faces are left out,
    which keeps the wrap-around seam of the periodic box out of the probe.
    """
    vals = []
    for g in grids:
        outer = g.half_width - (g.half_width / 4 if margin is None else margin)
        vals.append(restricted_norm(multiplicativity_defect(E1, E2, g), g, radius, outer))
    return min(vals)


def commutator_profile(f, phi: Bump, grid: Grid, radii: Sequence[float]) -> list[float]:
    """Norms of ``[m_f, c_phi]`` (kernel ``phi(y-x)(f(x)-f(y))``) restricted
    outside each radius."""
    C = kernel_matrix(None, phi, grid).toarray()
    fx = np.asarray(_as_function(f, grid.dim)(grid.points()), dtype=float)
    comm = fx[:, None] * C - C * fx[None, :]
    return [restricted_norm(comm, grid, R) for R in radii]


def tau_element(E: AlgebraElement, alpha: DirectionQ) -> AlgebraElement:
    """Limit operator along ``alpha``: factors not containing ``alpha`` are
    frozen to their values at infinity; multipliers are translation
    invariant and stay as they are."""
    return AlgebraElement(E.ambient_dim, E.scalar, tuple((f.tau(alpha), a) for f, a in E.terms))


@dataclass(frozen=True)
class AlgebraConfig:
    half_width: float = 16.0
    sizes: tuple[int, ...] | None = None
    ellipticity_floor: float = 1e-3
    invertibility_floor: float = 1e-2
    sphere_samples: int = 64
    window_points: int = 128
    window_half_width: float = 8.0
    direction_budget: int = 32
    monotone_rtol: float = 1e-9

    def grid_sizes(self, d: int) -> tuple[int, ...]:
        if self.sizes is not None:
            return tuple(self.sizes)
        return (128, 256, 512) if d == 1 else (16, 24, 32)


def sphere_samples(d: int, count: int) -> np.ndarray:
    """Deterministic unit vectors: both points of ``S^0``, equispaced angles
    on the circle, Halton-normal points otherwise."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    g = norm.ppf(qmc.Halton(d=d, scramble=False).random(count + 1)[1:])
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _window(d: int, count: int, half_width: float) -> np.ndarray:
    per_axis = max(2, int(math.ceil(count ** (1.0 / d))))
    axis = np.linspace(-half_width, half_width, per_axis)
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _stratum_samples(E: AlgebraElement, S: SemiLattice, budget: int):
    out = []
    for idx, st in enumerate(enumerate_strata(S)):
        dropped_c0 = True
        for f, _ in E.terms:
            for m in f.monomials:
                for t in m.factors:
                    if not st.base.issubspace(t.subspace) and not t.function.is_c0:
                        dropped_c0 = False
        for alpha in sample_directions(st, 1 if dropped_c0 else budget):
            out.append((idx, alpha))
    return out


@dataclass
class DirectionEvidence:
    stratum_index: int
    direction: DirectionQ
    sizes: tuple[int, ...]
    min_singular_values: list[float]
    status: str
    error: str | None = None


@dataclass
class FredholmReport:
    verdict: str
    ellipticity_min: float
    ellipticity_witness: dict
    directions: list[DirectionEvidence]
    witness: dict | None
    config: AlgebraConfig
    note: str = "verdicts are numerical evidence, not proofs"


def _ellipticity(E: AlgebraElement, directions: Sequence[DirectionQ], cfg: AlgebraConfig):
    d = E.ambient_dim
    sig = symbol(E)
    xis = sphere_samples(d, cfg.sphere_samples)
    xs = _window(d, cfg.window_points, cfg.window_half_width)
    omegas = list(sphere_samples(d, cfg.sphere_samples)) + list(directions)
    best, witness = math.inf, {}
    for xi in xis:
        vals = np.abs(sig(xi, xs))
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, witness = float(vals[i]), {"xi": xi.tolist(), "x": xs[i].tolist()}
        for om in omegas:
            v = abs(sig.at_infinity(xi, om))
            if v < best:
                at = str(om) if isinstance(om, DirectionQ) else np.asarray(om).tolist()
                best, witness = float(v), {"xi": xi.tolist(), "x_at_infinity": at}
    return best, witness


def _classify(values: list[float], cfg: AlgebraConfig) -> str:
    rtol = cfg.monotone_rtol
    up = all(b >= a * (1 - rtol) - rtol for a, b in zip(values, values[1:]))
    down = all(b <= a * (1 + rtol) + rtol for a, b in zip(values, values[1:]))
    if all(v >= cfg.invertibility_floor for v in values) and up:
        return "invertible"
    if values[-1] < cfg.invertibility_floor and down:
        return "not-invertible"
    return "unclear"


def fredholm_check(
    E: AlgebraElement, S: SemiLattice | None = None, cfg: AlgebraConfig | None = None
) -> FredholmReport:
    """Ellipticity plus invertibility of every sampled limit operator."""
    cfg = cfg or AlgebraConfig()
    d = E.ambient_dim
    if d > 2:
        raise ValueError("fredholm_check supports dimensions 1 and 2")
    S = S if S is not None else E.semilattice()
    samples = _stratum_samples(E, S, cfg.direction_budget)
    ell_min, ell_witness = _ellipticity(E, [a for _, a in samples], cfg)
    sizes = cfg.grid_sizes(d)
    evidence = []
    for idx, alpha in samples:
        T = tau_element(E, alpha)
        ev = DirectionEvidence(idx, alpha, sizes, [], "unclear")
        try:
            for n in sizes:
                g = Grid(d, cfg.half_width, n, "periodic")
                ev.min_singular_values.append(min_singular_value(apply_element(T, g)))
            ev.status = _classify(ev.min_singular_values, cfg)
        except (ConvergenceError, GridCapExceeded, np.linalg.LinAlgError) as exc:
            ev.status, ev.error = "unclear", f"{type(exc).__name__}: {exc}"
        evidence.append(ev)
    witness = None
    if ell_min < cfg.ellipticity_floor:
        verdict = EVIDENCE_NOT_FREDHOLM
        witness = {"kind": "ellipticity", "min_abs_symbol": ell_min, **ell_witness}
    elif any(e.status == "not-invertible" for e in evidence):
        verdict = EVIDENCE_NOT_FREDHOLM
        bad = next(e for e in evidence if e.status == "not-invertible")
        witness = {"kind": "limit-operator", "direction": str(bad.direction), "min_singular_values": bad.min_singular_values}
    elif all(e.status == "invertible" for e in evidence):
        verdict = EVIDENCE_FREDHOLM
    else:
        verdict = INCONCLUSIVE
    if verdict == EVIDENCE_NOT_FREDHOLM and witness["kind"] == "ellipticity":
        bad = [e for e in evidence if e.status == "not-invertible"]
        if bad:
            witness["limit_operator_direction"] = str(bad[0].direction)
    return FredholmReport(verdict, ell_min, ell_witness, evidence, witness, cfg)


@dataclass
class EssentialSpectrumReport:
    points: np.ndarray
    per_direction: list[tuple[int, DirectionQ, np.ndarray]]
    grid: dict
    resolution: float


def essential_spectrum_points(
    E: AlgebraElement, S: SemiLattice | None = None, cfg: AlgebraConfig | None = None, resolution: float = 1e-9
) -> EssentialSpectrumReport:
    """Union of the spectra of the sampled limit operators on the finest grid."""
    cfg = cfg or AlgebraConfig()
    d = E.ambient_dim
    S = S if S is not None else E.semilattice()
    g = Grid(d, cfg.half_width, max(cfg.grid_sizes(d)), "periodic")
    per = []
    pts = []
    for idx, alpha in _stratum_samples(E, S, cfg.direction_budget):
        M = apply_element(tau_element(E, alpha), g).toarray()
        if not np.allclose(M, M.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise ValueError(f"limit operator along {alpha} is not self-adjoint on this grid")
        ev = sla.eigvalsh(M)
        per.append((idx, alpha, ev))
        pts.append(ev)
    allpts = np.concatenate(pts) if pts else np.zeros(0)
    uniq = np.unique(np.round(allpts / resolution) * resolution)
    return EssentialSpectrumReport(uniq, per, g.describe(), resolution)
