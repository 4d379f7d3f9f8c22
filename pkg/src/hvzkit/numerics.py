"""Finite-difference discretisation, eigensolvers and threshold estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.stats import norm, qmc

from .lattice import DirectionQ, SemiLattice, Stratum, enumerate_strata
from .model import Hamiltonian, reduce, subspace_frame, tau_limit

__all__ = [
    "GridCapExceeded",
    "ConvergenceError",
    "Grid",
    "OperatorMatrix",
    "SpectrumResult",
    "discretize_hamiltonian",
    "lowest_eigenvalues",
    "min_singular_value",
    "richardson",
    "sample_directions",
    "ThresholdConfig",
    "ThresholdRecord",
    "ThresholdReport",
    "threshold_estimate",
    "StabilityReport",
    "classify_eigenvalue_stability",
]

DEFAULT_GRID_CAP = 2_000_000
DENSE_EIG_LIMIT = 3000
DENSE_SVD_LIMIT = 4096
RESIDUAL_RTOL = 1e-8
SAMPLING_CAVEAT = (
    "the union over all directions is approximated by finitely many sampled "
    "directions per stratum; this is numerical evidence, not a proof"
)


class GridCapExceeded(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``[-L, L]^q`` with spacing ``h = 2L/n``.

    Dirichlet grids carry the ``n - 1`` interior nodes per axis, periodic
    grids the ``n`` nodes ``-L + k h``.
    """

    dim: int
    half_width: float
    points_per_axis: int
    boundary: str = "dirichlet"
    cap: int = DEFAULT_GRID_CAP

    def __post_init__(self):
        if not 0 <= self.dim <= 3:
            raise ValueError("grids are supported in dimensions 0..3")
        if self.points_per_axis < 2:
            raise ValueError("need at least two points per axis")
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.size > self.cap:
            raise GridCapExceeded(f"{self.size} grid points exceed the cap {self.cap}")

    @classmethod
    def from_spacing(cls, dim: int, half_width: float, spacing: float, boundary: str = "dirichlet", **kw):
        return cls(dim, half_width, int(round(2 * half_width / spacing)), boundary, **kw)

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / self.points_per_axis

    @property
    def axis_size(self) -> int:
        return self.points_per_axis - 1 if self.boundary == "dirichlet" else self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.axis_size,) * self.dim

    @property
    def size(self) -> int:
        return self.axis_size**self.dim

    def axis(self) -> np.ndarray:
        h, L = self.spacing, self.half_width
        k = np.arange(1, self.points_per_axis) if self.boundary == "dirichlet" else np.arange(self.points_per_axis)
        return -L + h * k

    def points(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*([self.axis()] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def frequencies(self) -> np.ndarray:
        """Angular DFT frequencies matching :meth:`points` (periodic grids)."""
        k = 2 * np.pi * np.fft.fftfreq(self.axis_size, d=self.spacing)
        if self.dim == 0:
            return np.zeros((1, 0))
        mesh = np.meshgrid(*([k] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "half_width": self.half_width,
            "points_per_axis": self.points_per_axis,
            "spacing": self.spacing,
            "boundary": self.boundary,
        }


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: object
    symmetric: bool = False

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def norm_estimate(self) -> float:
        """Max absolute row sum, an upper bound for the 2-norm of symmetric matrices."""
        if self.is_sparse:
            return float(abs(self.matrix).sum(axis=1).max())
        return float(np.abs(self.matrix).sum(axis=1).max())


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    residual_norms: np.ndarray
    method: str
    grid: dict | None = None
    extrapolated: bool = False


def _second_difference(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    main = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    T = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        T[0, n - 1] += -1.0
        T[n - 1, 0] += -1.0
    return (T.tocsr() / h**2)


def discretize_hamiltonian(H, grid: Grid) -> OperatorMatrix:
    """Central-difference ``-Laplacian + V`` on ``grid``.

    ``H`` needs ``ambient_dim`` and a vectorised ``potential(points)``;
    both :class:`~hvzkit.model.Hamiltonian` and the reduced operators qualify.
    """
    if H.ambient_dim != grid.dim:
        raise ValueError(f"operator on R^{H.ambient_dim} but grid of dimension {grid.dim}")
    q, n = grid.dim, grid.axis_size
    V = np.asarray(H.potential(grid.points()), dtype=float).reshape(-1)
    if q == 0:
        return OperatorMatrix(sp.csr_matrix(np.array([[V[0]]])), symmetric=True)
    T = _second_difference(n, grid.spacing, grid.boundary == "periodic")
    I = sp.identity(n, format="csr")
    lap = sp.csr_matrix((grid.size, grid.size))
    for axis in range(q):
        factors = [T if k == axis else I for k in range(q)]
        lap = lap + _kron_all(factors)
    A = (lap + sp.diags(V)).tocsr()
    return OperatorMatrix(A, symmetric=True)


def _kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


def _residuals(A, vals, vecs) -> np.ndarray:
    R = A @ vecs - vecs * vals
    return np.linalg.norm(R, axis=0)


def lowest_eigenvalues(
    A: OperatorMatrix, k: int = 1, method: str = "auto", maxiter: int = 10_000
) -> SpectrumResult:
    """``k`` smallest eigenvalues of a symmetric operator matrix, with residuals."""
    if not A.symmetric:
        raise ValueError("lowest_eigenvalues needs a symmetric matrix")
    N = A.N
    if not 1 <= k <= N:
        raise ValueError(f"k={k} outside 1..{N}")
    if method == "auto":
        method = "dense" if N <= DENSE_EIG_LIMIT else "iterative"
    if method == "iterative" and k >= N - 1:
        method = "dense"
    if method == "dense":
        M = A.toarray()
        vals, vecs = sla.eigh(M, subset_by_index=[0, k - 1])
        res = _residuals(M, vals, vecs)
    elif method == "iterative":
        M = A.matrix if A.is_sparse else sp.csr_matrix(A.matrix)
        diag = M.diagonal()
        radius = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(diag)
        sigma = float(np.min(diag - radius)) - 1.0
        v0 = np.linspace(1.0, 2.0, N)
        try:
            vals, vecs = spla.eigsh(M, k=k, sigma=sigma, which="LM", v0=v0, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge within {maxiter} iterations") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        res = _residuals(M, vals, vecs)
    else:
        raise ValueError(f"unknown method {method!r}")
    bound = RESIDUAL_RTOL * A.norm_estimate()
    if np.any(res > bound):
        raise ConvergenceError(f"eigenpair residual {res.max():.3e} exceeds {bound:.3e}")
    return SpectrumResult(np.asarray(vals), res, method)


def min_singular_value(A: OperatorMatrix | np.ndarray) -> float:
    if not isinstance(A, OperatorMatrix):
        A = OperatorMatrix(A)
    if A.matrix.shape[0] != A.matrix.shape[1]:
        raise ValueError("min_singular_value expects a square matrix")
    if A.N <= DENSE_SVD_LIMIT:
        return float(sla.svdvals(A.toarray(), check_finite=False).min())
    v0 = np.linspace(1.0, 2.0, A.N)
    try:
        s = spla.svds(A.matrix, k=1, which="SM", v0=v0, maxiter=10_000, return_singular_vectors=False)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("smallest singular value did not converge") from exc
    return float(max(s.min(), 0.0))


def richardson(h_coarse: float, value_coarse: float, h_fine: float, value_fine: float) -> float:
    """Eliminate the ``h^2`` error term from two second-order estimates."""
    a, b = h_coarse**2, h_fine**2
    return (a * value_fine - b * value_coarse) / (a - b)


def _rationalize(v: np.ndarray, Z, max_den: int) -> DirectionQ | None:
    # coordinates w.r.t. a reduced row-echelon basis are the pivot entries
    coeffs = [Fraction(float(v[p])).limit_denominator(max_den) for p in Z.pivots]
    if not any(coeffs):
        return None
    vec = [sum(c * row[j] for c, row in zip(coeffs, Z.basis)) for j in range(Z.ambient_dim)]
    return DirectionQ.of(vec)


def sample_directions(stratum: Stratum, budget: int, max_den: int = 1000) -> list[DirectionQ]:
    """Representative first, then deterministic low-discrepancy directions
    inside the stratum (rationalised, deduplicated, excluded ones rejected)."""
    out = [stratum.representative]
    if budget <= 1:
        return out
    Z = stratum.base
    m = Z.dim
    if m == 1:
        candidates = [-stratum.representative]
    else:
        Q = subspace_frame(Z)
        u = qmc.Halton(d=m, scramble=False).random(budget + 1)[1:]
        g = norm.ppf(u)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        candidates = []
        for row in g @ Q:
            alpha = _rationalize(row, Z, max_den)
            if alpha is not None:
                candidates.append(alpha)
    for alpha in candidates:
        if len(out) >= budget:
            break
        if alpha not in out and stratum.contains(alpha):
            out.append(alpha)
    return out


@dataclass(frozen=True)
class ThresholdConfig:
    half_widths: tuple[float, ...] = (8.0, 12.0)
    spacings: tuple[float, ...] = (0.1, 0.05)
    direction_budget: int = 32
    attain_tol: float = 1e-6


@dataclass
class ThresholdRecord:
    stratum_index: int
    base: object
    filter: tuple
    direction: DirectionQ
    shift: float
    reduced_dim: int
    lambda_min: dict = field(default_factory=dict)
    extrapolated_lambda: float | None = None
    onset: float | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ThresholdReport:
    records: list[ThresholdRecord]
    sigma_ess: float
    attaining: list[int]
    config: ThresholdConfig
    caveat: str = SAMPLING_CAVEAT

    def onsets_by_stratum(self) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for r in self.records:
            if r.onset is not None:
                out.setdefault(r.stratum_index, []).append(r.onset)
        return out


def threshold_estimate(
    H: Hamiltonian, S: SemiLattice | None = None, cfg: ThresholdConfig | None = None
) -> ThresholdReport:
    """Bottom of the essential spectrum as the minimum, over strata and
    sampled directions, of the bottoms of the limit-operator spectra."""
    cfg = cfg or ThresholdConfig()
    S = S if S is not None else H.semilattice()
    strata = enumerate_strata(S)
    L_max = max(cfg.half_widths)
    spacings = sorted(cfg.spacings, reverse=True)
    h_fine = spacings[-1]
    h_coarse = spacings[-2] if len(spacings) > 1 else None
    records = []
    for idx, st in enumerate(strata):
        dropped = [t for t in H.terms if not st.base.issubspace(t.subspace)]
        budget = 1 if all(t.function.is_c0 for t in dropped) else cfg.direction_budget
        for alpha in sample_directions(st, budget):
            L = tau_limit(H, alpha)
            H_red, shift = reduce(L)
            rec = ThresholdRecord(idx, st.base, st.filter, alpha, shift, H_red.ambient_dim)
            try:
                if H_red.ambient_dim == 0:
                    # point operator: its only eigenvalue is exact, no grid
                    rec.extrapolated_lambda = float(
                        lowest_eigenvalues(discretize_hamiltonian(H_red, Grid(0, 1.0, 2)), 1).eigenvalues[0]
                    )
                else:
                    for Lw in cfg.half_widths:
                        for h in cfg.spacings:
                            g = Grid.from_spacing(H_red.ambient_dim, Lw, h)
                            ev = lowest_eigenvalues(discretize_hamiltonian(H_red, g), 1)
                            rec.lambda_min[(Lw, h)] = float(ev.eigenvalues[0])
                    if h_coarse is None:
                        rec.extrapolated_lambda = rec.lambda_min[(L_max, h_fine)]
                    else:
                        rec.extrapolated_lambda = richardson(
                            h_coarse, rec.lambda_min[(L_max, h_coarse)], h_fine, rec.lambda_min[(L_max, h_fine)]
                        )
                rec.onset = shift + rec.extrapolated_lambda
            except (ConvergenceError, GridCapExceeded) as exc:
                rec.error = f"{type(exc).__name__}: {exc}"
            records.append(rec)
    onsets = [r.onset for r in records if r.onset is not None]
    sigma = min(onsets) if onsets else math.nan
    attaining = sorted({r.stratum_index for r in records if r.onset is not None and r.onset <= sigma + cfg.attain_tol})
    return ThresholdReport(records, sigma, attaining, cfg)


@dataclass
class StabilityReport:
    half_widths: tuple[float, float]
    spacing: float
    eigenvalues: dict
    stable: list[float]
    unstable_lowest: dict
    onset: float
    tol: float


def _gaps(vals: np.ndarray) -> np.ndarray:
    g = np.full(len(vals), np.inf)
    if len(vals) > 1:
        d = np.diff(vals)
        g[:-1] = d
        g[1:] = np.minimum(g[1:], d)
    return g


def classify_eigenvalue_stability(
    H: Hamiltonian,
    half_widths: tuple[float, float] = (8.0, 12.0),
    spacing: float = 0.1,
    n_eigs: int = 12,
    tol: float = 1e-3,
    max_eigs: int = 200,
) -> StabilityReport:
    """Split the low spectrum of the full operator into box-stable eigenvalues
    and box-quantised continuum, and locate the continuum onset.

    An eigenvalue is stable when it moves by less than ``tol`` between the two
    boxes and its nearest-neighbour gap does not shrink with the box (box
    continuum gaps shrink like ``L^-2`` near a threshold and like ``L^-1``
    above it; the cut sits halfway to the slower rate).  The
    lowest unstable eigenvalue is extrapolated in ``L^-2`` to estimate where
    the continuum starts.
    """
    if H.ambient_dim > 2:
        raise ValueError("stability classification is limited to dimension <= 2")
    L1, L2 = sorted(half_widths)
    shrink = (L1 / L2 + 1.0) / 2.0
    k = n_eigs
    while True:
        ev = {}
        for Lw in (L1, L2):
            A = discretize_hamiltonian(H, Grid.from_spacing(H.ambient_dim, Lw, spacing))
            ev[Lw] = lowest_eigenvalues(A, min(k, A.N)).eigenvalues
        e1, e2 = ev[L1], ev[L2]
        g1, g2 = _gaps(e1), _gaps(e2)
        stable1 = np.zeros(len(e1), bool)
        stable2 = np.zeros(len(e2), bool)
        for i, lam in enumerate(e1):
            j = int(np.argmin(np.abs(e2 - lam)))
            if abs(e2[j] - lam) < tol and not stable2[j] and g2[j] >= shrink * g1[i]:
                stable1[i] = stable2[j] = True
        # the top computed eigenvalue has an incomplete neighbourhood
        found = (~stable1[:-1]).any() and (~stable2[:-1]).any()
        if found or k >= max_eigs or k >= len(e1):
            break
        k = min(2 * k, max_eigs)
    if not (~stable1).any() or not (~stable2).any():
        raise ConvergenceError(f"no continuum eigenvalue among the lowest {k}")
    u1 = float(e1[~stable1][0])
    u2 = float(e2[~stable2][0])
    onset = (L2**2 * u2 - L1**2 * u1) / (L2**2 - L1**2)
    return StabilityReport(
        (L1, L2), spacing, {L1: e1, L2: e2}, [float(x) for x in e2[stable2]], {L1: u1, L2: u2}, onset, tol
    )
