"""Bounded functions on R^q with uniform radial limits at infinity.

Each family knows its own limit on the unit sphere in closed form, so limits
at infinity are evaluated exactly rather than by sampling far away.  All
functions take arrays of points of shape ``(..., q)`` and return ``(...)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AsymptoticFunction",
    "GaussianWell",
    "PoschlTeller",
    "RegularizedCoulomb",
    "AngularHomogeneous",
    "Constant",
    "Sum",
    "Product",
    "function_from_dict",
]


def _points(z, dim: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or z.shape[-1] != dim:
        raise ValueError(f"expected points with trailing axis {dim}, got shape {z.shape}")
    return z


class AsymptoticFunction:
    """Base class; subclasses are frozen dataclasses with a ``dim`` field."""

    dim: int
    family: str = ""

    def __call__(self, z) -> np.ndarray:
        return self._eval(_points(z, self.dim))

    def limit(self, omega) -> np.ndarray:
        """Radial limit ``lim_{r->oo} f(r*omega)`` for unit vectors ``omega``."""
        return self._limit(_points(omega, self.dim))

    @property
    def is_c0(self) -> bool:
        return False

    def _eval(self, z):
        raise NotImplementedError

    def _limit(self, omega):
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params()}

    def __add__(self, other):
        return Sum((self, other))

    def __mul__(self, other):
        return Product((self, other))


@dataclass(frozen=True)
class GaussianWell(AsymptoticFunction):
    """``-depth * exp(-|z|^2 / width^2)``."""

    depth: float
    width: float = 1.0
    dim: int = 1
    family = "gaussian_well"

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")

    def _eval(self, z):
        r2 = np.sum(z * z, axis=-1)
        return -self.depth * np.exp(-r2 / self.width**2)

    def _limit(self, omega):
        return np.zeros(omega.shape[:-1])

    @property
    def is_c0(self):
        return True

    def params(self):
        return {"depth": self.depth, "width": self.width}


@dataclass(frozen=True)
class PoschlTeller(AsymptoticFunction):
    """``-strength / cosh(z)^2`` on the line."""

    strength: float
    dim: int = 1
    family = "poschl_teller"

    def __post_init__(self):
        if self.dim != 1:
            raise ValueError("Poschl-Teller wells are one-dimensional")

    def _eval(self, z):
        # 1/cosh^2 written with exp(-2|z|) so large |z| does not overflow
        e = np.exp(-2.0 * np.abs(z[..., 0]))
        return -4.0 * self.strength * e / (1.0 + e) ** 2

    def _limit(self, omega):
        return np.zeros(omega.shape[:-1])

    @property
    def is_c0(self):
        return True

    def params(self):
        return {"strength": self.strength}


@dataclass(frozen=True)
class RegularizedCoulomb(AsymptoticFunction):
    """``charge / sqrt(1 + |z|^2)``."""

    charge: float
    dim: int = 1
    family = "regularized_coulomb"

    def _eval(self, z):
        return self.charge / np.sqrt(1.0 + np.sum(z * z, axis=-1))

    def _limit(self, omega):
        return np.zeros(omega.shape[:-1])

    @property
    def is_c0(self):
        return True

    def params(self):
        return {"charge": self.charge}


@dataclass(frozen=True)
class AngularHomogeneous(AsymptoticFunction):
    """``rho(|z|) g(z/|z|)`` with ``rho(r) = r^2/(1+r^2)`` and affine profile
    ``g(w) = offset + coefficients . w``.

    The value at the origin is 0 and the radial limit in direction ``w`` is
    ``g(w)``.  In one dimension use :meth:`one_dim` to prescribe the two
    limits at ``+oo`` and ``-oo``.
    """

    offset: float
    coefficients: tuple[float, ...]
    family = "angular_homogeneous"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("at least one coefficient is required")

    @property
    def dim(self) -> int:
        return len(self.coefficients)

    @classmethod
    def one_dim(cls, plus: float, minus: float) -> "AngularHomogeneous":
        return cls((plus + minus) / 2, ((plus - minus) / 2,))

    def profile(self, omega) -> np.ndarray:
        omega = _points(omega, self.dim)
        return self.offset + omega @ np.asarray(self.coefficients)

    def _eval(self, z):
        r2 = np.sum(z * z, axis=-1)
        r = np.sqrt(r2)
        # rho(r) g(z/r) expanded so that r = 0 needs no special case
        return (self.offset * r2 + r * (z @ np.asarray(self.coefficients))) / (1.0 + r2)

    def _limit(self, omega):
        return self.offset + omega @ np.asarray(self.coefficients)

    def params(self):
        return {"offset": self.offset, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class Constant(AsymptoticFunction):
    value: float
    dim: int = 1
    family = "constant"

    def _eval(self, z):
        return np.full(z.shape[:-1], float(self.value))

    def _limit(self, omega):
        return np.full(omega.shape[:-1], float(self.value))

    @property
    def is_c0(self):
        return self.value == 0

    def params(self):
        return {"value": self.value}


def _common_dim(parts) -> int:
    dims = {p.dim for p in parts}
    if len(dims) != 1:
        raise ValueError(f"cannot combine functions of dimensions {sorted(dims)}")
    return dims.pop()


@dataclass(frozen=True)
class Sum(AsymptoticFunction):
    parts: tuple
    family = "sum"

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        _common_dim(self.parts)

    @property
    def dim(self):
        return self.parts[0].dim

    def _eval(self, z):
        return sum(p(z) for p in self.parts)

    def _limit(self, omega):
        return sum(p.limit(omega) for p in self.parts)

    @property
    def is_c0(self):
        return all(p.is_c0 for p in self.parts)

    def params(self):
        return {"terms": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class Product(AsymptoticFunction):
    parts: tuple
    family = "product"

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        _common_dim(self.parts)

    @property
    def dim(self):
        return self.parts[0].dim

    def _eval(self, z):
        return math.prod(p(z) for p in self.parts)

    def _limit(self, omega):
        return math.prod(p.limit(omega) for p in self.parts)

    @property
    def is_c0(self):
        # every factor is bounded, so one vanishing factor suffices
        return any(p.is_c0 for p in self.parts)

    def params(self):
        return {"terms": [p.to_dict() for p in self.parts]}


def function_from_dict(spec: dict, dim: int) -> AsymptoticFunction:
    """Inverse of ``to_dict``; ``dim`` is the dimension of the quotient."""
    family = spec["family"]
    p = dict(spec.get("params", {}))
    if family == "gaussian_well":
        return GaussianWell(float(p["depth"]), float(p.get("width", 1.0)), dim)
    if family == "poschl_teller":
        return PoschlTeller(float(p["strength"]), dim)
    if family == "regularized_coulomb":
        return RegularizedCoulomb(float(p["charge"]), dim)
    if family == "angular_homogeneous":
        if "coefficients" in p:
            f = AngularHomogeneous(float(p.get("offset", 0.0)), p["coefficients"])
        else:
            f = AngularHomogeneous.one_dim(float(p["plus"]), float(p["minus"]))
        if f.dim != dim:
            raise ValueError(f"angular profile has {f.dim} coefficients, quotient has dimension {dim}")
        return f
    if family == "constant":
        return Constant(float(p["value"]), dim)
    if family in ("sum", "product"):
        parts = tuple(function_from_dict(t, dim) for t in p["terms"])
        return Sum(parts) if family == "sum" else Product(parts)
    raise ValueError(f"unknown function family {family!r}")
