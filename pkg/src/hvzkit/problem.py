"""Problem files: JSON schema, parsing into model objects, and serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .algebra import AlgebraElement, Bump, BumpTransform, ESFunction, Monomial, PlainFunction
from .lattice import SubspaceQ, canonicalize
from .model import Hamiltonian, PotentialTerm
from .potentials import AsymptoticFunction, function_from_dict

__all__ = ["SCHEMA_VERSION", "SCHEMA", "ProblemError", "Problem", "load_problem", "parse_problem", "dump_problem"]

SCHEMA_VERSION = "hvzkit/1"

_rational = {
    "oneOf": [
        {"type": "integer"},
        {"type": "string", "pattern": r"^-?[0-9]+(/[0-9]*[1-9][0-9]*)?$"},
    ]
}
_matrix = {"type": "array", "items": {"type": "array", "items": _rational}}
_function = {
    "type": "object",
    "properties": {"family": {"type": "string"}, "params": {"type": "object"}},
    "required": ["family"],
    "additionalProperties": False,
}
_factor = {
    "type": "object",
    "properties": {"subspace": _matrix, "potential": _function},
    "required": ["subspace", "potential"],
    "additionalProperties": False,
}
_esfunction = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"subspace": _matrix, "potential": _function, "coeff": {"type": "number"}},
            "required": ["subspace", "potential"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"constant": {"type": "number"}},
            "required": ["constant"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "monomials": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"coeff": {"type": "number"}, "factors": {"type": "array", "items": _factor}},
                        "required": ["coeff", "factors"],
                        "additionalProperties": False,
                    },
                }
            },
            "required": ["monomials"],
            "additionalProperties": False,
        },
    ]
}
_plain = {
    "type": "object",
    "properties": {"plain": {"enum": ["sin", "cos"]}, "frequency": {"type": "number"}},
    "required": ["plain"],
    "additionalProperties": False,
}
_multiplier = {
    "oneOf": [
        _function,
        {
            "type": "object",
            "properties": {
                "family": {"const": "bump_transform"},
                "params": {
                    "type": "object",
                    "properties": {
                        "center": {"type": "array", "items": {"type": "number"}},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["center", "radius"],
                    "additionalProperties": False,
                },
            },
            "required": ["family", "params"],
            "additionalProperties": False,
        },
    ]
}
_numbers = {"type": "array", "items": {"type": "number"}, "minItems": 1}


def _task(name: str, props: dict, required=()) -> dict:
    return {
        "type": "object",
        "properties": {"task": {"const": name}, **props},
        "required": ["task", *required],
        "additionalProperties": False,
    }


_tol = {"type": "number", "exclusiveMinimum": 0}
SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "dimension": {"type": "integer", "minimum": 1},
        "subspaces": {"type": "array", "items": _matrix},
        "terms": {"type": "array", "items": _factor},
        "elements": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "lambda": {"type": "number"},
                    "terms": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"f": _esfunction, "a": _multiplier},
                            "required": ["f", "a"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["name"],
                "additionalProperties": False,
            },
        },
        "tasks": {
            "type": "array",
            "items": {
                "oneOf": [
                    _task("hvz", {"expect": {"type": "number"}, "tol": _tol, "stability": {"type": "boolean"}}),
                    _task(
                        "fredholm",
                        {"element": {"type": "string"}, "expect": {"enum": ["fredholm", "not-fredholm"]}},
                        ["element"],
                    ),
                    _task("lattice-check", {"n": {"type": "integer", "minimum": 1}, "d": {"type": "integer", "minimum": 1}}),
                    _task("strata", {"expect_count": {"type": "integer", "minimum": 1}}),
                    _task(
                        "commutator-probe",
                        {
                            "f": {"oneOf": [_esfunction, _plain]},
                            "bump": {
                                "type": "object",
                                "properties": {"center": _numbers, "radius": _tol},
                                "required": ["center", "radius"],
                                "additionalProperties": False,
                            },
                            "half_width": _tol,
                            "sizes": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1},
                            "radii": _numbers,
                            "expect": {"enum": ["decay", "plateau"]},
                        },
                        ["f", "bump"],
                    ),
                    _task("tau", {"direction": {"type": "array", "items": {"type": "integer"}, "minItems": 1}}, ["direction"]),
                    _task(
                        "spectrum",
                        {"spacing": _tol, "half_width": _tol, "k": {"type": "integer", "minimum": 1}, "expect": {"type": "number"}, "tol": _tol},
                    ),
                ]
            },
        },
        "config": {
            "type": "object",
            "properties": {
                "threshold": {
                    "type": "object",
                    "properties": {"half_widths": _numbers, "spacings": _numbers, "direction_budget": {"type": "integer", "minimum": 1}},
                    "additionalProperties": False,
                },
                "stability": {
                    "type": "object",
                    "properties": {
                        "half_widths": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "spacing": _tol,
                        "n_eigs": {"type": "integer", "minimum": 2},
                        "tol": _tol,
                    },
                    "additionalProperties": False,
                },
                "algebra": {
                    "type": "object",
                    "properties": {
                        "half_width": _tol,
                        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1},
                        "ellipticity_floor": _tol,
                        "invertibility_floor": _tol,
                        "sphere_samples": {"type": "integer", "minimum": 1},
                        "window_points": {"type": "integer", "minimum": 1},
                        "window_half_width": _tol,
                        "direction_budget": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
                "max_closure": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "required": ["version", "dimension"],
    "additionalProperties": False,
}


class ProblemError(ValueError):
    """Malformed problem file; the message names the offending location."""


@dataclass
class Problem:
    dimension: int
    family: tuple[SubspaceQ, ...] = ()
    hamiltonian: Hamiltonian | None = None
    elements: dict[str, AlgebraElement] = field(default_factory=dict)
    tasks: list[dict] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = SCHEMA_VERSION

    def generators(self) -> list[SubspaceQ]:
        """Explicit family plus the subspaces used by terms and elements."""
        seen = dict.fromkeys(self.family)
        if self.hamiltonian is not None:
            seen.update(dict.fromkeys(self.hamiltonian.subspace_family()))
        for E in self.elements.values():
            seen.update(dict.fromkeys(sorted(E.subspaces(), key=SubspaceQ.sort_key)))
        return list(seen)


def _where(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def _subspace(rows, d: int, path) -> SubspaceQ:
    try:
        return canonicalize([[Fraction(x) for x in r] for r in rows], d)
    except (ValueError, ZeroDivisionError) as exc:
        raise ProblemError(f"{_where(path)}: {exc}") from exc


def _function(spec: dict, dim: int, path) -> AsymptoticFunction:
    try:
        return function_from_dict(spec, dim)
    except (KeyError, ValueError, TypeError) as exc:
        raise ProblemError(f"{_where(path)}: bad function spec ({exc!r})") from exc


def _factor(spec: dict, d: int, path) -> PotentialTerm:
    Y = _subspace(spec["subspace"], d, path + ["subspace"])
    v = _function(spec["potential"], Y.codim, path + ["potential"])
    return PotentialTerm(Y, v)


def _esfunction(spec: dict, d: int, path):
    if "plain" in spec:
        k = float(spec.get("frequency", 1.0))
        fn = np.sin if spec["plain"] == "sin" else np.cos
        return PlainFunction(lambda x: fn(k * x.sum(axis=-1)), d, spec["plain"])
    if "constant" in spec:
        return ESFunction.constant(float(spec["constant"]), d)
    if "monomials" in spec:
        monos = []
        for i, m in enumerate(spec["monomials"]):
            facs = tuple(_factor(f, d, path + ["monomials", i, "factors", j]) for j, f in enumerate(m["factors"]))
            monos.append(Monomial(float(m["coeff"]), facs))
        return ESFunction(d, tuple(monos))
    t = _factor(spec, d, path)
    return ESFunction(d, (Monomial(float(spec.get("coeff", 1.0)), (t,)),))


def _multiplier(spec: dict, d: int, path) -> AsymptoticFunction:
    if spec["family"] == "bump_transform":
        p = spec["params"]
        if len(p["center"]) != d:
            raise ProblemError(f"{_where(path)}: bump centre has the wrong dimension")
        return BumpTransform(Bump(tuple(p["center"]), float(p["radius"])))
    return _function(spec, d, path)


def parse_problem(data: dict) -> Problem:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        raise ProblemError(f"{_where(best.absolute_path)}: {best.message}")
    d = data["dimension"]
    family = tuple(_subspace(m, d, ["subspaces", i]) for i, m in enumerate(data.get("subspaces", [])))
    terms = tuple(_factor(t, d, ["terms", i]) for i, t in enumerate(data.get("terms", [])))
    H = Hamiltonian(d, terms) if "terms" in data else None
    elements = {}
    for i, e in enumerate(data.get("elements", [])):
        path = ["elements", i]
        if e["name"] in elements:
            raise ProblemError(f"{_where(path + ['name'])}: duplicate element name {e['name']!r}")
        pairs = tuple(
            (_esfunction(t["f"], d, path + ["terms", j, "f"]), _multiplier(t["a"], d, path + ["terms", j, "a"]))
            for j, t in enumerate(e.get("terms", []))
        )
        elements[e["name"]] = AlgebraElement(d, float(e.get("lambda", 0.0)), pairs)
    for i, t in enumerate(data.get("tasks", [])):
        if t["task"] == "fredholm" and t["element"] not in elements:
            raise ProblemError(f"{_where(['tasks', i, 'element'])}: unknown element {t['element']!r}")
        if t["task"] == "tau" and len(t["direction"]) != d:
            raise ProblemError(f"{_where(['tasks', i, 'direction'])}: direction must have {d} entries")
        if t["task"] == "tau" and not any(t["direction"]):
            raise ProblemError(f"{_where(['tasks', i, 'direction'])}: direction must be nonzero")
    return Problem(d, family, H, elements, list(data.get("tasks", [])), dict(data.get("config", {})), data["version"])


def load_problem(path) -> Problem:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return parse_problem(data)
    except ProblemError as exc:
        raise ProblemError(f"{path}: {exc}") from exc


def _rational_out(x: Fraction):
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _subspace_out(Y: SubspaceQ) -> list:
    return [[_rational_out(x) for x in row] for row in Y.basis]


def _factor_out(t: PotentialTerm) -> dict:
    return {"subspace": _subspace_out(t.subspace), "potential": t.function.to_dict()}


def _esfunction_out(f) -> dict:
    if isinstance(f, PlainFunction):
        raise ProblemError("plain functions are not serialisable")
    return {
        "monomials": [{"coeff": m.coeff, "factors": [_factor_out(t) for t in m.factors]} for m in f.monomials]
    }


def dump_problem(P: Problem) -> dict:
    """Canonical JSON-compatible form; ``parse_problem`` inverts it exactly."""
    out: dict = {"version": P.version, "dimension": P.dimension}
    if P.family:
        out["subspaces"] = [_subspace_out(Y) for Y in P.family]
    if P.hamiltonian is not None:
        out["terms"] = [_factor_out(t) for t in P.hamiltonian.terms]
    if P.elements:
        out["elements"] = [
            {"name": name, "lambda": E.scalar, "terms": [{"f": _esfunction_out(f), "a": a.to_dict()} for f, a in E.terms]}
            for name, E in P.elements.items()
        ]
    if P.tasks:
        out["tasks"] = P.tasks
    if P.config:
        out["config"] = P.config
    return out
