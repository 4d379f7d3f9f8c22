"""Task execution for problem files.

Every task returns a :class:`TaskResult` holding a status, a JSON-compatible
payload and zero or more flat tables.  Nothing here reads the clock, so
identical inputs give identical tables.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

from .algebra import AlgebraConfig, Bump, commutator_profile, fredholm_check, EVIDENCE_FREDHOLM, INCONCLUSIVE
from .lattice import (
    DirectionQ,
    SubspaceQ,
    check_projection_and_difference,
    check_symmetric_action,
    enumerate_strata,
    generate_semilattice,
    msc_generators,
)
from .model import reduce, tau_limit
from .numerics import (
    ConvergenceError,
    Grid,
    GridCapExceeded,
    ThresholdConfig,
    classify_eigenvalue_stability,
    discretize_hamiltonian,
    lowest_eigenvalues,
    threshold_estimate,
)
from .problem import Problem, ProblemError, _esfunction

__all__ = ["PASS", "FAIL", "INCONCLUSIVE_STATUS", "ERROR", "TaskResult", "run_task", "format_cell", "table_to_csv", "parse_cell"]

PASS, FAIL, INCONCLUSIVE_STATUS, ERROR = "pass", "fail", "inconclusive", "error"


@dataclass
class TaskResult:
    task: dict
    status: str
    payload: dict
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, SubspaceQ):
        return format_subspace(v)
    return str(v)


def parse_cell(s: str):
    """Inverse of :func:`format_cell` for the cell types tables contain."""
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def format_subspace(Y: SubspaceQ) -> str:
    """Rows of the canonical basis, ``;``-separated; empty for ``{0}``."""
    return ";".join(" ".join(str(x) for x in row) for row in Y.basis)


def table_to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_cell(v) for v in r])
    return buf.getvalue()


def _threshold_cfg(P: Problem) -> ThresholdConfig:
    c = P.config.get("threshold", {})
    kw = {}
    if "half_widths" in c:
        kw["half_widths"] = tuple(float(x) for x in c["half_widths"])
    if "spacings" in c:
        kw["spacings"] = tuple(float(x) for x in c["spacings"])
    if "direction_budget" in c:
        kw["direction_budget"] = int(c["direction_budget"])
    return ThresholdConfig(**kw)


def _algebra_cfg(P: Problem) -> AlgebraConfig:
    c = dict(P.config.get("algebra", {}))
    if "sizes" in c:
        c["sizes"] = tuple(c["sizes"])
    return AlgebraConfig(**c)


def _semilattice(P: Problem):
    return generate_semilattice(P.generators(), P.dimension, P.config.get("max_closure", 100_000))


def _need_hamiltonian(P: Problem):
    if P.hamiltonian is None:
        raise ProblemError("this task needs potential terms")
    return P.hamiltonian


def _hvz(P: Problem, task: dict) -> TaskResult:
    H = _need_hamiltonian(P)
    tol = float(task.get("tol", 0.05))
    rep = threshold_estimate(H, _semilattice(P), _threshold_cfg(P))
    keys = sorted({k for r in rep.records for k in r.lambda_min})
    header = ["stratum", "base", "direction", "shift", "reduced_dim"]
    header += [f"lambda_L{L:g}_h{h:g}" for L, h in keys] + ["extrapolated_lambda", "onset", "error"]
    rows = [
        [r.stratum_index, r.base, str(r.direction), r.shift, r.reduced_dim]
        + [r.lambda_min.get(k) for k in keys]
        + [r.extrapolated_lambda, r.onset, r.error]
        for r in rep.records
    ]
    payload = {
        "sigma_ess": rep.sigma_ess,
        "attaining_strata": rep.attaining,
        "onsets_by_stratum": {str(k): v for k, v in rep.onsets_by_stratum().items()},
        "caveat": rep.caveat,
    }
    tables = {"thresholds": (header, rows)}
    status = PASS
    if any(r.failed for r in rep.records) or math.isnan(rep.sigma_ess):
        status = INCONCLUSIVE_STATUS
    onset = None
    if task.get("stability", H.ambient_dim <= 2):
        c = P.config.get("stability", {})
        kw = {k: c[k] for k in ("spacing", "n_eigs", "tol") if k in c}
        if "half_widths" in c:
            kw["half_widths"] = tuple(c["half_widths"])
        try:
            st = classify_eigenvalue_stability(H, **kw)
        except ConvergenceError as exc:
            payload["stability_error"] = str(exc)
            status = INCONCLUSIVE_STATUS
        else:
            onset = st.onset
            L1, L2 = st.half_widths
            payload["stability"] = {
                "half_widths": [L1, L2],
                "spacing": st.spacing,
                "stable": st.stable,
                "unstable_lowest": [st.unstable_lowest[L1], st.unstable_lowest[L2]],
                "onset": st.onset,
            }
            e1, e2 = st.eigenvalues[L1], st.eigenvalues[L2]
            n = max(len(e1), len(e2))
            tables["eigenvalues"] = (
                ["index", f"L{L1:g}", f"L{L2:g}"],
                [[i, float(e1[i]) if i < len(e1) else None, float(e2[i]) if i < len(e2) else None] for i in range(n)],
            )
    if status == PASS:
        if "expect" in task:
            target = float(task["expect"])
            ok = abs(rep.sigma_ess - target) <= tol and (onset is None or abs(onset - target) <= tol)
        else:
            ok = onset is None or abs(rep.sigma_ess - onset) <= tol
        status = PASS if ok else FAIL
    return TaskResult(task, status, payload, tables)


def _spectrum(P: Problem, task: dict) -> TaskResult:
    H = _need_hamiltonian(P)
    h = float(task.get("spacing", 0.02))
    L = float(task.get("half_width", 12.0))
    k = int(task.get("k", 5))
    g = Grid.from_spacing(H.ambient_dim, L, h)
    res = lowest_eigenvalues(discretize_hamiltonian(H, g), k)
    rows = [[i, float(v), float(r)] for i, (v, r) in enumerate(zip(res.eigenvalues, res.residual_norms))]
    payload = {"grid": g.describe(), "method": res.method, "eigenvalues": [float(v) for v in res.eigenvalues]}
    status = PASS
    if "expect" in task:
        ok = abs(float(res.eigenvalues[0]) - float(task["expect"])) <= float(task.get("tol", 1e-3))
        status = PASS if ok else FAIL
    return TaskResult(task, status, payload, {"eigenvalues": (["index", "eigenvalue", "residual"], rows)})


def _lattice_check(P: Problem, task: dict) -> TaskResult:
    if "n" in task and "d" in task:
        n, d = int(task["n"]), int(task["d"])
        S = generate_semilattice(msc_generators(n, d), n * d)
        checks = {"symmetric_action": check_symmetric_action(S, n, d)}
        for k in range(1, n):
            Sk = generate_semilattice(msc_generators(k, d), k * d)
            for I in itertools.combinations(range(1, n + 1), k):
                checks[f"projection_{'_'.join(map(str, I))}"] = check_projection_and_difference(S, Sk, I, n, k, d)
        payload = {"n": n, "d": d, "size": len(S), "checks": {k: {"ok": c.ok, "detail": c.detail} for k, c in checks.items()}}
        ok = all(checks.values())
    else:
        S = _semilattice(P)
        payload = {"size": len(S), "checks": {}}
        ok = True
    rows = [[i, Y.dim, Y] for i, Y in enumerate(S)]
    return TaskResult(task, PASS if ok else FAIL, payload, {"elements": (["index", "dim", "basis"], rows)})


def _strata(P: Problem, task: dict) -> TaskResult:
    strata = enumerate_strata(_semilattice(P))
    rows = [[i, st.base, st.base.dim, st.generic, str(st.representative), len(st.filter)] for i, st in enumerate(strata)]
    status = PASS
    if "expect_count" in task and len(strata) != task["expect_count"]:
        status = FAIL
    payload = {"count": len(strata)}
    return TaskResult(task, status, payload, {"strata": (["index", "base", "dim", "generic", "representative", "filter_size"], rows)})


def _tau(P: Problem, task: dict) -> TaskResult:
    H = _need_hamiltonian(P)
    if len(task["direction"]) != P.dimension or not any(task["direction"]):
        raise ProblemError(f"direction must be a nonzero vector with {P.dimension} entries")
    alpha = DirectionQ.of(task["direction"])
    L = tau_limit(H, alpha)
    H_red, shift = reduce(L)
    payload = {
        "direction": str(alpha),
        "retained": [format_subspace(t.subspace) for t in L.retained],
        "shift": L.shift,
        "invariant_subspace": format_subspace(L.invariant_subspace),
        "reduced_dim": H_red.ambient_dim,
        "total_shift": shift,
    }
    rows = [[i, t.subspace, t.function.family] for i, t in enumerate(L.retained)]
    return TaskResult(task, PASS, payload, {"retained": (["index", "subspace", "family"], rows)})


def _fredholm(P: Problem, task: dict) -> TaskResult:
    E = P.elements[task["element"]]
    cfg = _algebra_cfg(P)
    rep = fredholm_check(E, None, cfg)
    sizes = cfg.grid_sizes(E.ambient_dim)
    header = ["stratum", "direction", "status"] + [f"sigma_min_n{n}" for n in sizes] + ["error"]
    rows = []
    for ev in rep.directions:
        vals = list(ev.min_singular_values) + [None] * (len(sizes) - len(ev.min_singular_values))
        rows.append([ev.stratum_index, str(ev.direction), ev.status, *vals, ev.error])
    payload = {
        "element": task["element"],
        "verdict": rep.verdict,
        "ellipticity_min": rep.ellipticity_min,
        "ellipticity_witness": rep.ellipticity_witness,
        "witness": rep.witness,
        "floors": {"ellipticity": cfg.ellipticity_floor, "invertibility": cfg.invertibility_floor},
        "note": rep.note,
    }
    if rep.verdict == INCONCLUSIVE:
        status = INCONCLUSIVE_STATUS
    elif "expect" in task:
        got = "fredholm" if rep.verdict == EVIDENCE_FREDHOLM else "not-fredholm"
        status = PASS if got == task["expect"] else FAIL
    else:
        status = PASS
    return TaskResult(task, status, payload, {"directions": (header, rows)})


def _commutator(P: Problem, task: dict) -> TaskResult:
    d = P.dimension
    f = _esfunction(task["f"], d, ["f"])
    b = task["bump"]
    if len(b["center"]) != d:
        raise ProblemError("bump centre has the wrong dimension")
    phi = Bump(tuple(float(c) for c in b["center"]), float(b["radius"]))
    L = float(task.get("half_width", 32.0))
    sizes = task.get("sizes", [256, 512, 1024] if d == 1 else [32, 48])
    radii = [float(r) for r in task.get("radii", [0, 1, 2, 4, 8, 16])]
    rows, ratios = [], {}
    for n in sizes:
        norms = commutator_profile(f, phi, Grid(d, L, int(n)), radii)
        base = norms[0]
        ratios[n] = [x / base if base > 0 else math.nan for x in norms]
        rows += [[int(n), R, x, q] for R, x, q in zip(radii, norms, ratios[n])]
    status = PASS
    expect = task.get("expect")
    if expect == "decay":
        status = PASS if all(min(q[1:], default=1.0) < 0.1 for q in ratios.values()) else FAIL
    elif expect == "plateau":
        status = PASS if all(min(q) > 0.5 for q in ratios.values()) else FAIL
    payload = {"ratios": {str(n): q for n, q in ratios.items()}, "half_width": L}
    return TaskResult(task, status, payload, {"profile": (["n", "radius", "norm", "ratio"], rows)})


_RUNNERS = {
    "hvz": _hvz,
    "spectrum": _spectrum,
    "lattice-check": _lattice_check,
    "strata": _strata,
    "tau": _tau,
    "fredholm": _fredholm,
    "commutator-probe": _commutator,
}


def run_task(P: Problem, task: dict) -> TaskResult:
    """Run one task; numerical breakdowns become ``inconclusive``."""
    try:
        return _RUNNERS[task["task"]](P, task)
    except (ConvergenceError, GridCapExceeded) as exc:
        return TaskResult(task, INCONCLUSIVE_STATUS, {"error": f"{type(exc).__name__}: {exc}"})
