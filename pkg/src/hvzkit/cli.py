"""Command-line front end.

Exit codes: 0 all tasks pass, 1 a task failed, 2 unreadable or invalid
problem file, 3 inconclusive numerics, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .problem import Problem, ProblemError, load_problem
from .tasks import ERROR, FAIL, INCONCLUSIVE_STATUS, TaskResult, parse_cell, run_task, table_to_csv

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_INCONCLUSIVE, EXIT_INTERNAL = 0, 1, 2, 3, 4
OUT_ENV = "HVZKIT_OUT"


def exit_code(statuses) -> int:
    statuses = list(statuses)
    if ERROR in statuses:
        return EXIT_INTERNAL
    if FAIL in statuses:
        return EXIT_FAIL
    if INCONCLUSIVE_STATUS in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _safe_run(P: Problem, task: dict) -> TaskResult:
    try:
        return run_task(P, task)
    except ProblemError:
        raise
    except Exception as exc:  # reported, not raised: other tasks still run
        return TaskResult(task, ERROR, {"error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc()})


def run_tasks(P: Problem, tasks: list[dict], jobs: int = 1) -> list[TaskResult]:
    """Run tasks with at most ``jobs`` in flight; results keep declared order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [_safe_run(P, t) for t in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: _safe_run(P, t), tasks))


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _emit(results: list[TaskResult], fmt: str, stream) -> None:
    if fmt == "json":
        stream.write(_json([{"task": r.task, "status": r.status, "result": r.payload} for r in results]))
        return
    for r in results:
        for name, (header, rows) in r.tables.items():
            stream.write(f"# {r.task['task']} {name} status={r.status}\n")
            stream.write(table_to_csv(header, rows))
        if not r.tables:
            stream.write(f"# {r.task['task']} status={r.status} {r.payload.get('error', '')}\n")


def write_outputs(results: list[TaskResult], out: Path, meta: dict) -> dict:
    """Write per-task CSV and JSON files plus ``run_report.json``."""
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, r in enumerate(results):
        stem = f"{i:02d}_{r.task['task']}"
        artifacts = []
        for name, (header, rows) in r.tables.items():
            path = out / f"{stem}_{name}.csv"
            path.write_text(table_to_csv(header, rows))
            artifacts.append(path.name)
        path = out / f"{stem}.json"
        path.write_text(_json({"task": r.task, "status": r.status, "result": r.payload}))
        artifacts.append(path.name)
        entries.append({"index": i, "task": r.task["task"], "status": r.status, "artifacts": artifacts})
    report = {**meta, "tasks": entries, "exit_code": exit_code(r.status for r in results)}
    (out / "run_report.json").write_text(_json(report))
    return report


def read_csv_table(path) -> tuple[list[str], list[list]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[parse_cell(c) if c != "" else None for c in r] for r in rows[1:]]


def _cmd_run(args) -> int:
    P = load_problem(args.problem)
    tasks = [dict(t) for t in P.tasks]
    if args.n is not None or args.d is not None:
        if args.n is None or args.d is None:
            raise ProblemError("--n and --d go together")
        tasks = [({**t, "n": args.n, "d": args.d} if t["task"] == "lattice-check" else t) for t in tasks]
        if not any(t["task"] == "lattice-check" for t in tasks):
            tasks.append({"task": "lattice-check", "n": args.n, "d": args.d})
    out = Path(args.out or os.environ.get(OUT_ENV) or "hvzkit-out")
    start = time.perf_counter()
    results = run_tasks(P, tasks, args.jobs)
    meta = {
        "tool": "hvzkit",
        "version": __version__,
        "problem": str(args.problem),
        "seed": args.seed,
        "jobs": args.jobs,
        "config": P.config,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    report = write_outputs(results, out, meta)
    for e in report["tasks"]:
        print(f"{e['index']:02d} {e['task']:<17} {e['status']}")
    print(f"outputs in {out}")
    return report["exit_code"]


def _single(args, task: dict) -> int:
    P = load_problem(args.problem)
    results = run_tasks(P, [task])
    _emit(results, args.format, sys.stdout)
    return exit_code(r.status for r in results)


def _cmd_lattice(args) -> int:
    if args.action == "check-msc":
        results = run_tasks(Problem(args.n * args.d), [{"task": "lattice-check", "n": args.n, "d": args.d}])
        _emit(results, args.format, sys.stdout)
        return exit_code(r.status for r in results)
    if args.problem is None:
        raise ProblemError("lattice gen needs a problem file")
    return _single(args, {"task": "lattice-check"})


def _cmd_fredholm(args) -> int:
    P = load_problem(args.problem)
    names = [args.element] if args.element else list(P.elements)
    if not names:
        raise ProblemError("the problem declares no algebra elements")
    tasks = []
    for name in names:
        if name not in P.elements:
            raise ProblemError(f"unknown element {name!r}")
        declared = [t for t in P.tasks if t["task"] == "fredholm" and t["element"] == name]
        tasks.append(declared[0] if declared else {"task": "fredholm", "element": name})
    results = run_tasks(P, tasks, args.jobs)
    _emit(results, args.format, sys.stdout)
    return exit_code(r.status for r in results)


def _declared(args, kind: str, default: dict | None) -> int:
    P = load_problem(args.problem)
    tasks = [t for t in P.tasks if t["task"] == kind] or ([default] if default else [])
    if not tasks:
        raise ProblemError(f"the problem declares no {kind} task")
    results = run_tasks(P, tasks, args.jobs)
    _emit(results, args.format, sys.stdout)
    return exit_code(r.status for r in results)


def _cmd_report(args) -> int:
    out = Path(args.outdir)
    report = json.loads((out / "run_report.json").read_text())
    lossless = True
    lines = []
    for e in report["tasks"]:
        for name in e["artifacts"]:
            path = out / name
            if name.endswith(".csv"):
                header, rows = read_csv_table(path)
                same = table_to_csv(header, rows) == path.read_text()
                lossless &= same
                lines.append([e["index"], e["task"], e["status"], name, len(rows), same])
            else:
                same = _json(json.loads(path.read_text())) == path.read_text()
                lossless &= same
                lines.append([e["index"], e["task"], e["status"], name, None, same])
    if args.format == "json":
        sys.stdout.write(_json({"report": report, "lossless": lossless}))
    else:
        sys.stdout.write(table_to_csv(["index", "task", "status", "artifact", "rows", "lossless"], lines))
    return report["exit_code"] if lossless else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="stdout format")
    common.add_argument("--seed", type=int, default=0, help="sampling seed (sampling is low-discrepancy, so this is recorded only)")
    common.add_argument("--jobs", type=int, default=1, help="maximum tasks run concurrently")

    ap = argparse.ArgumentParser(prog="hvzkit", description="Essential spectra and Fredholm checks for many-body type operators.")
    ap.add_argument("--version", action="version", version=f"hvzkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run every task in a problem file")
    p.add_argument("problem")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./hvzkit-out)")
    p.add_argument("--n", type=int, help="particle count for the lattice check")
    p.add_argument("--d", type=int, help="space dimension per particle for the lattice check")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("lattice", parents=[common], help="semilattice generation and checks")
    p.add_argument("action", choices=["gen", "check-msc"])
    p.add_argument("problem", nargs="?")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=1)
    p.set_defaults(func=_cmd_lattice)

    p = sub.add_parser("strata", parents=[common], help="list the strata of the direction sphere")
    p.add_argument("problem")
    p.set_defaults(func=lambda a: _single(a, {"task": "strata"}))

    p = sub.add_parser("tau", parents=[common], help="limit operator along a direction")
    p.add_argument("problem")
    p.add_argument("--direction", required=True, help="comma-separated integers, e.g. 1,0")
    p.set_defaults(func=lambda a: _single(a, {"task": "tau", "direction": _ints(a.direction)}))

    p = sub.add_parser("spectrum", parents=[common], help="lowest eigenvalues on a Dirichlet box")
    p.add_argument("problem")
    p.add_argument("--spacing", type=float, default=0.02)
    p.add_argument("--half-width", type=float, default=12.0)
    p.add_argument("-k", type=int, default=5)
    p.set_defaults(
        func=lambda a: _single(a, {"task": "spectrum", "spacing": a.spacing, "half_width": a.half_width, "k": a.k})
    )

    p = sub.add_parser("hvz-verify", parents=[common], help="threshold estimate against the box spectrum")
    p.add_argument("problem")
    p.set_defaults(func=lambda a: _declared(a, "hvz", {"task": "hvz"}))

    p = sub.add_parser("fredholm-check", parents=[common], help="Fredholm evidence for algebra elements")
    p.add_argument("problem")
    p.add_argument("--element")
    p.set_defaults(func=_cmd_fredholm)

    p = sub.add_parser("commutator-probe", parents=[common], help="restricted commutator norms")
    p.add_argument("problem")
    p.set_defaults(func=lambda a: _declared(a, "commutator-probe", None))

    p = sub.add_parser("report", parents=[common], help="re-read and summarise a run directory")
    p.add_argument("outdir")
    p.set_defaults(func=_cmd_report)
    return ap


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise ProblemError(f"--direction: expected comma-separated integers, got {text!r}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
