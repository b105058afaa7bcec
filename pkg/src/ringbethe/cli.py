"""Command-line front end.

Commands
--------
curves    spectral curves and their intersections in a momentum window
roots     intersections only
phase     geometric phase of one state along the alpha cycle
sweep     geometric phase on an (eta, c) grid
validate  fast self-test

Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 solver or
enumeration failure, 4 ill-defined phase.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EnumerationError,
    IllDefinedPhaseError,
    InvalidParameterError,
    RingBetheError,
)
from .geomphase import ContourSpec, PhaseResult, phase_converged, sweep
from .spectrum import SystemConfig, curve_samples, energy, enumerate_states, sorted_free_roots
from .validation import run_checks

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_SOLVER = 3
EXIT_ILL_DEFINED = 4

CURVES_HEADER = ("family", "branch_id", "k1", "k2")
ROOTS_HEADER = ("i", "j", "k1", "k2", "energy", "residual")
PHASE_HEADER = ("state", "eta", "c", "L", "steps_used", "theta_g", "global_term",
                "connection_term", "endpoint_overlap_mag", "converged")
SWEEP_HEADER = ("eta", "c", "theta_g", "converged", "status")

DEFAULT_ETAS = (0.5, 1.0, 2.0, 3.0)
DEFAULT_C_GRID = tuple(np.linspace(0.0, 30.0, 61))
SWEEP_SUCCESS_FRACTION = 0.9

DEFAULTS = {
    "eta": 2.0,
    "alpha": 0.0,
    "c": 0.1,
    "L": 5.0,
    "k_max": 6.0,
    "step": 0.01,
    "state": (1, 3),
    "steps": 256,
    "out": None,
    "format": None,
    "workers": None,
    "etas": DEFAULT_ETAS,
    "c_grid": DEFAULT_C_GRID,
}


class UsageError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _parse_state(text: str) -> tuple[int, int]:
    try:
        i, j = (int(part) for part in str(text).split(","))
    except ValueError as exc:
        raise UsageError(f"state must look like i,j, got {text!r}") from exc
    if i < 1 or j < 1:
        raise UsageError(f"state indices are 1-based, got {text!r}")
    return i, j


def _parse_floats(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    if ":" in text:
        lo, hi, n = text.split(":")
        return tuple(np.linspace(float(lo), float(hi), int(n)))
    return tuple(float(x) for x in text.split(",") if x.strip())


_CONVERTERS = {
    "eta": float, "alpha": float, "c": float, "L": float, "k_max": float, "step": float,
    "state": _parse_state, "steps": int, "out": str, "format": str, "workers": int,
    "etas": _parse_floats, "c_grid": _parse_floats,
}


def read_config_file(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment, dashes in keys are allowed."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


@dataclass
class RunConfig:
    command: str
    eta: float
    alpha: float
    c: float
    L: float
    k_max: float
    step: float
    state: tuple[int, int]
    steps: int
    out: Optional[str]
    format: str
    workers: Optional[int]
    etas: tuple[float, ...] = field(default=DEFAULT_ETAS)
    c_grid: tuple[float, ...] = field(default=DEFAULT_C_GRID)
    inject_failure: bool = False

    def system(self) -> SystemConfig:
        return SystemConfig.from_values(self.eta, self.alpha, self.c, self.L)

    def validate(self) -> None:
        """Reject invalid physics before any computation starts."""
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.command == "curves" and self.format != "csv":
            raise UsageError("curves writes CSV files only")
        if self.command in ("curves", "roots"):
            self.system()
            if not self.k_max > 0:
                raise UsageError("--k-max must be positive")
            if not self.step > 0:
                raise UsageError("--step must be positive")
        elif self.command == "phase":
            ContourSpec(self.state, self.eta, self.c, self.L, self.steps)
        elif self.command == "sweep":
            if not self.etas or not self.c_grid:
                raise UsageError("sweep grids must be non-empty")
            for eta in self.etas:
                for c in (self.c_grid[0], self.c_grid[-1]):
                    ContourSpec(self.state, eta, c, self.L, self.steps)
            if any(b < a for a, b in zip(self.c_grid, self.c_grid[1:])):
                raise UsageError("c grid must be ascending")
        if self.workers is not None and self.workers < 1:
            raise UsageError("--workers must be >= 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringbethe",
        description="Spectrum and defect-cycling geometric phase of two contact-"
                    "interacting bosons on a ring with a transfer-matrix defect.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags take precedence")
    common.add_argument("--eta", type=float, help="barrier strength (>= 0)")
    common.add_argument("--alpha", type=float, help="defect phase")
    common.add_argument("--c", type=float, help="contact interaction strength (>= 0)")
    common.add_argument("--L", type=float, help="ring length (> 0)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--inject-failure", action="store_true", help=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("curves", "spectral curves and roots in a window"),
                            ("roots", "roots in a window")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--k-max", type=float, dest="k_max", help="upper edge of the momentum window")
        p.add_argument("--step", type=float, help="curve sampling step")
    p = sub.add_parser("phase", parents=[common], help="geometric phase of one state")
    p.add_argument("--state", type=str, help="state index pair i,j")
    p.add_argument("--steps", type=int, help="alpha steps at the coarse level")
    p = sub.add_parser("sweep", parents=[common], help="geometric phase on an (eta, c) grid")
    p.add_argument("--state", type=str)
    p.add_argument("--steps", type=int)
    p.add_argument("--etas", help="comma list, or lo:hi:n")
    p.add_argument("--c-grid", dest="c_grid", help="comma list, or lo:hi:n")
    p.add_argument("--workers", type=int, help="worker processes (env RINGBETHE_THREADS)")
    sub.add_parser("validate", parents=[common], help="fast self-test")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(DEFAULTS)
    if args.config:
        values.update(read_config_file(args.config))
    for key in _CONVERTERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _CONVERTERS[key](flag)
    if values["format"] is None:
        values["format"] = "json" if args.command == "phase" else "csv"
    cfg = RunConfig(command=args.command, inject_failure=args.inject_failure, **values)
    cfg.validate()
    return cfg


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(x) for x in row])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit(path: Optional[str], text: str) -> None:
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)


def _roots_in_window(cfg: SystemConfig, k_max: float):
    # index range: every free root below k_max plus a margin for the interaction shift
    n = sum(1 for k in sorted_free_roots(cfg, 4 + int(k_max * cfg.L / math.pi) * 2) if k <= k_max)
    if n == 0:
        return []
    states = enumerate_states(cfg, n + 1)
    return [(key, p) for key, p in states.items() if 0 < p.k1 <= k_max and 0 < p.k2 <= k_max]


def _curve_rows(cfg: SystemConfig, k_max: float, step: float):
    rows = []
    for family in ("vertical", "horizontal"):
        for branch, line in enumerate(curve_samples(cfg, family, (0.0, k_max), step)):
            rows.extend((family, branch, float(k1), float(k2)) for k1, k2 in line)
    return rows


def _root_rows(cfg: SystemConfig, k_max: float):
    return [(i, j, p.k1, p.k2, energy(p), p.residual) for (i, j), p in _roots_in_window(cfg, k_max)]


def cmd_curves(run: RunConfig) -> int:
    """Write ``curves.csv`` and ``roots.csv`` into the ``--out`` directory."""
    cfg = run.system()
    roots = _csv_text(ROOTS_HEADER, _root_rows(cfg, run.k_max))
    curves = _csv_text(CURVES_HEADER, _curve_rows(cfg, run.k_max, run.step))
    out_dir = run.out or "."
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "curves.csv"), curves)
    _write(os.path.join(out_dir, "roots.csv"), roots)
    return EXIT_OK


def cmd_roots(run: RunConfig) -> int:
    rows = _root_rows(run.system(), run.k_max)
    if run.format == "json":
        text = json.dumps([dict(zip(ROOTS_HEADER, r)) for r in rows], indent=2) + "\n"
    else:
        text = _csv_text(ROOTS_HEADER, rows)
    _emit(run.out, text)
    return EXIT_OK


def _phase_record(run: RunConfig, res: PhaseResult) -> dict:
    return {
        "state": f"{run.state[0]},{run.state[1]}",
        "eta": run.eta, "c": run.c, "L": run.L,
        "steps_used": res.steps_used,
        "theta_g": res.theta_g,
        "global_term": res.global_term,
        "connection_term": res.connection_term,
        "endpoint_overlap_mag": res.endpoint_overlap_mag,
        "converged": res.converged,
    }


def cmd_phase(run: RunConfig) -> int:
    spec = ContourSpec(run.state, run.eta, run.c, run.L, run.steps)
    status, code = "ok", EXIT_OK
    try:
        res = phase_converged(spec)
    except IllDefinedPhaseError as exc:
        nan = float("nan")
        res = exc.partial or PhaseResult(nan, nan, nan, exc.magnitude, 2 * run.steps, False)
        status, code = "ill_defined_phase", EXIT_ILL_DEFINED
        print(f"error: {exc}", file=sys.stderr)
    record = _phase_record(run, res)
    record["status"] = status
    if run.format == "json":
        text = json.dumps({k: (None if isinstance(v, float) and math.isnan(v) else v)
                           for k, v in record.items()}, indent=2) + "\n"
    else:
        header = PHASE_HEADER + (("status",) if status != "ok" else ())
        text = _csv_text(header, [[record[k] for k in header]])
    _emit(run.out, text)
    return code


def cmd_sweep(run: RunConfig) -> int:
    rows = sweep(run.state, run.etas, run.c_grid, run.L, run.steps, workers=run.workers)
    text = _csv_text(SWEEP_HEADER, [(r.eta, r.c, r.theta_g, r.converged, r.status) for r in rows])
    _emit(run.out, text)
    ok = sum(r.status == "ok" for r in rows)
    if ok < SWEEP_SUCCESS_FRACTION * len(rows):
        print(f"error: only {ok} of {len(rows)} sweep cells succeeded", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_validate(run: RunConfig) -> int:
    results = run_checks(inject_failure=run.inject_failure)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  measured={r.measured:.3e}  tol={r.tolerance:.1e}"
              f"  ({r.seconds:.2f} s)")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = {
    "curves": cmd_curves,
    "roots": cmd_roots,
    "phase": cmd_phase,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = resolve_config(args)
    except (UsageError, InvalidParameterError) as exc:
        # same status argparse uses for malformed flags
        parser.exit(2, f"ringbethe: error: {exc}\n")
    except OSError as exc:
        print(f"ringbethe: error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return COMMANDS[run.command](run)
    except OSError as exc:
        print(f"ringbethe: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EnumerationError as exc:
        where = f" for state {exc.index[0]},{exc.index[1]}" if exc.index else ""
        print(f"ringbethe: enumeration failed{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RingBetheError as exc:
        print(f"ringbethe: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
