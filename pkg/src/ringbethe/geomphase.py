"""Geometric phase acquired when the defect phase ``alpha`` is cycled.

Along the contour ``eta = const``, ``alpha: 0 -> alpha_span`` the state is
sampled on a uniform grid and the phase is accumulated as

    theta_g = arg<Psi_0|Psi_N> - sum_j arg<Psi_j|Psi_{j+1}>,

the discrete (Pancharatnam) form of the endpoint-overlap plus connection
integral.  Every overlap enters once as a bra and once as a ket, so the result
does not depend on the phase chosen for any individual sample.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    IllDefinedPhaseError,
    InvalidParameterError,
    PathError,
    PathTooCoarseError,
    RingBetheError,
)
from .spectrum import SystemConfig, continue_state, track_alpha
from .wavefun import Wavefunction, build_state, inner_product

__all__ = [
    "ContourSpec",
    "PhaseResult",
    "SweepRow",
    "state_path",
    "geometric_phase",
    "phase_converged",
    "global_phase_limit",
    "sweep",
    "wrap_angle",
    "circle_distance",
]

TWO_PI = 2.0 * math.pi
OVERLAP_FLOOR = 1e-6
CONVERGENCE_TOL = 1e-4
MAX_DOUBLINGS = 4
THREADS_ENV = "RINGBETHE_THREADS"


def wrap_angle(x):
    """Reduce an angle to ``(-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, TWO_PI) - math.pi
    y = np.where(y <= -math.pi, y + TWO_PI, y)
    return float(y) if np.ndim(y) == 0 else y


def circle_distance(a: float, b: float) -> float:
    return abs(wrap_angle(a - b))


def _principal(x: float) -> float:
    y = math.fmod(x, TWO_PI)
    if y < 0:
        y += TWO_PI
    return 0.0 if y >= TWO_PI else y


@dataclass(frozen=True)
class ContourSpec:
    state: tuple[int, int]
    eta: float
    c: float
    L: float
    steps: int = 256
    alpha_span: float = TWO_PI

    def __post_init__(self):
        if self.steps < 8:
            raise InvalidParameterError(f"steps must be >= 8, got {self.steps}")
        if not self.alpha_span > 0:
            raise InvalidParameterError("alpha_span must be positive")
        if len(self.state) != 2 or min(self.state) < 1:
            raise InvalidParameterError(f"bad state index {self.state}")
        # validates eta, c, L
        self.config()

    def config(self, alpha: float = 0.0) -> SystemConfig:
        return SystemConfig.from_values(self.eta, alpha, self.c, self.L)


@dataclass(frozen=True)
class PhaseResult:
    theta_g: float
    global_term: float
    connection_term: float
    endpoint_overlap_mag: float
    steps_used: int
    converged: bool = True

    @property
    def wrapped(self) -> float:
        """``theta_g`` reduced to ``(-pi, pi]``."""
        return wrap_angle(self.theta_g)


def state_path(spec: ContourSpec) -> list[Wavefunction]:
    """Normalized states on the uniform grid of ``spec.steps + 1`` alphas."""
    cfg = spec.config(0.0)
    grid = np.linspace(0.0, spec.alpha_span, spec.steps + 1)
    start = continue_state(spec.state[0], spec.state[1], cfg)
    path = track_alpha(tuple(spec.state), cfg, grid, start=start)
    states = []
    for alpha, p in zip(path.alphas, path.points):
        try:
            states.append(build_state(p, cfg.with_alpha(float(alpha))))
        except RingBetheError as exc:
            raise PathError(f"state {spec.state} at alpha={alpha:.9g}: {exc}",
                            alpha=float(alpha)) from exc
    return states


def geometric_phase(path: Sequence[Wavefunction]) -> PhaseResult:
    """Discrete gauge-invariant phase of an ordered sequence of states."""
    if len(path) < 2:
        raise InvalidParameterError("a path needs at least two states")
    overlaps = np.array([inner_product(a, b) for a, b in zip(path[:-1], path[1:])])
    weakest = float(np.min(np.abs(overlaps)))
    if weakest < OVERLAP_FLOOR:
        raise PathTooCoarseError(f"neighbouring overlap {weakest:.3g} below {OVERLAP_FLOOR}")
    endpoint = inner_product(path[0], path[-1])
    mag = abs(endpoint)
    connection_term = -float(np.sum(np.angle(overlaps)))
    if mag < OVERLAP_FLOOR:
        nan = float("nan")
        partial = PhaseResult(nan, nan, connection_term, mag, len(path) - 1, False)
        raise IllDefinedPhaseError(
            f"endpoint overlap {mag:.3g} too small for a meaningful argument",
            magnitude=mag, partial=partial)
    global_term = math.atan2(endpoint.imag, endpoint.real)
    return PhaseResult(
        theta_g=_principal(global_term + connection_term),
        global_term=global_term,
        connection_term=connection_term,
        endpoint_overlap_mag=min(mag, 1.0),
        steps_used=len(path) - 1,
    )


def phase_converged(spec: ContourSpec, tol: float = CONVERGENCE_TOL,
                    max_doublings: int = MAX_DOUBLINGS) -> PhaseResult:
    """Geometric phase with step doubling until two levels agree within ``tol``.

    The coarse level is the even-indexed subsample of the fine path, so each
    doubling costs one new path.  ``converged`` is False if ``max_doublings``
    are exhausted.
    """
    steps = spec.steps
    fine_path = state_path(replace(spec, steps=2 * steps))
    coarse = geometric_phase(fine_path[::2])
    fine = geometric_phase(fine_path)
    doublings = 1
    while circle_distance(coarse.theta_g, fine.theta_g) >= tol and doublings < max_doublings:
        steps *= 2
        fine_path = state_path(replace(spec, steps=2 * steps))
        coarse = geometric_phase(fine_path[::2])
        fine = geometric_phase(fine_path)
        doublings += 1
    converged = circle_distance(coarse.theta_g, fine.theta_g) < tol
    return replace(fine, converged=converged)


def global_phase_limit(eta: float) -> float:
    """Large-``eta`` reference for the free endpoint-overlap phase, ``pi/2 - arccos(1/cosh eta)``."""
    if not eta > 0:
        raise InvalidParameterError("eta must be positive")
    return 0.5 * math.pi - math.acos(1.0 / math.cosh(eta))


@dataclass(frozen=True)
class SweepRow:
    eta: float
    c: float
    theta_g: float
    converged: bool
    status: str = "ok"
    result: Optional[PhaseResult] = None


def _sweep_cell(args) -> SweepRow:
    state, eta, c, L, steps = args
    try:
        res = phase_converged(ContourSpec(tuple(state), eta, c, L, steps))
    except RingBetheError as exc:
        return SweepRow(eta, c, float("nan"), False, f"{type(exc).__name__}: {exc}")
    return SweepRow(eta, c, res.theta_g, res.converged, "ok", res)


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def sweep(state: tuple[int, int], etas: Iterable[float], c_grid: Iterable[float], L: float,
          steps: int = 256, workers: Optional[int] = None) -> list[SweepRow]:
    """Phase on the ``etas x c_grid`` product, rows in eta-major order.

    Cells are independent; with ``workers > 1`` they run in separate
    processes.  The row order and every value are independent of ``workers``.
    """
    etas = [float(e) for e in etas]
    c_grid = [float(c) for c in c_grid]
    if not etas or not c_grid:
        raise InvalidParameterError("sweep grids must be non-empty")
    if any(b < a for a, b in zip(c_grid, c_grid[1:])):
        raise InvalidParameterError("c grid must be ascending")
    cells = [(tuple(state), eta, c, float(L), int(steps)) for eta in etas for c in c_grid]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(cells) == 1:
        return [_sweep_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, cells, chunksize=1))
