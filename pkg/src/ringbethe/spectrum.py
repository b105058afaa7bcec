"""Spectral relations for two contact-interacting bosons on a ring with a defect.

Momenta ``(k1, k2)`` of a stationary state solve the pair of transcendental
equations ``F1 = F2 = 0`` with

    F1 = (k1^2 - k2^2 - c^2) Re(z1) - 2 c k1 Im(z1) - (k1^2 - k2^2 + c^2),
    z1 = u exp(-i k1 L),

and ``F2`` obtained by exchanging ``k1`` and ``k2``.  Roots are searched in the
open quadrant ``k1, k2 > 0``; negative momenta already appear inside the
wavefunction superposition.

States are labelled by 1-based indices ``(i, j)``: at ``c = 0`` the positive
free roots ``k^(1) < k^(2) < ...`` seed ``(k^(i), k^(j))``, and the root is
continued in ``c`` along a geometric schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .errors import (
    ConvergenceError,
    EnumerationError,
    InvalidParameterError,
    OutOfRangeError,
    PathError,
    SingularStepError,
)
from .tmatrix import DefectParams, TransferMatrix, make_defect

__all__ = [
    "SystemConfig",
    "SpectralPoint",
    "RootPath",
    "spectral_residual",
    "spectral_jacobian",
    "free_roots",
    "sorted_free_roots",
    "find_root",
    "continue_state",
    "enumerate_states",
    "track_alpha",
    "energy",
    "curve_samples",
]

TOL = 1e-10
MAX_ITER = 100
C_STEPS = 20
C_RETRIES = 8
ALPHA_REFINE = 8
# first point of the geometric continuation schedule, relative to the target c
C_START = 1e-4
DIAGONAL_GUARD = 1e-6
# largest corrector move accepted per continuation step, in free-root spacings
JUMP_FRACTION = 0.1
MAX_PHASE_STEP = 0.5
# bisection depth for curve samples on steep stretches
CURVE_REFINE = 40


@dataclass(frozen=True)
class SystemConfig:
    """Interaction strength ``c``, ring length ``L`` and defect parameters."""

    c: float
    L: float
    defect: DefectParams = field(default_factory=lambda: DefectParams(0.0, 0.0))

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.L)):
            raise InvalidParameterError(f"non-finite configuration {self!r}")
        if self.c < 0:
            raise InvalidParameterError(f"c must be non-negative, got {self.c}")
        if self.L <= 0:
            raise InvalidParameterError(f"L must be positive, got {self.L}")
        if not isinstance(self.defect, DefectParams):
            raise InvalidParameterError("defect must be a DefectParams instance")

    @classmethod
    def from_values(cls, eta: float, alpha: float, c: float, L: float) -> "SystemConfig":
        return cls(c=float(c), L=float(L), defect=DefectParams(float(eta), float(alpha)))

    @cached_property
    def transfer(self) -> TransferMatrix:
        return make_defect(self.defect)

    @property
    def eta(self) -> float:
        return self.defect.eta

    @property
    def alpha(self) -> float:
        return self.defect.alpha

    def with_c(self, c: float) -> "SystemConfig":
        return replace(self, c=c)

    def with_alpha(self, alpha: float) -> "SystemConfig":
        return replace(self, defect=self.defect.with_alpha(alpha))


@dataclass(frozen=True)
class SpectralPoint:
    k1: float
    k2: float
    residual: float
    index: Optional[tuple[int, int]] = None

    def swapped(self) -> "SpectralPoint":
        index = None if self.index is None else (self.index[1], self.index[0])
        return SpectralPoint(self.k2, self.k1, self.residual, index)

    @property
    def k(self) -> np.ndarray:
        return np.array([self.k1, self.k2])


@dataclass(frozen=True)
class RootPath:
    alphas: np.ndarray
    points: tuple[SpectralPoint, ...]

    def __post_init__(self):
        if len(self.alphas) != len(self.points) or len(self.points) < 2:
            raise InvalidParameterError("a root path needs >= 2 points, one per alpha")

    def __len__(self):
        return len(self.points)

    def momenta(self) -> np.ndarray:
        return np.array([[p.k1, p.k2] for p in self.points])


def _relation(a, b, c, L, u):
    z = u * np.exp(-1j * a * L)
    d = a * a - b * b
    return (d - c * c) * z.real - 2.0 * c * a * z.imag - (d + c * c)


def spectral_residual(k1, k2, cfg: SystemConfig):
    """Return ``(F1, F2)``; accepts scalars or broadcastable arrays."""
    u = cfg.transfer.u
    return _relation(k1, k2, cfg.c, cfg.L, u), _relation(k2, k1, cfg.c, cfg.L, u)


def spectral_jacobian(k1: float, k2: float, cfg: SystemConfig) -> np.ndarray:
    """Analytic Jacobian ``d(F1, F2)/d(k1, k2)``."""
    c, L, u = cfg.c, cfg.L, cfg.transfer.u

    def partials(a, b):
        z = u * np.exp(-1j * a * L)
        re, im = z.real, z.imag
        # d Re(z)/da = L Im(z), d Im(z)/da = -L Re(z)
        d_own = (2 * a * (re - 1) + (a * a - b * b - c * c) * L * im
                 - 2 * c * im + 2 * c * a * L * re)
        d_other = -2 * b * (re - 1)
        return d_own, d_other

    f1_k1, f1_k2 = partials(k1, k2)
    f2_k2, f2_k1 = partials(k2, k1)
    return np.array([[f1_k1, f1_k2], [f2_k1, f2_k2]], dtype=float)


def _residual_norm(k1, k2, cfg):
    f1, f2 = spectral_residual(k1, k2, cfg)
    return max(abs(float(f1)), abs(float(f2)))


def _c_derivative(k1, k2, cfg):
    c, L, u = cfg.c, cfg.L, cfg.transfer.u

    def one(a):
        z = u * np.exp(-1j * a * L)
        return -2.0 * c * (z.real + 1.0) - 2.0 * a * z.imag

    return np.array([one(k1), one(k2)])


def _free_spacing(cfg: SystemConfig) -> float:
    """Smallest gap between neighbouring free roots."""
    beta = _free_phase(cfg.eta)
    if beta < 1e-9:
        return 2.0 * math.pi / cfg.L
    return min(2.0 * beta, 2.0 * math.pi - 2.0 * beta) / cfg.L


def _free_phase(eta: float) -> float:
    return math.acos(1.0 / math.cosh(eta))


def free_roots(cfg: SystemConfig, branch: int, n: int) -> float:
    """Closed-form non-interacting root ``k L = alpha + branch*arccos(1/cosh eta) + 2 pi n``.

    Parameters
    ----------
    cfg : SystemConfig
        Must have ``c == 0``.
    branch : {+1, -1}
    n : int
    """
    if cfg.c != 0:
        raise InvalidParameterError("free_roots requires c == 0")
    if branch not in (1, -1):
        raise InvalidParameterError(f"branch must be +1 or -1, got {branch}")
    k = (cfg.alpha + branch * _free_phase(cfg.eta) + 2.0 * math.pi * n) / cfg.L
    if k <= 0:
        raise OutOfRangeError(f"free root k={k} is not positive (branch {branch}, n={n})")
    return k


def sorted_free_roots(cfg: SystemConfig, count: int) -> list[float]:
    """The ``count`` smallest distinct positive free roots, ascending.

    Only ``eta`` and ``alpha`` of ``cfg`` are used.  At ``eta = 0`` the two
    branches coincide and are counted once.
    """
    if count < 1:
        return []
    beta = _free_phase(cfg.eta)
    alpha = cfg.alpha
    n0 = math.floor((-alpha - beta) / (2 * math.pi)) - 1
    roots = []
    for n in range(n0, n0 + count + 3):
        for branch in (1, -1):
            k = (alpha + branch * beta + 2.0 * math.pi * n) / cfg.L
            if k > 0:
                roots.append(k)
    roots.sort()
    distinct = []
    for k in roots:
        if distinct and abs(k - distinct[-1]) <= 1e-12 * max(1.0, k):
            continue
        distinct.append(k)
    if len(distinct) < count:
        raise OutOfRangeError(f"could not generate {count} free roots")
    return distinct[:count]


def _admissible(k1, k2, c):
    if k1 <= 0 or k2 <= 0:
        return False
    if c > 0 and abs(k1 - k2) < DIAGONAL_GUARD * (k1 + k2):
        return False
    return True


def _scaled_system(k1: float, k2: float, cfg: SystemConfig, jacobian: bool = True):
    """``(F, G, dG/dk)`` with ``G = F / w`` and ``w = |(k1 + i c)^2 - k2^2|``.

    Both relations carry the common magnitude ``w``; dividing it out removes
    the spurious ``k1 == k2`` family at ``c = 0`` and keeps Newton basins
    bounded by the extrema of ``Re(u e^{-ikL})`` only.
    """
    f = np.array(spectral_residual(k1, k2, cfg), dtype=float)
    c2 = cfg.c * cfg.c
    s, d = k1 + k2, k1 - k2
    p, q = d * d + c2, s * s + c2
    w = math.sqrt(p * q)
    g = f / w if w > 0.0 else f
    if not jacobian:
        return f, g, None
    jac = spectral_jacobian(k1, k2, cfg)
    if w == 0.0:
        return f, f, jac
    grad_w = np.array([d * q + s * p, -d * q + s * p]) / w
    return f, g, (jac - np.outer(g, grad_w)) / w


def find_root(seed_k1: float, seed_k2: float, cfg: SystemConfig, tol: float = TOL,
              max_iter: int = MAX_ITER) -> SpectralPoint:
    """Damped Newton iteration for ``F1 = F2 = 0`` from the given seed.

    Steps are taken on the rescaled relations ``F / |(k1 + i c)^2 - k2^2|``,
    which share the roots of ``F`` but not its spurious diagonal family at
    ``c = 0``.  Each step changes ``k L`` by at most ``MAX_PHASE_STEP`` and is
    halved until the rescaled residual decreases.  Iterates are kept in the
    open positive quadrant and, for ``c > 0``, away from the diagonal.
    Convergence is judged on the unscaled residual ``max |F|``.

    Raises
    ------
    SingularStepError
        Jacobian numerically singular at an iterate.
    ConvergenceError
        Residual still above ``tol`` after ``max_iter`` iterations.
    """
    if not (math.isfinite(seed_k1) and math.isfinite(seed_k2)):
        raise InvalidParameterError("seeds must be finite")
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    k = np.array([seed_k1, seed_k2], dtype=float)
    f, g, jac = _scaled_system(k[0], k[1], cfg)
    r = float(np.max(np.abs(f)))
    merit = float(np.max(np.abs(g)))
    if r == 0.0:
        return SpectralPoint(float(k[0]), float(k[1]), 0.0)
    for _ in range(max_iter):
        scale = float(np.max(np.abs(jac)))
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if scale == 0.0 or abs(det) <= 1e-14 * scale * scale:
            if r < tol:
                break
            raise SingularStepError(
                f"singular Jacobian at k=({k[0]:.6g}, {k[1]:.6g})", k[0], k[1], r)
        step = np.linalg.solve(jac, -g)
        # trust region: at most MAX_PHASE_STEP of phase k*L per iteration, so
        # seeds near an extremum of Re(u e^{-ikL}) cannot jump to another root
        longest = float(np.max(np.abs(step))) * cfg.L
        if longest > MAX_PHASE_STEP:
            step *= MAX_PHASE_STEP / longest
        lam = 1.0
        accepted = False
        for _ in range(40):
            trial = k + lam * step
            if _admissible(trial[0], trial[1], cfg.c):
                f_t, g_t, _ = _scaled_system(trial[0], trial[1], cfg, jacobian=False)
                merit_t = float(np.max(np.abs(g_t)))
                if merit_t < merit or (merit_t <= merit and lam == 1.0):
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            # no descent left: either sitting on the rounding floor or stuck
            if r < tol:
                break
            raise ConvergenceError(
                f"line search failed at k=({k[0]:.6g}, {k[1]:.6g}), residual {r:.3g}",
                k[0], k[1], r)
        moved = float(np.max(np.abs(trial - k)))
        k, merit = trial, merit_t
        f, g, jac = _scaled_system(k[0], k[1], cfg)
        r = float(np.max(np.abs(f)))
        if r < tol and moved <= 1e-12 * max(1.0, float(np.max(np.abs(k)))):
            break
        if r == 0.0:
            break
    else:
        if r >= tol:
            raise ConvergenceError(
                f"no convergence in {max_iter} iterations, residual {r:.3g}", k[0], k[1], r)
    if r >= tol:
        raise ConvergenceError(f"residual {r:.3g} above tolerance", k[0], k[1], r)
    return SpectralPoint(float(k[0]), float(k[1]), r)


def _diagonal_seed(K: float, c: float, L: float) -> tuple[float, float]:
    # leading-order splitting of an (i, i) pair at weak coupling
    delta = math.sqrt(c / (2.0 * L))
    return K - delta, K + delta


def continue_state(i: int, j: int, cfg: SystemConfig, steps: int = C_STEPS,
                   retries: int = C_RETRIES, tol: float = TOL) -> SpectralPoint:
    """Root of state ``(i, j)`` at ``cfg`` by continuation in ``c`` from ``c = 0``.

    Only ``i <= j`` is continued; ``(j, i)`` is returned as the exact swap.
    """
    if i < 1 or j < 1:
        raise InvalidParameterError(f"state indices are 1-based, got ({i}, {j})")
    if i > j:
        return continue_state(j, i, cfg, steps, retries, tol).swapped()
    free = sorted_free_roots(cfg, j)
    if cfg.c == 0:
        k1, k2 = free[i - 1], free[j - 1]
        return SpectralPoint(k1, k2, _residual_norm(k1, k2, cfg), (i, j))

    schedule = list(cfg.c * np.logspace(math.log10(C_START), 0.0, steps))
    schedule[-1] = cfg.c
    jump = JUMP_FRACTION * _free_spacing(cfg)
    c_cur = 0.0
    k = np.array([free[i - 1], free[j - 1]])
    halvings = 0
    while schedule:
        c_next = schedule[0]
        if i == j and c_cur == 0.0:
            seed = np.array(_diagonal_seed(free[i - 1], c_next, cfg.L))
            bound = math.inf
        else:
            # tangent predictor from the implicit-function theorem
            here = cfg.with_c(c_cur)
            try:
                dk = np.linalg.solve(spectral_jacobian(k[0], k[1], here),
                                     -_c_derivative(k[0], k[1], here))
            except np.linalg.LinAlgError:
                dk = np.zeros(2)
            seed = k + (c_next - c_cur) * dk
            if not _admissible(seed[0], seed[1], c_next):
                seed = k
            bound = jump
        try:
            p = find_root(seed[0], seed[1], cfg.with_c(c_next), tol=tol)
            if float(np.max(np.abs(p.k - seed))) > bound:
                raise ConvergenceError(
                    f"corrector moved {float(np.max(np.abs(p.k - seed))):.3g} > {bound:.3g}",
                    p.k1, p.k2, p.residual)
        except ConvergenceError as exc:
            halvings += 1
            if halvings > retries:
                raise EnumerationError(
                    f"lost state ({i}, {j}) continuing to c={c_next:.6g} "
                    f"(eta={cfg.eta}, alpha={cfg.alpha}, L={cfg.L}): {exc}",
                    index=(i, j)) from exc
            mid = 0.5 * c_next if c_cur == 0.0 else math.sqrt(c_cur * c_next)
            schedule.insert(0, mid)
            continue
        k = p.k
        c_cur = c_next
        halvings = 0
        schedule.pop(0)
    return SpectralPoint(float(k[0]), float(k[1]), p.residual, (i, j))


def enumerate_states(cfg: SystemConfig, max_index: int, include_diagonal: bool = True,
                     steps: int = C_STEPS, tol: float = TOL) -> dict:
    """All states ``(i, j)`` with ``1 <= i, j <= max_index``, keyed by index pair."""
    if max_index < 1:
        raise InvalidParameterError("max_index must be >= 1")
    states = {}
    for i in range(1, max_index + 1):
        for j in range(i, max_index + 1):
            if i == j and not include_diagonal:
                continue
            p = continue_state(i, j, cfg, steps=steps, tol=tol)
            states[(i, j)] = p
            if i != j:
                states[(j, i)] = p.swapped()
    return {key: states[key] for key in sorted(states)}


def track_alpha(state: tuple[int, int], cfg: SystemConfig, alpha_grid: Sequence[float],
                start: Optional[SpectralPoint] = None, tol: float = TOL,
                max_refine: int = ALPHA_REFINE) -> RootPath:
    """Follow the root of ``state`` along ``alpha_grid`` by predictor-corrector steps.

    The predictor shifts both momenta by ``d_alpha / L`` (exact at ``c = 0``);
    Newton corrects.  A failing step is bisected up to ``max_refine`` times.
    """
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise InvalidParameterError("alpha grid needs at least two entries")
    diffs = np.diff(grid)
    if not (np.all(diffs >= 0) or np.all(diffs <= 0)):
        raise InvalidParameterError("alpha grid must be monotone")
    if grid[0] != cfg.alpha:
        raise InvalidParameterError("alpha grid must start at the configuration's alpha")
    if start is None:
        start = continue_state(state[0], state[1], cfg, tol=tol)

    jump = JUMP_FRACTION * _free_spacing(cfg)

    def advance(k, a0, a1, depth):
        seed = k + (a1 - a0) / cfg.L
        try:
            p = find_root(seed[0], seed[1], cfg.with_alpha(a1), tol=tol)
            moved = float(np.max(np.abs(p.k - seed)))
            if moved > jump:
                raise ConvergenceError(f"corrector moved {moved:.3g} > {jump:.3g}",
                                       p.k1, p.k2, p.residual)
            return p
        except ConvergenceError as exc:
            if depth >= max_refine:
                raise PathError(
                    f"tracking state {state} failed at alpha={a1:.9g}: {exc}", alpha=a1) from exc
        mid = 0.5 * (a0 + a1)
        p_mid = advance(k, a0, mid, depth + 1)
        return advance(p_mid.k, mid, a1, depth + 1)

    points = [replace(start, index=tuple(state))]
    k = start.k
    for a0, a1 in zip(grid[:-1], grid[1:]):
        if a1 == a0:
            points.append(points[-1])
            continue
        p = advance(k, a0, a1, 0)
        k = p.k
        points.append(SpectralPoint(p.k1, p.k2, p.residual, None))
    return RootPath(grid.copy(), tuple(points))


def energy(p: SpectralPoint) -> float:
    return 0.5 * (p.k1 * p.k1 + p.k2 * p.k2)


def _vertical_free(cfg, lo, hi, step):
    grid = np.arange(lo, hi + 0.5 * step, step)
    grid = grid[(grid > 0) & (grid <= hi)]
    lines = []
    if len(grid) >= 2:
        lines.append(np.column_stack([grid, grid]))
    n_roots = 1
    while True:
        roots = sorted_free_roots(cfg, n_roots)
        if roots[-1] > hi:
            break
        n_roots += 1
    for k in roots:
        if lo <= k <= hi and len(grid) >= 2:
            lines.append(np.column_stack([np.full_like(grid, k), grid]))
    return lines


def curve_samples(cfg: SystemConfig, family: str, k_window: tuple[float, float],
                  step: float) -> list[np.ndarray]:
    """Sample one family of spectral curves inside a square momentum window.

    The vertical family is the zero set of ``F1``: for each ``k1`` on a grid of
    spacing ``step`` the roots in ``k2`` are bracketed by a sign-change scan and
    refined by bisection.  The horizontal family (zero set of ``F2``) is its
    transpose.  Each returned array has columns ``(k1, k2)``; polylines are split
    where a root leaves the window or a pole of the relation passes between
    neighbouring samples.
    """
    if family not in ("vertical", "horizontal"):
        raise InvalidParameterError(f"unknown family {family!r}")
    if step <= 0:
        raise InvalidParameterError("step must be positive")
    lo, hi = float(k_window[0]), float(k_window[1])
    lo = max(lo, step)
    if hi <= lo:
        return []
    if cfg.c == 0:
        lines = _vertical_free(cfg, lo, hi, step)
    else:
        lines = _vertical_interacting(cfg, lo, hi, step)
    if family == "horizontal":
        lines = [line[:, ::-1].copy() for line in lines]
    return lines


def _vertical_interacting(cfg, lo, hi, step):
    grid = np.arange(lo, hi + 0.5 * step, step)
    grid = grid[grid <= hi]
    u, c, L = cfg.transfer.u, cfg.c, cfg.L

    def column(k1):
        vals = _relation(k1, grid, c, L, u)
        roots = []
        for m in range(len(grid) - 1):
            a, b = vals[m], vals[m + 1]
            if a == 0.0:
                roots.append(float(grid[m]))
            elif a * b < 0:
                roots.append(bisect(lambda k2: _relation(k1, k2, c, L, u),
                                    grid[m], grid[m + 1], xtol=1e-14, rtol=1e-15))
        if len(grid) and vals[-1] == 0.0:
            roots.append(float(grid[-1]))
        pole_side = float(np.sign((u * np.exp(-1j * k1 * L)).real - 1.0))
        return float(k1), roots, pole_side

    def refine(left, right, depth):
        # steep stretches (near the poles) and window exits get extra columns
        (a, ra, sa), (b, rb, sb) = left, right
        if depth >= CURVE_REFINE or b - a < 1e-12 or not (ra or rb):
            return []
        if sa == sb and len(ra) == len(rb):
            if max(abs(x - y) for x, y in zip(ra, rb)) <= step:
                return []
        mid = column(0.5 * (a + b))
        return refine(left, mid, depth + 1) + [mid] + refine(mid, right, depth + 1)

    base = [column(k1) for k1 in grid]
    columns = base[:1]
    for left, right in zip(base[:-1], base[1:]):
        columns.extend(refine(left, right, 0))
        columns.append(right)

    lines: list[np.ndarray] = []
    current: list[list[tuple[float, float]]] = []
    prev_count, prev_side = -1, None
    for k1, roots, side in columns:
        if len(roots) != prev_count or side != prev_side:
            lines.extend(np.array(seg) for seg in current if len(seg) >= 2)
            current = [[] for _ in roots]
        for seg, k2 in zip(current, roots):
            seg.append((k1, k2))
        prev_count, prev_side = len(roots), side
    lines.extend(np.array(seg) for seg in current if len(seg) >= 2)
    return lines
