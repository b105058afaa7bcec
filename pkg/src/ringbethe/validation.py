"""Fast self-test used by ``ringbethe validate``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geomphase import ContourSpec, circle_distance, geometric_phase, state_path
from .spectrum import SystemConfig, enumerate_states, find_root, free_roots
from .tmatrix import DefectParams, make_defect
from .wavefun import build_state, inner_product, inner_product_quadrature


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    seconds: float


def _group_invariant(rng) -> float:
    worst = 0.0
    for eta, alpha in zip(rng.uniform(0, 5, 1000), rng.uniform(0, 2 * math.pi, 1000)):
        m = make_defect(DefectParams(float(eta), float(alpha)))
        worst = max(worst, abs(float(m.group_defect())))
    return worst


def _free_oracle(rng) -> float:
    worst = 0.0
    for eta in (0.5, 2.0, 4.0):
        for alpha in (0.0, 1.0, 3.0):
            cfg = SystemConfig.from_values(eta, alpha, 0.0, 5.0)
            for n1, n2 in ((1, 2), (2, 3)):
                k1, k2 = free_roots(cfg, 1, n1), free_roots(cfg, -1, n2)
                p = find_root(k1 + 1e-3, k2 - 1e-3, cfg)
                worst = max(worst, abs(p.k1 - k1), abs(p.k2 - k2))
    return worst


def _quadrature(rng) -> float:
    cfg = SystemConfig.from_values(2.0, 0.7, 0.1, 5.0)
    states = [build_state(p, cfg) for p in enumerate_states(cfg, 3).values()]
    worst = 0.0
    for a, b in ((states[0], states[0]), (states[1], states[4]), (states[2], states[-1])):
        exact = inner_product(a, b)
        quad = inner_product_quadrature(a, b)
        worst = max(worst, abs(exact - quad) / max(abs(exact), 1e-300))
    return worst


def _gauge(rng) -> float:
    path = state_path(ContourSpec((1, 3), 2.0, 0.1, 5.0, steps=32))
    base = geometric_phase(path).theta_g
    worst = 0.0
    for _ in range(5):
        phases = rng.uniform(0, 2 * math.pi, len(path))
        moved = [w.with_gauge(complex(np.exp(1j * ph))) for w, ph in zip(path, phases)]
        worst = max(worst, circle_distance(geometric_phase(moved).theta_g, base))
    return worst


CHECKS: tuple[tuple[str, Callable, float], ...] = (
    ("group invariant |u|^2-|v|^2-1", _group_invariant, 1e-12),
    ("free-limit roots vs closed form", _free_oracle, 1e-10),
    ("closed-form vs quadrature overlaps", _quadrature, 1e-8),
    ("gauge invariance of theta_g", _gauge, 1e-12),
)


def run_checks(inject_failure: bool = False, seed: int = 20240101) -> list[CheckResult]:
    """Run every fast check; ``inject_failure`` forces the first tolerance to be violated."""
    rng = np.random.default_rng(seed)
    results = []
    for n, (name, fn, tol) in enumerate(CHECKS):
        if inject_failure and n == 0:
            tol = -1.0
        start = time.perf_counter()
        measured = float(fn(rng))
        results.append(CheckResult(name, bool(measured < tol), measured, tol,
                                   time.perf_counter() - start))
    return results
