import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringbethe.errors import IllDefinedPhaseError, InvalidParameterError, PathTooCoarseError
from ringbethe.geomphase import (
    ContourSpec,
    circle_distance,
    geometric_phase,
    global_phase_limit,
    phase_converged,
    state_path,
    sweep,
    wrap_angle,
)
from ringbethe.spectrum import SpectralPoint, SystemConfig, continue_state
from ringbethe.wavefun import AmplitudeSet, Wavefunction, build_state, inner_product

L = 5.0
BASE = ContourSpec((1, 3), 2.0, 0.1, L)


@pytest.fixture(scope="module")
def base_path():
    return state_path(BASE)


def _plane_state(amps):
    cfg = SystemConfig.from_values(0.0, 0.0, 0.0, L)
    point = SpectralPoint(2 * math.pi / L, 4 * math.pi / L, 0.0)
    w = Wavefunction(point, cfg, AmplitudeSet(tuple(complex(a) for a in amps)))
    return w.normalized()


# --- contour ---------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(steps=4), dict(alpha_span=0.0), dict(eta=-1.0),
                                    dict(c=-1.0), dict(L=0.0), dict(state=(0, 2))])
def test_contour_validation(kwargs):
    values = dict(state=(1, 3), eta=2.0, c=0.1, L=L)
    values.update(kwargs)
    with pytest.raises(InvalidParameterError):
        ContourSpec(**values)


def test_free_path_is_normalized():
    path = state_path(ContourSpec((1, 3), 0.5, 0.0, L, steps=8))
    assert len(path) == 9
    for w in path:
        assert abs(inner_product(w, w) - 1) < 1e-10


def test_path_starts_at_built_state(base_path):
    cfg = SystemConfig.from_values(2.0, 0.0, 0.1, L)
    first = build_state(continue_state(1, 3, cfg), cfg)
    assert abs(abs(inner_product(first, base_path[0])) - 1) < 1e-10


def test_path_ends_at_three_five(base_path):
    cfg = SystemConfig.from_values(2.0, 0.0, 0.1, L)
    target = continue_state(3, 5, cfg)
    end = base_path[-1].point
    assert abs(end.k1 - target.k1) < 1e-8 and abs(end.k2 - target.k2) < 1e-8


# --- phase -----------------------------------------------------------------

def test_identical_states_have_zero_phase(base_path):
    res = geometric_phase([base_path[10]] * 6)
    assert res.theta_g == 0.0
    assert res.endpoint_overlap_mag == pytest.approx(1.0, abs=1e-12)


def test_gauge_invariance(base_path):
    base = geometric_phase(base_path).theta_g
    rng = np.random.default_rng(11)
    for _ in range(5):
        phases = np.exp(1j * rng.uniform(0, 2 * math.pi, len(base_path)))
        moved = [w.with_gauge(complex(p)) for w, p in zip(base_path, phases)]
        assert circle_distance(geometric_phase(moved).theta_g, base) < 1e-12


def test_splitting_identity(base_path):
    res = geometric_phase(base_path)
    assert 0 <= res.theta_g < 2 * math.pi
    assert circle_distance(res.theta_g, res.global_term + res.connection_term) < 1e-10
    assert 0 <= res.endpoint_overlap_mag <= 1
    assert res.steps_used == BASE.steps


def test_short_path_rejected(base_path):
    with pytest.raises(InvalidParameterError):
        geometric_phase(base_path[:1])


def test_orthogonal_neighbours_are_too_coarse():
    a = _plane_state((1, 0, 0, 0))
    b = _plane_state((0, 0, 0, 1))
    assert abs(inner_product(a, b)) < 1e-12
    with pytest.raises(PathTooCoarseError):
        geometric_phase([a, b])


def test_orthogonal_endpoints_are_ill_defined():
    a = _plane_state((1, 0, 0, 0))
    mid = _plane_state((1, 0, 0, 1))
    b = _plane_state((0, 0, 0, 1))
    with pytest.raises(IllDefinedPhaseError) as info:
        geometric_phase([a, mid, b])
    assert info.value.magnitude < 1e-6
    partial = info.value.partial
    assert math.isnan(partial.theta_g) and math.isfinite(partial.connection_term)


def test_two_state_phase_is_zero():
    # a single overlap enters with opposite signs in both terms
    a = _plane_state((1, 0, 0, 0))
    b = _plane_state((1, 0.3j, 0, 0.2))
    assert abs(wrap_angle(geometric_phase([a, b]).theta_g)) < 1e-14


def test_diagonal_state_has_zero_phase():
    res = phase_converged(ContourSpec((1, 1), 2.0, 0.1, L))
    assert res.converged
    assert abs(wrap_angle(res.theta_g)) < 0.02


def test_pancharatnam_matches_connection_integral():
    # finite-difference Berry connection in the smooth built-in gauge
    spec = ContourSpec((1, 3), 2.0, 1.0, L, steps=512)
    path = state_path(spec)
    h = spec.alpha_span / spec.steps
    conn = np.empty(len(path))
    for j, w in enumerate(path):
        lo, hi = max(j - 1, 0), min(j + 1, len(path) - 1)
        deriv = (inner_product(w, path[hi]) - inner_product(w, path[lo])) / ((hi - lo) * h)
        conn[j] = deriv.imag
    integral = -float(np.sum(0.5 * (conn[1:] + conn[:-1])) * h)
    g = inner_product(path[0], path[-1])
    theta_fd = cmath.phase(g) + integral
    assert circle_distance(theta_fd, geometric_phase(path).theta_g) < 1e-3


# --- convergence -----------------------------------------------------------

def test_free_contour_converges():
    res = phase_converged(ContourSpec((1, 3), 2.0, 0.0, L))
    assert res.converged and res.steps_used == 512


def test_converged_phase_independent_of_start_steps():
    a = phase_converged(ContourSpec((1, 3), 2.0, 1.0, L, steps=128))
    b = phase_converged(ContourSpec((1, 3), 2.0, 1.0, L, steps=64))
    assert circle_distance(a.theta_g, b.theta_g) < 1e-4


def test_non_convergence_is_reported():
    res = phase_converged(ContourSpec((1, 3), 2.0, 1.0, L, steps=16), tol=0.0, max_doublings=2)
    assert res.converged is False
    assert res.steps_used == 64


def test_cauchy_differences_shrink():
    spec = ContourSpec((1, 3), 2.0, 1.0, L, steps=256)
    fine = state_path(spec)
    thetas = [geometric_phase(fine[::stride]).theta_g for stride in (8, 4, 2, 1)]
    diffs = [circle_distance(a, b) for a, b in zip(thetas, thetas[1:])]
    assert diffs[0] >= diffs[1] >= diffs[2]


# --- reference limit -------------------------------------------------------

def test_global_phase_limit_values():
    assert global_phase_limit(1e-9) == pytest.approx(math.pi / 2, abs=1e-8)
    assert global_phase_limit(40.0) == pytest.approx(0.0, abs=1e-15)
    assert global_phase_limit(4.0) == pytest.approx(math.pi / 2 - math.acos(1 / math.cosh(4.0)),
                                                    abs=1e-15)
    # the quoted reference value carries a rounding slip in its last digits
    assert global_phase_limit(4.0) == pytest.approx(0.036634, abs=1e-5)
    with pytest.raises(InvalidParameterError):
        global_phase_limit(0.0)


@pytest.mark.parametrize("eta", [3.0, 4.0, 5.0])
def test_free_global_term_follows_limit(eta):
    res = phase_converged(ContourSpec((1, 3), eta, 0.0, L))
    assert abs(res.global_term - global_phase_limit(eta)) < 0.05


# --- helpers ---------------------------------------------------------------

@given(st.floats(-100, 100))
def test_wrap_angle_range(x):
    y = wrap_angle(x)
    assert -math.pi < y <= math.pi
    assert abs(math.sin(x) - math.sin(y)) < 1e-9 and abs(math.cos(x) - math.cos(y)) < 1e-9


# --- sweep -----------------------------------------------------------------

def test_sweep_rows_in_eta_major_order():
    rows = sweep((1, 3), [2.0, 0.5], [0.0, 0.5], L, steps=64, workers=1)
    assert [(r.eta, r.c) for r in rows] == [(2.0, 0.0), (2.0, 0.5), (0.5, 0.0), (0.5, 0.5)]
    assert all(r.status == "ok" and r.converged for r in rows)


def test_sweep_records_cell_failures():
    rows = sweep((9, 9), [50.0], [0.0, 30.0], L, steps=16, workers=1)
    assert len(rows) == 2
    assert rows[0].status == "ok"
    assert rows[1].status.startswith("EnumerationError") and math.isnan(rows[1].theta_g)


def test_sweep_validates_grids():
    with pytest.raises(InvalidParameterError):
        sweep((1, 3), [2.0], [1.0, 0.5], L)
    with pytest.raises(InvalidParameterError):
        sweep((1, 3), [], [0.5], L)


@settings(max_examples=3, deadline=None)
@given(st.integers(2, 3))
def test_sweep_independent_of_workers(workers):
    serial = sweep((1, 3), [1.0], [0.0, 2.0], L, steps=32, workers=1)
    parallel = sweep((1, 3), [1.0], [0.0, 2.0], L, steps=32, workers=workers)
    assert [(r.eta, r.c, r.theta_g, r.converged, r.status) for r in serial] == \
        [(r.eta, r.c, r.theta_g, r.converged, r.status) for r in parallel]
