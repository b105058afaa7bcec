"""Two-particle Bethe wavefunctions on the ring and their inner products.

On the ordered wedge ``0 <= x1 <= x2 < L`` a state with momenta ``(k1, k2)`` is

    Psi = sum_{s1, s2 = +-} A(s1 k1, s2 k2) [ S_e(q1, q2) e^{i(q1 x1 + q2 x2)}
                                           + S_s(q1, q2) e^{i(q1 x2 + q2 x1)} ],

with ``q1 = s1 k1``, ``q2 = s2 k2`` and contact factors
``S_e = 1 + i c/(q1 - q2)``, ``S_s = 1 + i c/(q2 - q1)``.  Other coordinates
follow from bosonic symmetry.  The defect sits at the seam ``x = 0 = L``.

Boundary conditions at the defect relate the amplitudes a particle carries
just after the seam (``x -> 0+``) to those it arrives with after circling the
ring (``x -> L-``, phase ``e^{+-ikL}``), with the spectator particle in a fixed
plane wave::

    M (A^e(k1, k2), A^e(-k1, k2))  = (A^s(k1, k2) e^{ik1L}, A^s(-k1, k2) e^{-ik1L})
    M (A^s(k1, k2), A^s(k1, -k2))  = (A^e(k1, k2) e^{ik2L}, A^e(k1, -k2) e^{-ik2L})

These four rows involve ``A(+,+)``, ``A(-,+)``, ``A(+,-)`` and have a
nullspace exactly on the roots of the spectral relations.  The remaining
amplitude ``A(-,-)`` appears only in the mirrored rows (spectator momentum
``-k2`` resp. ``-k1``), which for ``c > 0`` cannot all hold at once; it is
fixed by least squares on those rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateMomentaError,
    DomainError,
    InvalidParameterError,
    NotASpectralRootError,
    OracleUnreliableError,
)
from .spectrum import SpectralPoint, SystemConfig

__all__ = [
    "SIGNS",
    "AmplitudeSet",
    "Wavefunction",
    "scattering_factor",
    "boundary_system",
    "build_state",
    "evaluate",
    "triangle_integral",
    "inner_product",
    "inner_product_quadrature",
]

# order of the four base amplitudes A(s1 k1, s2 k2)
SIGNS = ((1, 1), (-1, 1), (1, -1), (-1, -1))
_COL = {s: n for n, s in enumerate(SIGNS)}

CONSISTENCY_TOL = 1e-8
DEGENERATE_REL = 1e-12
NOISE_REL = 1e-12
QUADRATURE_RTOL = 1e-6


def scattering_factor(perm: str, q1: float, q2: float, c: float) -> complex:
    """Contact factor ``1 + i c/(q1 - q2)`` (``'e'``) or ``1 + i c/(q2 - q1)`` (``'s'``)."""
    if perm not in ("e", "s", "sigma"):
        raise InvalidParameterError(f"unknown permutation {perm!r}")
    if c == 0:
        return 1.0 + 0.0j
    d = q1 - q2
    if abs(d) <= DEGENERATE_REL * (abs(q1) + abs(q2)):
        raise DegenerateMomentaError(f"coincident momenta q1={q1!r}, q2={q2!r} with c={c}")
    if perm != "e":
        d = -d
    return 1.0 + 1j * c / d


def boundary_system(k1: float, k2: float, cfg: SystemConfig) -> np.ndarray:
    """The 8x4 boundary-condition matrix acting on the base amplitudes.

    Rows 0-3 are the four defect conditions with spectators ``+k2`` and ``+k1``;
    rows 4-7 the mirrored conditions with spectators ``-k2`` and ``-k1``.
    Columns follow :data:`SIGNS`.
    """
    M = cfg.transfer.matrix()
    c, L = cfg.c, cfg.L
    rows = np.zeros((8, 4), dtype=complex)
    for block, spectator in enumerate((1, -1)):
        # particle with momentum +-k1 crosses the seam, spectator s2 = spectator
        s2 = spectator
        for r, s1_r in enumerate((1, -1)):
            row = rows[4 * block + r]
            for col, s1 in enumerate((1, -1)):
                row[_COL[(s1, s2)]] += M[r, col] * scattering_factor("e", s1 * k1, s2 * k2, c)
            row[_COL[(s1_r, s2)]] -= (scattering_factor("s", s1_r * k1, s2 * k2, c)
                                      * np.exp(1j * s1_r * k1 * L))
        # particle with momentum +-k2 crosses the seam, spectator s1 = spectator
        s1 = spectator
        for r, s2_r in enumerate((1, -1)):
            row = rows[4 * block + 2 + r]
            for col, s2 in enumerate((1, -1)):
                row[_COL[(s1, s2)]] += M[r, col] * scattering_factor("s", s1 * k1, s2 * k2, c)
            row[_COL[(s1, s2_r)]] -= (scattering_factor("e", s1 * k1, s2_r * k2, c)
                                      * np.exp(1j * s2_r * k2 * L))
    return rows


@dataclass(frozen=True)
class AmplitudeSet:
    """Base amplitudes ``A(s1 k1, s2 k2)`` in :data:`SIGNS` order.

    ``consistency_residual`` is ``sigma_min / sigma_max`` of the four primary
    boundary rows; ``closure_residual`` the relative residual left in the
    mirrored rows after the least-squares fit of ``A(-,-)``.
    """

    base: tuple
    consistency_residual: float = 0.0
    closure_residual: float = 0.0

    def __post_init__(self):
        if len(self.base) != 4:
            raise InvalidParameterError("an amplitude set has exactly four entries")
        if not any(abs(a) > 0 for a in self.base):
            raise InvalidParameterError("amplitudes must not all vanish")

    def array(self) -> np.ndarray:
        return np.array(self.base, dtype=complex)

    def scaled(self, factor: complex) -> "AmplitudeSet":
        return replace(self, base=tuple(complex(factor * a) for a in self.base))


def _solve_amplitudes(k1, k2, cfg):
    system = boundary_system(k1, k2, cfg)
    m = cfg.transfer
    # natural size of the row entries; rows far below it are rounding noise
    ref = abs(m.u) + abs(m.v) + 1.0
    primary = system[:4, :3]
    _, s, vh = np.linalg.svd(primary)
    if s[0] <= NOISE_REL * ref:
        # every row vanishes (no barrier, no interaction, k L in 2 pi Z):
        # any amplitudes are allowed, take the unscattered plane wave
        consistency, x = 0.0, np.array([1.0, 0.0, 0.0], dtype=complex)
    else:
        consistency, x = float(s[-1] / s[0]), vh[-1].conj()
    mirrored = system[4:]
    col = mirrored[:, 3]
    rhs = -(mirrored[:, :3] @ x)
    denom = np.vdot(col, col).real
    w = np.vdot(col, rhs) / denom if denom > (NOISE_REL * ref) ** 2 else 0.0
    amps = np.array([x[0], x[1], x[2], w], dtype=complex)
    amps /= np.linalg.norm(amps)
    closure = float(np.linalg.norm(mirrored @ amps)
                    / max(np.linalg.norm(mirrored), NOISE_REL * ref))
    # gauge: A(+,+) real positive unless it (nearly) vanishes
    mags = np.abs(amps)
    pivot = 0 if mags[0] >= 1e-8 * mags.max() else int(np.argmax(mags))
    amps *= np.exp(-1j * np.angle(amps[pivot]))
    return amps, consistency, closure


@dataclass(frozen=True)
class Wavefunction:
    """A two-particle state on the ring; ``evaluate`` returns ``Psi / norm``."""

    point: SpectralPoint
    cfg: SystemConfig
    amplitudes: AmplitudeSet
    norm: float = 1.0

    def __post_init__(self):
        if not (self.norm > 0 and math.isfinite(self.norm)):
            raise InvalidParameterError(f"norm must be positive and finite, got {self.norm}")

    @cached_property
    def terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Plane-wave momenta ``(n, 2)`` and coefficients ``(n,)`` on the ordered wedge."""
        k1, k2, c = self.point.k1, self.point.k2, self.cfg.c
        momenta, coeffs = [], []
        for (s1, s2), a in zip(SIGNS, self.amplitudes.base):
            if a == 0:
                continue
            q1, q2 = s1 * k1, s2 * k2
            momenta.append((q1, q2))
            coeffs.append(scattering_factor("e", q1, q2, c) * a)
            momenta.append((q2, q1))
            coeffs.append(scattering_factor("s", q1, q2, c) * a)
        return np.array(momenta, dtype=float), np.array(coeffs, dtype=complex) / self.norm

    def normalized(self) -> "Wavefunction":
        raw = replace(self, norm=1.0)
        return replace(self, norm=math.sqrt(inner_product(raw, raw).real))

    def with_gauge(self, phase: complex) -> "Wavefunction":
        """Same ray, amplitudes multiplied by the unit scalar ``phase``."""
        return replace(self, amplitudes=self.amplitudes.scaled(phase))

    def __call__(self, x1, x2):
        return evaluate(self, x1, x2)


def build_state(p: SpectralPoint, cfg: SystemConfig,
                tol: float = CONSISTENCY_TOL) -> Wavefunction:
    """Normalized wavefunction of the spectral root ``p``.

    Raises
    ------
    NotASpectralRootError
        The primary boundary rows have no nullspace at ``p`` (relative
        smallest singular value ``>= tol``).
    DegenerateMomentaError
        ``k1 == k2`` with ``c > 0``.
    """
    amps, consistency, closure = _solve_amplitudes(p.k1, p.k2, cfg)
    if not consistency < tol:
        raise NotASpectralRootError(
            f"boundary system at k=({p.k1:.9g}, {p.k2:.9g}) has sigma_min/sigma_max="
            f"{consistency:.3g}", consistency)
    aset = AmplitudeSet(tuple(complex(a) for a in amps), consistency, closure)
    return Wavefunction(p, cfg, aset).normalized()


def evaluate(w: Wavefunction, x1, x2):
    """Wavefunction value at ``(x1, x2)``; scalars or broadcastable arrays."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    L = w.cfg.L
    if not np.all((x1 >= 0) & (x1 < L) & (x2 >= 0) & (x2 < L)):
        raise DomainError(f"coordinates must lie in [0, {L})")
    lo = np.minimum(x1, x2)
    hi = np.maximum(x1, x2)
    momenta, coeffs = w.terms
    phase = np.exp(1j * (lo[..., None] * momenta[:, 0] + hi[..., None] * momenta[:, 1]))
    out = phase @ coeffs
    return complex(out) if out.ndim == 0 else out


# --- wedge integrals -------------------------------------------------------

_SERIES_SPREAD = 1.0
_SERIES_TERMS = 32


def _divdiff1(p, q):
    # (e^{iq} - e^{ip}) / (q - p), stable as q -> p
    h = q - p
    return 1j * np.exp(1j * p) * (np.sinc(h / np.pi) + 0.5j * h * np.sinc(h / (2 * np.pi)) ** 2)


def _divdiff2(z0, z1, z2):
    """Second divided difference of ``exp(i x)`` at three real nodes."""
    z = np.stack(np.broadcast_arrays(z0, z1, z2)).astype(float)
    z.sort(axis=0)
    lo, mid, hi = z
    spread = hi - lo
    out = np.empty(lo.shape, dtype=complex)

    far = spread > _SERIES_SPREAD
    if np.any(far):
        a, b, cc = lo[far], mid[far], hi[far]
        out[far] = (_divdiff1(b, cc) - _divdiff1(a, b)) / (cc - a)

    near = ~far
    if np.any(near):
        m = (lo[near] + mid[near] + hi[near]) / 3.0
        d = [lo[near] - m, mid[near] - m, hi[near] - m]
        # complete homogeneous symmetric polynomials h_n(d0, d1, d2), built
        # one variable at a time: h_n(.., x) = h_n(..) + x h_{n-1}(.., x)
        h = [d[0] ** n for n in range(_SERIES_TERMS + 1)]
        for x in d[1:]:
            for n in range(1, _SERIES_TERMS + 1):
                h[n] = h[n] + x * h[n - 1]
        total = np.zeros_like(m, dtype=complex)
        fact = 2.0
        ipow = -1.0 + 0j  # i^2
        for n in range(2, _SERIES_TERMS + 2):
            total += ipow / fact * h[n - 2]
            ipow *= 1j
            fact *= n + 1
        out[near] = np.exp(1j * m) * total
    return out


def triangle_integral(q1, q2, L: float):
    """``int_0^L dx2 e^{i q2 x2} int_0^{x2} dx1 e^{i q1 x1}`` in closed form."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    a, b = q1 * L, q2 * L
    out = -(L * L) * _divdiff2(np.zeros_like(a + b), b, a + b)
    return complex(out) if out.ndim == 0 else out


def inner_product(a: Wavefunction, b: Wavefunction) -> complex:
    """``<a|b>`` over the square ``[0, L)^2`` from the closed-form wedge integrals."""
    if a.cfg.L != b.cfg.L:
        raise ConfigurationError(f"states live on rings of different length {a.cfg.L} != {b.cfg.L}")
    pa, ca = a.terms
    pb, cb = b.terms
    diff = pb[None, :, :] - pa[:, None, :]
    tri = triangle_integral(diff[..., 0], diff[..., 1], a.cfg.L)
    value = complex(2.0 * (ca.conj() @ tri @ cb))
    if a is b or (np.array_equal(pa, pb) and np.array_equal(ca, cb)):
        # a norm is real; drop the rounding residue in the imaginary part
        return complex(value.real, 0.0)
    return value


def _wedge_rule(order: int, L: float):
    xi, wi = np.polynomial.legendre.leggauss(order)
    outer = 0.5 * L * (xi + 1.0)
    w_outer = 0.5 * L * wi
    inner = 0.5 * (xi[None, :] + 1.0) * outer[:, None]
    weights = (w_outer[:, None] * 0.5 * outer[:, None]) * wi[None, :]
    lo = inner.ravel()
    hi = np.repeat(outer, order)
    return lo, hi, weights.ravel()


def _quadrature(a, b, order):
    lo, hi, w = _wedge_rule(order, a.cfg.L)
    total = 0j
    # the two wedges separately; evaluate applies the bosonic extension
    for x1, x2 in ((lo, hi), (hi, lo)):
        total += np.sum(w * np.conj(evaluate(a, x1, x2)) * evaluate(b, x1, x2))
    return complex(total)


def inner_product_quadrature(a: Wavefunction, b: Wavefunction, order: int = 64,
                             rtol: float = QUADRATURE_RTOL, return_error: bool = False):
    """Gauss-Legendre estimate of ``<a|b>``, checked by doubling the order.

    Each wedge ``x1 < x2`` and ``x1 > x2`` is mapped to a square by collapsing
    the inner coordinate, so the derivative kink on the diagonal never falls
    inside a cell.
    """
    if order < 8:
        raise InvalidParameterError("quadrature order must be >= 8")
    if a.cfg.L != b.cfg.L:
        raise ConfigurationError("states live on rings of different length")
    coarse = _quadrature(a, b, order)
    fine = _quadrature(a, b, 2 * order)
    scale = math.sqrt(abs(_quadrature(a, a, 2 * order)) * abs(_quadrature(b, b, 2 * order)))
    err = abs(fine - coarse) / max(scale, 1e-300)
    if err > rtol:
        raise OracleUnreliableError(
            f"quadrature changed by {err:.3g} (relative) from order {order} to {2 * order}")
    return (fine, err) if return_error else fine
