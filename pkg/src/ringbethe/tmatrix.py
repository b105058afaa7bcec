"""SU(1,1) transfer matrices for a momentum-independent point defect.

A transfer matrix is stored as the pair ``(u, v)`` of the matrix

    [[u,       v      ],
     [conj(v), conj(u)]]

with ``|u|**2 - |v|**2 == 1``.  Plane-wave amplitudes ``(B+, B-)`` on one
side of the defect are carried to ``(A+, A-) = M @ (B+, B-)`` on the other.

The canonical defect is the phase factor ``diag(e^{i alpha}, e^{-i alpha})``
multiplied on the right by the barrier factor
``[[cosh eta, i sinh eta], [-i sinh eta, cosh eta]]``.  The order of the two
factors fixes the orientation of the ring and is part of the public contract.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "DefectParams",
    "TransferMatrix",
    "make_defect",
    "compose",
    "transmission",
    "IDENTITY",
]

# Exact group defects below this are left alone by make_defect.
_SNAP_THRESHOLD = 2.5e-13
# snapped matrices aim at this defect
_SNAP_TARGET = 5e-13
# successive search radii for the dominant u component, in ulps; near the
# real axis at large eta only long moves (still < 1e-12 relative) get there
_SNAP_REACH = (8, 64, 512, 4096)


@dataclass(frozen=True)
class DefectParams:
    """Barrier strength ``eta >= 0`` and transmitted-wave phase ``alpha``."""

    eta: float
    alpha: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and math.isfinite(self.alpha)):
            raise InvalidParameterError(f"non-finite defect parameters {self!r}")
        if self.eta < 0:
            raise InvalidParameterError(f"eta must be non-negative, got {self.eta}")

    def with_alpha(self, alpha: float) -> "DefectParams":
        return DefectParams(self.eta, alpha)


@dataclass(frozen=True)
class TransferMatrix:
    u: complex
    v: complex

    def matrix(self) -> np.ndarray:
        """Return the full 2x2 complex matrix."""
        return np.array(
            [[self.u, self.v], [self.v.conjugate(), self.u.conjugate()]], dtype=complex
        )

    def group_defect(self) -> float:
        """``|u|^2 - |v|^2 - 1`` evaluated exactly on the stored doubles."""
        return float(_exact_defect(self.u.real, self.u.imag, self.v.real, self.v.imag))

    def determinant(self) -> complex:
        return complex(self.u * self.u.conjugate() - self.v * self.v.conjugate())

    def inverse(self) -> "TransferMatrix":
        return TransferMatrix(self.u.conjugate(), -self.v)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return compose(self, other)


IDENTITY = TransferMatrix(1 + 0j, 0j)


def _exact_defect(ur, ui, vr, vi) -> Fraction:
    ur, ui, vr, vi = (Fraction(x) for x in (ur, ui, vr, vi))
    return ur * ur + ui * ui - vr * vr - vi * vi - 1


def _steps(x: float, n: int) -> float:
    if abs(n) <= 4:
        direction = math.inf if n > 0 else -math.inf
        for _ in range(abs(n)):
            x = math.nextafter(x, direction)
        return x
    return x + n * math.ulp(x)


def _snap_to_group(u: complex, v: complex) -> tuple[complex, complex]:
    # Rounding of cosh*cos etc. leaves |u|^2-|v|^2-1 at a few ulp(cosh^2 eta);
    # move the components by whole ulps towards the group.  The dominant u
    # component and one minor component are scanned; the dominant v component
    # and the other minor one are then rounded to cancel what is left.
    d0 = _exact_defect(u.real, u.imag, v.real, v.imag)
    if abs(d0) <= _SNAP_THRESHOLD:
        return u, v
    comps = [u.real, u.imag, v.real, v.imag]
    # first-order change of the defect per ulp step of each component
    grads = [2.0 * s * x * math.ulp(x) for s, x in zip((1, 1, -1, -1), comps)]
    iu = 0 if abs(grads[0]) >= abs(grads[1]) else 1
    iv = 2 if abs(grads[2]) >= abs(grads[3]) else 3
    if grads[iv] == 0.0:
        return u, v
    o1, o2 = 1 - iu, 5 - iv
    good, scored = [], []
    for reach in _SNAP_REACH:
        nu = np.arange(-reach, reach + 1)[:, None]
        n1 = np.arange(-min(reach, 64), min(reach, 64) + 1)[None, :]
        rest = float(d0) + nu * grads[iu] + n1 * grads[o1]
        nv = np.rint(-rest / grads[iv])
        rest = rest + nv * grads[iv]
        n2 = np.clip(np.rint(-rest / grads[o2]), -reach, reach) if grads[o2] else 0 * rest
        approx = np.abs(rest + n2 * grads[o2]).ravel()
        nu, n1 = np.broadcast_arrays(nu, n1)
        ulps = [math.ulp(x) for x in comps]
        move = np.maximum.reduce([np.abs(nu) * ulps[iu], np.abs(n1) * ulps[o1],
                                  np.abs(nv) * ulps[iv], np.abs(n2) * ulps[o2]]).ravel()
        # rank by movement once the linearized defect is comfortably small
        key = np.where(approx <= 0.5 * _SNAP_TARGET, move, np.inf)
        if not np.isfinite(key).any():
            key = approx
        top = np.argsort(key, kind="stable")[:16]
        for flat in top:
            n = [0, 0, 0, 0]
            n[iu], n[o1] = int(nu.flat[flat]), int(n1.flat[flat])
            n[iv], n[o2] = int(nv.flat[flat]), int(n2.flat[flat])
            cand = [_steps(x, k) for x, k in zip(comps, n)]
            move = max(abs(x - y) for x, y in zip(cand, comps))
            scored.append((abs(_exact_defect(*cand)), move, cand))
        good = [c for c in scored if c[0] <= _SNAP_TARGET]
        if good:
            break
    # smallest move among good enough candidates, else smallest defect
    pick = min(good, key=lambda c: c[1]) if good else min(scored, key=lambda c: c[0])
    if pick[0] >= abs(d0):
        return u, v
    best = pick[2]
    return complex(best[0], best[1]), complex(best[2], best[3])


def make_defect(p: DefectParams) -> TransferMatrix:
    """Transfer matrix of the canonical defect ``phase(alpha) @ barrier(eta)``.

    Closed form: ``u = e^{i alpha} cosh(eta)``, ``v = i e^{i alpha} sinh(eta)``.
    """
    if not isinstance(p, DefectParams):
        raise InvalidParameterError(f"expected DefectParams, got {type(p).__name__}")
    ch, sh = math.cosh(p.eta), math.sinh(p.eta)
    ca, sa = math.cos(p.alpha), math.sin(p.alpha)
    u = complex(ch * ca, ch * sa)
    v = complex(-sh * sa, sh * ca)
    if not (math.isfinite(ch) and math.isfinite(sh)):
        raise InvalidParameterError(f"eta={p.eta} overflows the transfer matrix")
    return TransferMatrix(*_snap_to_group(u, v))


def compose(m1: TransferMatrix, m2: TransferMatrix) -> TransferMatrix:
    """Matrix product ``m1 @ m2``, kept in ``(u, v)`` form."""
    u = m1.u * m2.u + m1.v * m2.v.conjugate()
    v = m1.u * m2.v + m1.v * m2.u.conjugate()
    return TransferMatrix(complex(u), complex(v))


def transmission(m: TransferMatrix) -> float:
    """Transmission amplitude modulus ``1/|u|``, equal to ``1/cosh(eta)``."""
    return 1.0 / abs(m.u)
