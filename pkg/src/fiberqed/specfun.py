"""Cylinder functions of integer order for complex arguments.

Thin, contract-checked layer over scipy.special (AMOS).  The transverse
wavenumbers k_rho = sqrt(k^2 n^2 - beta^2) handled here are either real
(propagating) or close to the positive imaginary axis (evanescent), so only
the closed upper half plane is supported.  AMOS evaluates H^(1) through the
modified-Bessel route internally, which avoids the J + iY cancellation that
would otherwise ruin evanescent arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .errors import DomainError, RangeError

# Contract floor from the module interface; AMOS is good far beyond this.
M_MAX_SUPPORTED = 200


def _check_order(m):
    if abs(int(m)) > M_MAX_SUPPORTED:
        raise DomainError(f"order |m| = {abs(m)} exceeds supported maximum {M_MAX_SUPPORTED}")


def bessel_j(m: int, z: complex) -> complex:
    """J_m(z) for integer m and finite complex z."""
    _check_order(m)
    z = complex(z)
    if not np.isfinite(z):
        raise DomainError("bessel_j requires finite argument")
    val = complex(sp.jv(m, z))
    if not np.isfinite(val):
        raise RangeError(f"J_{m}({z}) overflowed")
    return val


def hankel1(m: int, z: complex) -> complex:
    """H_m^(1)(z) for integer m; z != 0 in the closed upper half plane."""
    _check_order(m)
    z = complex(z)
    if z == 0:
        raise DomainError("hankel1 is singular at z = 0")
    if z.imag < -1e-12 * abs(z):
        raise DomainError("hankel1 restricted to Im z >= 0 (retarded fields)")
    val = complex(sp.hankel1(m, z))
    if not np.isfinite(val):
        raise RangeError(f"H^(1)_{m}({z}) overflowed")
    return val


@dataclass(frozen=True)
class CylFunValue:
    """J_m, H_m^(1) and first derivatives at one complex argument."""

    m: int
    J: complex
    Jp: complex
    H1: complex
    H1p: complex

    def wronskian(self, z: complex) -> complex:
        """J_m H'_m - J'_m H_m; equals 2i/(pi z) identically."""
        return self.J * self.H1p - self.Jp * self.H1


def derivative_pair(m: int, z: complex) -> CylFunValue:
    """Values and derivatives via the recurrence f'_m = (f_{m-1} - f_{m+1})/2."""
    _check_order(m)
    z = complex(z)
    if z == 0:
        raise DomainError("derivative_pair is singular at z = 0")
    ms = np.array([m - 1, m, m + 1])
    j = sp.jv(ms, z)
    h = sp.hankel1(ms, z)
    if not (np.all(np.isfinite(j)) and np.all(np.isfinite(h))):
        raise RangeError(f"cylinder functions at order {m}, z = {z} overflowed")
    return CylFunValue(
        m=m,
        J=complex(j[1]),
        Jp=complex(0.5 * (j[0] - j[2])),
        H1=complex(h[1]),
        H1p=complex(0.5 * (h[0] - h[2])),
    )


def jn_orders(m_max: int, z) -> np.ndarray:
    """J_m(z) for m = -m_max .. m_max (axis 0), broadcast over array z."""
    ms = np.arange(-m_max, m_max + 1)
    z = np.asarray(z, dtype=complex)
    return sp.jv(ms.reshape((-1,) + (1,) * z.ndim), z[None, ...])


def h1_orders(m_max: int, z) -> np.ndarray:
    """H_m^(1)(z) for m = -m_max .. m_max (axis 0), broadcast over array z."""
    ms = np.arange(-m_max, m_max + 1)
    z = np.asarray(z, dtype=complex)
    return sp.hankel1(ms.reshape((-1,) + (1,) * z.ndim), z[None, ...])


def log_derivative_j(ms: np.ndarray, z: complex) -> np.ndarray:
    """J'_m(z)/J_m(z) for an array of orders."""
    return sp.jvp(ms, z) / sp.jv(ms, z)


def log_derivative_h1(ms: np.ndarray, z: complex) -> np.ndarray:
    """H'_m(z)/H_m(z) for an array of orders."""
    return sp.h1vp(ms, z) / sp.hankel1(ms, z)
