"""Free-space dyadic Green tensor, real-space closed form and spectral rows.

Conventions (fixed for the whole package):
    curl curl G - k^2 n^2 G = I delta(r - r'),   time dependence e^{-i w t},
    G0(R) = (I + grad grad / k^2) e^{ikR} / (4 pi R),
so Im G0_ii(r, r) = k / (6 pi) and the E field of a dipole d at r' is
(k^2/eps0) G(r, r') d.  Lengths in nanometers, G in 1/nm.
"""

from __future__ import annotations

import numpy as np

from .specfun import h1_orders

#: z-parity signs: G_ij(rho, rho', -dz) = SIGMA_ij * G_ij(rho, rho', dz)
SIGMA = np.array([[1, 1, -1], [1, 1, -1], [-1, -1, 1]], dtype=float)


def vacuum_im_coincident(k: float) -> np.ndarray:
    """Im G0(r, r) = k/(6 pi) I, the free-space decay reference."""
    return (k / (6.0 * np.pi)) * np.eye(3)


def vacuum_tensor(k: float, rvec) -> np.ndarray:
    """Closed-form G0(r - r') for a separation vector rvec (nm), |rvec| > 0."""
    rvec = np.asarray(rvec, dtype=float)
    R = float(np.linalg.norm(rvec))
    if R == 0.0:
        raise ZeroDivisionError("vacuum_tensor is singular at coincident points")
    kr = k * R
    rhat = rvec / R
    phase = np.exp(1j * kr) / (4.0 * np.pi * R)
    t_iso = 1.0 + (1j * kr - 1.0) / kr**2
    t_dir = (3.0 - 3j * kr - kr**2) / kr**2
    return phase * (t_iso * np.eye(3) + t_dir * np.outer(rhat, rhat))


def spectral_vacuum_z_rows(k: float, krho: complex, beta: float, rho, rho_src):
    """Spectral-domain z-rows (E_z- and Z0 H_z-type scalars) of the vacuum tensor.

    Returns (Ez_row, Hz_row): each a length-3 array over source orientation
    u = x, y, z, at transverse separation rho - rho_src != 0.  Used by the
    source-term derivation and by tests that invert the vacuum numerically.
    """
    d = np.asarray(rho, float) - np.asarray(rho_src, float)
    P = float(np.hypot(d[0], d[1]))
    if P == 0.0:
        raise ZeroDivisionError("spectral vacuum rows need a transverse separation")
    phi = float(np.arctan2(d[1], d[0]))
    h = h1_orders(2, krho * P)[:, ()]  # orders -2..2 of H(krho P)
    psi = lambda m: h[m + 2] * np.exp(1j * m * phi)
    g = 0.25j * psi(0)
    dxg = 0.25j * 0.5 * krho * (psi(-1) - psi(1))
    dyg = 0.25j * 0.5j * krho * (psi(1) + psi(-1))
    ez = np.array(
        [(1j * beta / k**2) * dxg, (1j * beta / k**2) * dyg, (krho**2 / k**2) * g]
    )
    hz = np.array([-(1.0 / (1j * k)) * dyg, (1.0 / (1j * k)) * dxg, 0.0j])
    return ez, hz
