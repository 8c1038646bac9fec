"""The free-space tensor anchors every sign and normalization convention."""

import numpy as np
import pytest
from scipy.integrate import quad_vec

from fiberqed.multiscatter import _spectral_vacuum_full
from fiberqed.cylscatter import transverse_wavenumber
from fiberqed.vacuum import SIGMA, vacuum_im_coincident, vacuum_tensor

K = 2 * np.pi / 780.0


def test_coincident_imaginary_part():
    np.testing.assert_allclose(vacuum_im_coincident(K), (K / (6 * np.pi)) * np.eye(3))


def test_symmetric_and_reciprocal():
    r = np.array([120.0, -40.0, 310.0])
    g = vacuum_tensor(K, r)
    gt = vacuum_tensor(K, -r)
    np.testing.assert_allclose(g, g.T, rtol=1e-13)      # symmetric in components
    np.testing.assert_allclose(gt, gt.T, rtol=1e-13)
    np.testing.assert_allclose(g, gt.T, rtol=1e-13)     # reciprocity


def test_z_parity_signs():
    rho = np.array([90.0, -35.0])
    g_plus = vacuum_tensor(K, np.array([rho[0], rho[1], 260.0]))
    g_minus = vacuum_tensor(K, np.array([rho[0], rho[1], -260.0]))
    np.testing.assert_allclose(g_minus, SIGMA * g_plus, rtol=1e-13)


def test_spectral_inversion_reproduces_real_space():
    """Fourier-invert the analytic spectral vacuum rows and compare with the
    closed-form dyadic tensor: validates every sign, the i/4 prefactor, the
    transverse reconstruction relations and the k_rho branch at once."""
    rho = np.array([700.0, -230.0])
    rho_src = np.array([80.0, 190.0])
    dz = 620.0
    sep = np.array([rho[0] - rho_src[0], rho[1] - rho_src[1], dz])
    ref = vacuum_tensor(K, sep)

    def integrand(beta):
        kp = transverse_wavenumber(beta, K)
        g = _spectral_vacuum_full(K, kp, beta, rho, rho_src)
        gm = _spectral_vacuum_full(K, kp, -beta, rho, rho_src)
        return (g * np.exp(1j * beta * dz) + gm * np.exp(-1j * beta * dz)).reshape(-1)

    mind = min(np.hypot(*(rho - rho_src)), dz)
    val1, _ = quad_vec(integrand, 0.0, K * (1 - 1e-10), epsrel=1e-11, epsabs=1e-16)
    val2, _ = quad_vec(integrand, K * (1 + 1e-10), K + 60.0 / mind, epsrel=1e-11,
                       epsabs=1e-16)
    got = (val1 + val2).reshape(3, 3) / (2 * np.pi)
    np.testing.assert_allclose(got, ref, rtol=1e-8, atol=1e-16)


def test_spectral_vacuum_z_parity():
    rho = np.array([100.0, 50.0])
    rho_src = np.array([-40.0, -10.0])
    beta = 0.6 * K
    kp = transverse_wavenumber(beta, K)
    g = _spectral_vacuum_full(K, kp, beta, rho, rho_src)
    gm = _spectral_vacuum_full(K, kp, -beta, rho, rho_src)
    np.testing.assert_allclose(gm, SIGMA * g, rtol=1e-12)
