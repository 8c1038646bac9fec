"""Independent oracles used by the test suite.

Everything here is deliberately written against textbook formulas, not the
package internals, so the checks stay meaningful: a 200-term power series for
Bessel functions (with an mpmath arbitrary-precision twin), the classical
step-index fiber eigenvalue equation, and brute-force variants of identities
used inside the solver.
"""

import math
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.special import hankel1 as sp_h1
from scipy.special import jv as sp_jv
from scipy.special import jvp, kv, kvp


def bessel_j_series(m, z, nterms=200):
    """Power-series J_m(z) in float arithmetic, |m| small, |z| moderate."""
    m = int(m)
    sign = 1.0
    if m < 0:
        sign = (-1.0) ** (-m)
        m = -m
    z = complex(z)
    total = 0j
    for j in range(nterms):
        num = (-1) ** j * (z / 2.0) ** (m + 2 * j)
        den = float(math.factorial(j)) * float(math.factorial(m + j))
        total += num / den
        if abs(num / den) < 1e-30 * max(abs(total), 1e-30) and j > 4:
            break
    return sign * total


def bessel_j_mpmath(m, z, dps=40):
    import mpmath as mp

    mp.mp.dps = dps
    return complex(mp.besselj(int(m), mp.mpc(z)))


def hankel1_mpmath(m, z, dps=40):
    import mpmath as mp

    mp.mp.dps = dps
    return complex(mp.hankel1(int(m), mp.mpc(z)))


def fiber_char_equation(m, beta, k, a, n_in, n_out):
    """Classical step-index eigenvalue equation (zero at guided modes)."""
    u = a * np.sqrt((k * n_in) ** 2 - beta**2)
    w = a * np.sqrt(beta**2 - (k * n_out) ** 2)
    ju, jpu = sp_jv(m, u), jvp(m, u)
    kw, kpw = kv(m, w), kvp(m, w)
    t1 = jpu / (u * ju) + kpw / (w * kw)
    t2 = n_in**2 * jpu / (u * ju) + n_out**2 * kpw / (w * kw)
    return t1 * t2 - m**2 * (1.0 / u**2 + 1.0 / w**2) ** 2 * (beta / k) ** 2


def fiber_char_roots(m, k, a, n_in, n_out, n_scan=8000):
    lo, hi = k * n_out * (1 + 1e-6), k * n_in * (1 - 1e-6)
    bs = np.linspace(lo, hi, n_scan)
    vals = np.array([fiber_char_equation(m, b, k, a, n_in, n_out) for b in bs])
    roots = []
    for i in range(len(bs) - 1):
        if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0:
            roots.append(
                brentq(lambda b: fiber_char_equation(m, b, k, a, n_in, n_out),
                       bs[i], bs[i + 1], xtol=1e-18, rtol=8.9e-16)
            )
    return roots


def graf_translation_lhs_rhs(m_src, krho, c_src, c_dst, point, m_max=40):
    """Both sides of the addition theorem for an outgoing wave about c_src
    re-expanded in regular waves about c_dst (valid near c_dst)."""
    z_src = point - c_src
    lhs = sp_h1(m_src, krho * abs(z_src)) * np.exp(1j * m_src * np.angle(z_src))
    dc = c_dst - c_src
    rho, phi = abs(dc), np.angle(dc)
    z_dst = point - c_dst
    rhs = 0j
    for m in range(-m_max, m_max + 1):
        rhs += (sp_h1(m_src - m, krho * rho) * np.exp(1j * (m_src - m) * phi)
                * sp_jv(m, krho * abs(z_dst)) * np.exp(1j * m * np.angle(z_dst)))
    return lhs, rhs


def source_expansion_lhs_rhs(krho, src, center, point, m_max=40):
    """H_0(krho |point - src|) vs its regular re-expansion about `center`."""
    lhs = sp_h1(0, krho * abs(point - src))
    zs = src - center
    zp = point - center
    rhs = 0j
    for m in range(-m_max, m_max + 1):
        rhs += (sp_h1(m, krho * abs(zs)) * np.exp(-1j * m * np.angle(zs))
                * sp_jv(m, krho * abs(zp)) * np.exp(1j * m * np.angle(zp)))
    return lhs, rhs


def werner_concurrence(p):
    """Analytic concurrence of p |Phi+><Phi+| + (1-p) I/4."""
    return max(0.0, (3.0 * p - 1.0) / 2.0)


def read_table(path):
    """Read a fiberqed CSV (with '#' metadata header) into {column: array}."""
    lines = [l for l in Path(path).read_text().splitlines()
             if l.strip() and not l.startswith("#")]
    names = lines[0].split(",")
    cols = {n: [] for n in names}
    for line in lines[1:]:
        for n, v in zip(names, line.split(",")):
            try:
                cols[n].append(float(v))
            except ValueError:
                cols[n].append(v)
    return {n: (np.asarray(v) if v and isinstance(v[0], float) else v)
            for n, v in cols.items()}
