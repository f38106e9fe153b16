"""Reference calculations that share no code path with the package."""

from __future__ import annotations

import itertools
import math

import mpmath
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh


def exe_dvr_lowest(coupling_meV, hbar_omega_meV, k=1, n_grid=64, half_width=10.0):
    """Lowest eigenvalues of the single-mode E x e problem on a real-space grid.

    ``H = hbar_omega [-(d2/dx2 + d2/dy2)/2 + (x^2 + y^2)/2] + F (sz x + sx y)``
    discretised with a Colbert-Miller sinc DVR; no ladder operators involved.
    """
    x = np.linspace(-half_width, half_width, n_grid)
    dx = x[1] - x[0]
    i = np.arange(n_grid)
    diff = i[:, None] - i[None, :]
    with np.errstate(divide="ignore"):
        T = np.where(diff == 0, math.pi**2 / 3.0, 2.0 * (-1.0) ** diff / np.where(diff == 0, 1, diff) ** 2)
    T = T / (2.0 * dx**2)
    eye = sp.identity(n_grid)
    kin = sp.kron(sp.csr_matrix(T), eye) + sp.kron(eye, sp.csr_matrix(T))
    X = sp.kron(sp.diags(x), eye)
    Y = sp.kron(eye, sp.diags(x))
    pot = 0.5 * (X @ X + Y @ Y)
    h_vib = hbar_omega_meV * (kin + pot)
    sz = sp.csr_matrix(np.diag([1.0, -1.0]))
    sx = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    H = sp.kron(sp.identity(2), h_vib) + coupling_meV * (sp.kron(sz, X) + sp.kron(sx, Y))
    vals = eigsh(H.tocsr(), k=k, which="SA", tol=1e-14)[0]
    return np.sort(vals)


def poisson_sticks_bruteforce(modes, n_cut=30):
    """All occupation vectors up to ``n_cut`` quanta per mode: (offset_meV, weight)."""
    ranges = [range(n_cut + 1)] * len(modes)
    offs, ws = [], []
    for occ in itertools.product(*ranges):
        w = 1.0
        off = 0.0
        for n, (om, s) in zip(occ, modes):
            w *= math.exp(-s) * s**n / math.factorial(n)
            off += n * om
        offs.append(off)
        ws.append(w)
    return np.array(offs), np.array(ws)


def radiative_rate_closed_form(f, e_eV, n_d, eta=1.0):
    """``eta n_D e^2 E^2 f / (2 pi eps0 m_e c^3 hbar^2)`` with literal CODATA 2018 numbers."""
    mpmath.mp.dps = 30
    e = mpmath.mpf("1.602176634e-19")
    hbar = mpmath.mpf("6.62607015e-34") / (2 * mpmath.pi)
    eps0 = mpmath.mpf("8.8541878128e-12")
    me = mpmath.mpf("9.1093837015e-31")
    c = mpmath.mpf("299792458")
    E = mpmath.mpf(e_eV) * e
    return float(eta * n_d * e**2 * E**2 * f / (2 * mpmath.pi * eps0 * me * c**3 * hbar**2))
