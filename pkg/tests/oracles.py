"""Independent reference computations used by the tests.

Nothing here reuses the package's quadrature tables, basis functions or
residual code paths.
"""

import math

import numpy as np
from scipy import integrate


def gaussian_energy(c=0.2, beta=0.3, length=16.0):
    """Exact energy of psi = 0, p = exp(-c x^2) on (0, length)."""
    f = lambda x: 0.5 * math.exp(-2 * c * x * x) - 2 * beta / 3 * math.exp(-3 * c * x * x)
    val, _ = integrate.quad(f, 0.0, length, epsabs=1e-14, epsrel=1e-14, limit=200)
    return val


def lagrange_poly(nodes, j):
    """numpy Polynomial that is 1 at nodes[j] and 0 at the other nodes."""
    others = np.delete(np.asarray(nodes, dtype=float), j)
    if len(others) == 0:
        return np.polynomial.Polynomial([1.0])
    poly = np.polynomial.Polynomial.fromroots(others)
    return poly / poly(nodes[j])


def lobatto_nodes_01(q):
    """Gauss-Lobatto nodes on [0, 1] from the roots of (1 - x^2) P_q'(x)."""
    if q == 1:
        return np.array([0.0, 1.0])
    pq = np.polynomial.Legendre.basis(q).deriv().convert(kind=np.polynomial.Polynomial)
    inner = np.sort(pq.roots().real)
    return 0.5 * (np.concatenate(([-1.0], inner, [1.0])) + 1.0)


def gauss_nodes_01(q):
    roots = np.polynomial.Legendre.basis(q).roots()
    return 0.5 * (np.sort(roots.real) + 1.0)


def slab_residual_bruteforce(psi_nodes, p_nodes, tau, params, K, w, npts=40):
    """Slab residuals by high-order quadrature with independently built bases.

    ``psi_nodes``/``p_nodes`` hold the fields at the q+1 Lobatto time nodes.
    Returns arrays (q, n) for the two residual families.
    """
    q = psi_nodes.shape[0] - 1
    tn = lobatto_nodes_01(q)
    gn = gauss_nodes_01(q)
    trial = [lagrange_poly(tn, m) for m in range(q + 1)]
    test = [lagrange_poly(gn, j) for j in range(q)]
    s, ws = np.polynomial.legendre.leggauss(npts)
    s, ws = 0.5 * (s + 1), 0.5 * ws
    R1 = np.zeros((q, psi_nodes.shape[1]))
    R2 = np.zeros_like(R1)
    for sg, wg in zip(s, ws):
        psi = sum(trial[m](sg) * psi_nodes[m] for m in range(q + 1))
        p = sum(trial[m](sg) * p_nodes[m] for m in range(q + 1))
        dpsi = sum(trial[m].deriv()(sg) * psi_nodes[m] for m in range(q + 1)) / tau
        dp = sum(trial[m].deriv()(sg) * p_nodes[m] for m in range(q + 1)) / tau
        c = 1 - 2 * params.beta * p
        for j in range(q):
            phi = test[j](sg) * wg * tau
            R1[j] += phi * (w * c * dp + K @ (params.alpha * dpsi + psi))
            R2[j] += phi * (w * c * dpsi - w * c * p)
    return R1, R2


def fd_jacobian(fun, x, eps=1e-6):
    """Central finite-difference Jacobian of a vector function."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        cols.append((fun(x + e) - fun(x - e)) / (2 * eps))
    return np.array(cols).T


def neumann_wave_series(p0, length, x, t, modes=200):
    """p(x, t) of p_tt = p_xx with p_x = 0 at both ends, p(0) = p0, p_t(0) = 0.

    This is the pressure for psi(0) = 0, p(0) = p0 (then p_t = psi_xx = 0).
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for n in range(modes):
        kn = n * math.pi / length
        coef, _ = integrate.quad(lambda s: p0(s) * math.cos(kn * s), 0, length,
                                 epsabs=1e-12, limit=400)
        coef *= (1 if n == 0 else 2) / length
        out += coef * np.cos(kn * x) * math.cos(kn * t)
    return out
