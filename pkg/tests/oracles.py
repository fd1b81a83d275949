"""Independent numerical oracles used by the test suite.

Nothing in here calls back into the shooting machinery under test: the
closed forms use scipy.special, and the discretization oracle is a P1
finite-element generalized eigensolver on a geometric mesh.
"""

import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import gamma as sp_gamma, iv, jv

from hornspec.profile import SideCondition
from hornspec.sl_engine import SLProblem, potential


def bessel_f_plus(kappa, two_alpha, length, lam):
    """Closed-form f_+(l, lambda) and f_+'(l, lambda) for H == 1, b = 0.

    With h = x^kappa the normal form is u'' = (C/x^2 - lambda) u, solved by
    u_+ = Gamma(nu+1) (z/2)^(-nu) sqrt(x) J_nu(z x), z = sqrt(lambda),
    normalized so u_+ ~ x^(nu + 1/2); f = h^(alpha - 1/2) u.
    """
    a = two_alpha / 2.0
    nu = abs(kappa * (a - 0.5) + 0.5)
    l = length

    def u_and_up(x):
        if lam > 0:
            z = math.sqrt(lam)
            norm = sp_gamma(nu + 1.0) * (z / 2.0) ** (-nu)
            u = norm * math.sqrt(x) * jv(nu, z * x)
            # d/dx [sqrt(x) J_nu(zx)] = J_nu/(2 sqrt x) + z sqrt(x) J_nu'
            jp = 0.5 * (jv(nu - 1.0, z * x) - jv(nu + 1.0, z * x))
            up = norm * (jv(nu, z * x) / (2.0 * math.sqrt(x))
                         + z * math.sqrt(x) * jp)
        elif lam < 0:
            s = math.sqrt(-lam)
            norm = sp_gamma(nu + 1.0) * (s / 2.0) ** (-nu)
            u = norm * math.sqrt(x) * iv(nu, s * x)
            ip = 0.5 * (iv(nu - 1.0, s * x) + iv(nu + 1.0, s * x))
            up = norm * (iv(nu, s * x) / (2.0 * math.sqrt(x))
                         + s * math.sqrt(x) * ip)
        else:
            u = x ** (nu + 0.5)
            up = (nu + 0.5) * x ** (nu - 0.5)
        return u, up

    u, up = u_and_up(l)
    hpow = l ** (kappa * (a - 0.5))
    hratio = kappa / l  # h'/h for H == 1
    f = hpow * u
    fp = hpow * (up + (a - 0.5) * kappa / l * u)
    return f, fp


def bessel_eigenvalues(kappa, two_alpha, length, count, bc):
    """Eigenvalues for H == 1, b = 0: zeros of J_nu (value bc) or of the
    derivative combination (derivative bc), found by dense scan + brentq."""
    a = two_alpha / 2.0
    nu = abs(kappa * (a - 0.5) + 0.5)
    l = length

    if bc is SideCondition.RELATIVE:
        fun = lambda z: jv(nu, z * l)
    else:
        # f' = hpow [u' + (a-1/2)(kappa/l) u]; drop positive prefactors
        def fun(z):
            jp = 0.5 * (jv(nu - 1.0, z * l) - jv(nu + 1.0, z * l))
            u = jv(nu, z * l)
            up = u / (2.0 * l) + z * jp
            return up + (a - 0.5) * kappa / l * u

    zs = []
    z = 1e-6
    dz = math.pi / (8.0 * l)
    fprev = fun(z)
    while len(zs) < count:
        z2 = z + dz
        fnew = fun(z2)
        if np.sign(fnew) != np.sign(fprev):
            zs.append(brentq(fun, z, z2, xtol=1e-14, rtol=1e-14))
        z, fprev = z2, fnew
    return np.array(zs) ** 2


def fem_eigenvalues(problem: SLProblem, count, npts=12000, xc=None):
    """P1 finite-element oracle for the normal form u'' = (r - lambda) u.

    Dirichlet at a deep interior cutoff xc (valid for recessive behavior that
    decays faster than any power), value or Robin condition at l depending on
    the problem's boundary condition.  Geometric mesh, lumped mass.
    """
    prof = problem.profile
    l = prof.length
    if xc is None:
        if problem.b > 0:
            xc = l * 1e-3
            while problem.b / float(prof.h_eval(xc)[0]) ** 2 < 1e7:
                xc *= 0.7
        else:
            xc = 1e-6 * l
    x = xc * (l / xc) ** np.linspace(0.0, 1.0, npts)
    r = potential(problem, x)
    hseg = np.diff(x)
    # interior nodes 1..n-2 always; last node kept for the Robin condition
    robin = problem.bc_at_l is SideCondition.ABSOLUTE
    idx = np.arange(1, npts - (0 if robin else 1))
    mass = np.empty(npts)
    mass[1:-1] = 0.5 * (hseg[:-1] + hseg[1:])
    mass[0] = 0.5 * hseg[0]
    mass[-1] = 0.5 * hseg[-1]
    diag = np.empty(npts)
    diag[1:-1] = 1.0 / hseg[:-1] + 1.0 / hseg[1:]
    diag[-1] = 1.0 / hseg[-1]
    off_full = -1.0 / hseg
    if robin:
        h_l, h1_l, _ = prof.h_eval(l)
        c_rob = -(problem.alpha - 0.5) * h1_l / h_l
        diag[-1] -= c_rob
    d = (diag[idx] + r[idx] * mass[idx]) / mass[idx]
    e = off_full[idx[:-1] + 0] / np.sqrt(mass[idx[:-1]] * mass[idx[1:]])
    vals = eigh_tridiagonal(d, e, select="i",
                            select_range=(0, count - 1))[0]
    return vals


def ladder_zeta_values(vals, depth: int = 6, k0: int = 20,
                       fit_frac: float = 20.0):
    """zeta(0) and -zeta'(0) of a positive sequence with Weyl-type growth
    a_k ~ b^2 k^2 (1 + half-integer corrections), by analytic continuation.

    Fits log a_k - 2 log k against {1, k^(-1/2), ..., k^(-depth/2)} on the
    upper part of the data, then continues the model sum through Hurwitz
    zeta values: with log a_k = c0 + 2 log k + sum_j g_j k^(-j/2) + rho_k,

        zeta(0)  = -1/2 - g_2/2,
        zeta'(0) = -sum_{k<k0} log a_k - c0 (zeta_H(0,k0) - g_2/2)
                   + 2 zeta_H'(0,k0) - sum_{j!=2} g_j zeta_H(j/2, k0)
                   + g_2 psi(k0) + g_1^2/4 - sum_{k>=k0} rho_k,

    where the j = 2 ladder entry hits the pole of zeta_H(2s+1, k0) and
    leaves the digamma finite part, and the square of the j = 1 entry does
    the same at second order.  Returns (minus_zeta_prime, zeta0, err) with
    err covering the unmodelled tail of rho beyond the stored data.
    """
    import mpmath

    a = np.asarray(vals, dtype=float)
    K = len(a)
    k = np.arange(1, K + 1, dtype=float)
    y = np.log(a) - 2.0 * np.log(k)
    lo = int(K / fit_frac)
    kf, yf = k[lo:], y[lo:]
    cols = [np.ones_like(kf)] + [kf ** (-j / 2.0)
                                 for j in range(1, depth + 1)]
    M = np.stack(cols, axis=1)
    w = np.max(np.abs(M), axis=0)
    coef, *_ = np.linalg.lstsq(M / w, yf, rcond=None)
    coef = coef / w
    c0, g = float(coef[0]), coef[1:]
    model = c0 + sum(gj * k ** (-(j + 1) / 2.0) for j, gj in enumerate(g))
    rho = y - model
    # tail of rho beyond the stored eigenvalues: one power deeper than the
    # fitted ladder, pinned at the last stored point
    q = (depth + 1) / 2.0
    tail = abs(rho[-1]) * K / (q - 1.0)
    g1 = g[0]
    g2 = g[1] if depth >= 2 else 0.0
    zh = lambda s: float(mpmath.zeta(s, k0))
    zh_prime0 = float(mpmath.loggamma(k0) - 0.5 * mpmath.log(2 * mpmath.pi))
    F0 = (0.5 - k0) - 0.5 * g2
    Fp0 = (-c0 * F0 + 2.0 * zh_prime0
           - sum(float(gj) * zh((j + 1) / 2.0)
                 for j, gj in enumerate(g) if j + 1 != 2)
           + g2 * float(mpmath.digamma(k0)) + 0.25 * g1 * g1
           - float(np.sum(rho[k0 - 1:])))
    zeta_prime0 = -float(np.sum(np.log(a[:k0 - 1]))) + Fp0
    return -zeta_prime0, -0.5 - 0.5 * g2, tail
