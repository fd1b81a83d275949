"""Zeta-regularized determinants of simple spectral sequences.

A sequence S = {m_n : a_n} of positive numbers with multiplicities and finite
exponent of convergence (order <= 1/2, genus 0 here) has

    log Gamma(-lambda, S) = - sum_n m_n log(1 + (-lambda)/a_n),
    log det_zeta S = -zeta'(0, S) = Rz_{lambda -> -infty} log Gamma(-lambda, S),

where Rz extracts the constant coefficient of the large-|lambda| asymptotic
expansion.  This module provides the product representation with controlled
tails, the Rz fit on a geometric grid, and an independent heat-kernel route
to -zeta'(0) through the Mellin transform of the theta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import erfc

EULER_GAMMA = float(np.euler_gamma)


class PoleHit(ArithmeticError):
    """Raised when an evaluation point collides with the sequence."""


class IllConditioned(RuntimeError):
    """Raised when an asymptotic fit is numerically rank-deficient."""


@dataclass
class TailModel:
    """Index growth model a_k ~ A (k + delta)^p + c for the expanded index k."""

    A: float
    p: float
    delta: float = 0.0
    c: float = 0.0

    def __call__(self, k):
        return self.A * (k + self.delta) ** self.p + self.c


@dataclass
class SpectralSequence:
    """Positive sequence with multiplicities, sorted ascending."""

    values: np.ndarray
    multiplicities: np.ndarray | None = None
    genus: int = 0
    order_hint: float = 0.5
    tail_model: TailModel | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.multiplicities is None:
            m = np.ones(len(v))
        else:
            m = np.asarray(self.multiplicities, dtype=float)
        order = np.argsort(v)
        v, m = v[order], m[order]
        if len(v) and v[0] <= 0.0:
            raise ValueError("sequence must be strictly positive")
        self.values = v
        self.multiplicities = m

    @property
    def expanded_count(self) -> float:
        return float(np.sum(self.multiplicities))

    def union(self, other: "SpectralSequence") -> "SpectralSequence":
        return SpectralSequence(
            np.concatenate([self.values, other.values]),
            np.concatenate([self.multiplicities, other.multiplicities]))

    def scaled(self, c: float) -> "SpectralSequence":
        return SpectralSequence(c * self.values, self.multiplicities.copy(),
                                self.genus, self.order_hint,
                                TailModel(c * self.tail_model.A,
                                          self.tail_model.p,
                                          self.tail_model.delta,
                                          c * self.tail_model.c)
                                if self.tail_model else None)

    def fit_tail(self, p: float = 2.0) -> TailModel:
        """Fit a_k ~ A (k + delta)^p + c on the last quartile of the expanded
        sequence (robust to the first eigenvalues being far off the model)."""
        kk = np.repeat(np.arange(1, len(self.values) + 1),
                       self.multiplicities.astype(int))
        aa = np.repeat(self.values, self.multiplicities.astype(int))
        # expanded index
        kk = np.arange(1, len(aa) + 1)
        n0 = (3 * len(aa)) // 4
        k_fit, a_fit = kk[n0:], aa[n0:]
        root = a_fit ** (1.0 / p)
        coef = np.polyfit(k_fit, root, 1)
        A = coef[0] ** p
        delta = coef[1] / coef[0]
        c = float(np.mean(a_fit - A * (k_fit + delta) ** p))
        tm = TailModel(A=A, p=p, delta=delta, c=c)
        self.tail_model = tm
        return tm


def seq_from_family(family, multiplicity: float | None = None,
                    fit_p: float = 2.0) -> SpectralSequence:
    """Build a SpectralSequence from an EigenvalueFamily, fitting the tail."""
    mult = multiplicity if multiplicity is not None else family.multiplicity
    seq = SpectralSequence(family.values.copy(),
                           mult * np.ones(len(family.values)))
    seq.fit_tail(p=fit_p)
    return seq


def log_gamma(seq: SpectralSequence, neg_lams, tail_rel_tol: float = 1e-8):
    """log Gamma(-lambda, S) on the negative axis, genus-0 product with tail.

    The stored part is summed exactly (fsum); the part beyond the stored
    sequence uses the tail model via a midpoint Euler-Maclaurin integral,
    with the first-derivative correction as accuracy certificate.
    """
    neg_lams = np.atleast_1d(np.asarray(neg_lams, dtype=float))
    if np.any(neg_lams >= 0.0):
        raise ValueError("log_gamma expects lambda < 0")
    out = np.empty(len(neg_lams))
    K = seq.expanded_count
    for i, lam in enumerate(neg_lams):
        Lam = -lam
        if np.any(np.isclose(seq.values, -lam, rtol=1e-14)):
            raise PoleHit(f"lambda = {lam} hits the sequence")
        main = math.fsum(float(m) * math.log1p(Lam / a)
                         for a, m in zip(seq.values, seq.multiplicities))
        tail = 0.0
        if seq.tail_model is not None:
            tm = seq.tail_model
            f = lambda k: np.log1p(Lam / tm(k))
            tail, err = quad(f, K + 0.5, np.inf,
                             epsabs=1e-13, epsrel=1e-11, limit=400)
            # midpoint Euler-Maclaurin boundary correction +f'(K+1/2)/24
            dk = 1e-4 * K
            fp = (f(K + 0.5 + dk) - f(K + 0.5 - dk)) / (2.0 * dk)
            corr = fp / 24.0
            tail += corr
            if abs(corr) > tail_rel_tol * (abs(main) + abs(tail)) + 1e-13:
                raise PoleHit(
                    f"tail correction {corr:.2e} exceeds tolerance; "
                    "store more eigenvalues or lower |lambda|")
        out[i] = -(main + tail)
    return out


def rz_constant(fun, exponents, lam_lo: float = 1e3, lam_hi: float = 1e7,
                n: int = 12, cond_max: float = 1e12,
                residual_tol: float | None = None):
    """Fit fun(-Lam) ~ sum_e c_e Lam^e (+ c_log log Lam) on a geometric grid
    of Lam in [lam_lo, lam_hi] and return (c_0, coefficients, diagnostics).

    `exponents` is an iterable of floats and/or the string 'log'.  Raises
    IllConditioned when the design matrix is bad or the residual is large.
    """
    Lam = np.geomspace(lam_lo, lam_hi, n)
    vals = np.asarray(fun(-Lam), dtype=float)
    cols = []
    keys = []
    for e in exponents:
        if e == "log":
            cols.append(np.log(Lam))
        else:
            cols.append(Lam ** float(e))
        keys.append(e)
    M = np.stack(cols, axis=1)
    scale = np.max(np.abs(M), axis=0)
    sol, res, rank, sv = np.linalg.lstsq(M / scale, vals, rcond=None)
    coeffs = dict(zip(keys, sol / scale))
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > cond_max or rank < len(keys):
        raise IllConditioned(f"asymptotic fit condition number {cond:.2e}")
    fitted = M @ (sol / scale)
    resid = float(np.max(np.abs(fitted - vals)))
    c0 = float(coeffs.get(0, coeffs.get(0.0, 0.0)))
    tol = residual_tol if residual_tol is not None else 1e-6
    if resid > tol:
        raise IllConditioned(
            f"asymptotic fit residual {resid:.2e} exceeds {tol:.2e}")
    return c0, coeffs, {"residual": resid, "cond": cond}


DEFAULT_EXPONENTS = (0.5, "log", 0.0, -0.5, -1.0, -1.5)


def zeta_det(seq: SpectralSequence, exponents=DEFAULT_EXPONENTS,
             lam_hi: float | None = None) -> float:
    """-zeta'(0, S) via the Rz constant of the product representation."""
    if lam_hi is None:
        lam_hi = min(1e7, 3e-3 * float(seq.values[-1]) ** 1.0)
    # keep the window high enough that exponentially small boundary terms
    # (e^{-2 l sqrt(lam)}) are below the fit accuracy
    lam_lo = 1e-3 * lam_hi
    c0, _, _ = rz_constant(lambda lams: log_gamma(seq, lams),
                           exponents, lam_lo=lam_lo, lam_hi=lam_hi)
    return c0


def zeta_det_sl(problem, exponents=DEFAULT_EXPONENTS,
                lam_lo: float = 1e3, lam_hi: float = 1e7):
    """-zeta'(0) of an SL extension via boundary-value shooting (no product)."""
    from .sl_engine import log_gamma_sl
    c0, coeffs, diag = rz_constant(lambda lams: log_gamma_sl(problem, lams),
                                   exponents, lam_lo=lam_lo, lam_hi=lam_hi)
    return c0, coeffs, diag


def riemann_closed_forms(l: float) -> tuple[float, float]:
    """zeta'(0) of the two regular closed-form families on (0, l):

    (pi k / l)^2 family:        zeta'(0) = -log(2 l)
    ((2k-1) pi / (2l))^2 family: zeta'(0) = -log 2
    """
    return (-math.log(2.0 * l), -math.log(2.0))


# ---------------------------------------------------------------------------
# heat-kernel route
# ---------------------------------------------------------------------------

def theta_of_sequence(seq: SpectralSequence):
    """Return (theta(t) callable, t_min) for the sequence with its tail model.

    theta(t) = sum m e^{-a t} over stored values plus the Euler-Maclaurin
    integral of the tail model (closed form via erfc when p = 2).
    """
    if seq.tail_model is None:
        seq.fit_tail()
    tm = seq.tail_model
    K = seq.expanded_count
    vals = seq.values
    mults = seq.multiplicities

    def theta(t):
        t = float(t)
        main = math.fsum(float(m) * math.exp(-a * t)
                         for a, m in zip(vals, mults) if a * t < 700.0)
        if tm.p == 2.0 and tm.A > 0:
            z = (K + 0.5 + tm.delta) * math.sqrt(tm.A * t)
            tail = math.exp(-tm.c * t) * 0.5 * math.sqrt(math.pi / (tm.A * t)) \
                * float(erfc(z)) if z < 26.0 else 0.0
        else:
            tail, _ = quad(lambda k: math.exp(-tm(k) * t), K + 0.5, np.inf,
                           epsabs=1e-14, epsrel=1e-10, limit=200)
        return main + tail

    t_min = 10.0 / float(vals[-1])
    return theta, t_min


def zeta_prime_zero_from_theta(theta, t_min: float,
                               exponents=(-0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5),
                               fit_hi: float = 0.5, npts: int = 240):
    """-zeta'(0) from a theta-function callable via the Mellin split at t = 1.

    Fits theta(t) ~ sum_j c_j t^{p_j} on [t_lo, fit_hi], then
    zeta'(0) = gamma c_0 + int_0^1 t^{-1}(theta - P) dt + sum_{p != 0} c_p/p
               + int_1^inf t^{-1} theta dt,
    with the unresolved [0, t_lo) part of the first integral estimated from
    the fit residual.  Returns (minus_zeta_prime, zeta_zero, error_estimate).
    """
    t_lo = 3.0 * t_min
    # keep the fit window inside the power-expansion regime: stop where the
    # counting content of theta drops to order one.
    t_unit = fit_hi
    for t in np.geomspace(max(t_lo * 8, 1e-12), fit_hi, 60):
        if theta(t) < 1.0:
            t_unit = t
            break
    T = min(fit_hi, 2.0 * t_unit)
    if t_lo >= T / 4.0:
        raise ValueError("not enough eigenvalues for the heat-kernel window")
    ts = np.geomspace(t_lo, T, npts)
    th = np.array([theta(t) for t in ts])
    M = np.stack([ts ** p for p in exponents], axis=1)
    # 1/t weighting minimizes the error of the t^{-1}-weighted Mellin
    # integrand, which is what propagates into zeta'(0)
    w = 1.0 / ts
    coef, *_ = np.linalg.lstsq(M * w[:, None], th * w, rcond=None)
    cdict = dict(zip(exponents, coef))
    c0 = float(cdict.get(0.0, 0.0))

    def resid(t):
        return theta(t) - sum(c * t ** p for p, c in cdict.items())

    resid_vals = np.abs([resid(t) for t in ts])
    # Mellin split at T: zeta'(0) = gamma c_0 + c_0 log T
    #   + int_0^T t^{-1}(theta - P) + sum_{p != 0} c_p T^p / p
    #   + int_T^inf t^{-1} theta.
    I_mid, _ = quad(lambda t: resid(t) / t, t_lo, T,
                    epsabs=1e-12, epsrel=1e-9, limit=400)
    # unresolved [0, t_lo): the residual there decays with t; its magnitude
    # at t_lo serves as the error estimate (not added to the value).
    err_small = abs(resid(t_lo)) * 2.0
    I_large, _ = quad(lambda t: theta(t) / t, T, np.inf,
                      epsabs=1e-13, epsrel=1e-10, limit=400)
    pole_terms = math.fsum(c * T ** p / p for p, c in cdict.items()
                           if p != 0.0)
    G0 = I_mid + pole_terms + I_large + c0 * math.log(T)
    zeta_prime = EULER_GAMMA * c0 + G0
    return -zeta_prime, c0, err_small + float(np.max(resid_vals)) * 0.1


def zeta_heat_oracle(seq: SpectralSequence,
                     exponents=(-0.5, 0.0, 0.5, 1.0, 1.5)):
    """-zeta'(0, S) through the theta function; independent of the Rz route."""
    if seq.expanded_count < 1000:
        raise ValueError("heat-kernel oracle needs at least 1000 eigenvalues")
    theta, t_min = theta_of_sequence(seq)
    val, z0, err = zeta_prime_zero_from_theta(theta, t_min, exponents)
    return val, z0, err
