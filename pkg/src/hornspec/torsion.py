"""Analytic torsion of the finite metric horn.

The torsion zeta function t(s) = sum_q (-1)^q q zeta(s, Delta^(q)) of the
horn with absolute boundary condition at x = l splits into four blocks:

  * t0, t1 -- double sequences (section ladder x radial eigenvalues) of
    coexact origin, handled by the spectral decomposition machinery of
    ``double_zeta``; their derivatives at s = 0 have closed-form regular
    parts plus numerically evaluated singular parts;
  * t2 -- simple sequences attached to harmonic section forms with b = 0
    radial problems, whose determinants are in closed form (value of the
    recessive solution at lambda = 0 and the constant term of its large
    lambda expansion);
  * t3 -- only present in even section dimension, a regular half-integer
    weight family whose zeta function is Riemann's.

This module evaluates each block, assembles log T, the global/boundary
split, and the comparison anomalies against combinatorial torsion.  The
relative boundary condition is obtained through the exact duality
log T_{p,rel} = (-1)^m log T_{p^c,abs}, which holds spectrum-by-spectrum
for the horn families.

Combinatorial quantities (torsion subgroup orders, de Rham determinant
norms, Reidemeister torsion of the section) are user inputs; nothing here
computes simplicial torsion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .profile import (DivergentIntegral, HornProfile, Perversity,
                      SideCondition, gamma_q, two_alpha, warped_integral)
from .hodge_assembly import SectionModel
from .double_zeta import (DoubleSequence, contour_for,
                          extract_uniform_expansion, sdl_assemble)


class MissingCombinatorialInputs(LookupError):
    """A combinatorial-torsion comparison was requested without the
    user-supplied torsion orders / determinant norms it needs."""


class NonPositiveGammaArgument(ArithmeticError):
    """A closed-form Gamma factor was requested at a non-positive
    argument; the formulas assume positivity and refuse to continue."""


# ---------------------------------------------------------------------------
# closed forms for the simple-sequence blocks
# ---------------------------------------------------------------------------

def rz_log_constant(kappa: float, alpha: float) -> float:
    """Constant term of the large-lambda expansion of the logarithm of the
    recessive b = 0 boundary value: log(2^(|c|-1/2) Gamma(1+|c|)/sqrt(pi))
    with c = kappa*(alpha - 1/2) + 1/2."""
    c = abs(kappa * (alpha - 0.5) + 0.5)
    return ((c - 0.5) * math.log(2.0) + math.lgamma(1.0 + c)
            - 0.5 * math.log(math.pi))


def recessive_value_at_zero(profile: HornProfile, alpha: float) -> float:
    """Value at lambda = 0, x = l of the recessive normalized solution of
    the b = 0 problem with weight index alpha.

    For alpha > 0 the solution integrates the weight (h^(1/2-alpha) times
    ((2 alpha - 1) kappa + 1) int_0^l h^(2 alpha - 1)); for alpha <= 0 it
    is the pure power h^(1/2-alpha) itself.
    """
    l = profile.length
    h_l = float(profile.h_eval(l)[0])
    if alpha > 0.0:
        pref = (2.0 * alpha - 1.0) * profile.kappa + 1.0
        return (pref * h_l ** (0.5 - alpha)
                * warped_integral(profile, 2.0 * alpha - 1.0))
    return h_l ** (0.5 - alpha)


def z_prime(profile: HornProfile, alpha: float) -> float:
    """-zeta'(0) contribution slot for one b = 0 harmonic family of weight
    index alpha: z'(0) = -log u(l, 0) + Rz constant."""
    return (-math.log(recessive_value_at_zero(profile, alpha))
            + rz_log_constant(profile.kappa, alpha))


def _alpha(m: int, q: int) -> float:
    return 0.5 * two_alpha(m, q)


def t3_prime(m: int, perversity: Perversity | None, m_har_p: int,
             l: float) -> float:
    """Derivative at s = 0 of the t3 block (regular weight-1/2 family of
    the middle degree); zero in odd section dimension."""
    if m % 2 == 1:
        return 0.0
    if perversity is None:
        raise ValueError("even section dimension needs a perversity")
    p = m // 2
    sign = (-1.0) ** p
    if perversity is Perversity.UPPER_MIDDLE:
        return 0.5 * sign * m_har_p * math.log(2.0)
    return 0.5 * sign * m_har_p * math.log(2.0 * l)


def t2_prime(profile: HornProfile, section: SectionModel) -> float:
    """Derivative at s = 0 of the t2 block (harmonic section forms,
    simple b = 0 radial sequences), in closed form.

    Odd m = 2p-1:  (1/2) sum_{q<p} (-1)^q  r_q log(gamma_q h(l)^(2q-2p+1));
    even m = 2p:   (1/2) sum_{q<p} (-1)^(q+1) r_q
                   log(2^(kappa(1-2 alpha_q)-2)/pi
                       * Gamma(1/2 - kappa(alpha_q-1/2))^2 * gamma_q).
    """
    m = section.dim
    p = (m + 1) // 2
    h_l = float(profile.h_eval(profile.length)[0])
    kap = profile.kappa
    total = 0.0
    for q in range(0, p):
        r_q = section.betti(q)
        if r_q == 0:
            continue
        g_q = gamma_q(profile, m, q)
        a_q = _alpha(m, q)
        if m % 2 == 1:
            total += (0.5 * (-1.0) ** q * r_q
                      * (math.log(g_q) + (2 * q - 2 * p + 1)
                         * math.log(h_l)))
        else:
            garg = 0.5 - kap * (a_q - 0.5)
            if garg <= 0.0:
                raise NonPositiveGammaArgument(
                    f"Gamma argument {garg} at degree {q}")
            total += (0.5 * (-1.0) ** (q + 1) * r_q
                      * ((kap * (1.0 - 2.0 * a_q) - 2.0) * math.log(2.0)
                         - math.log(math.pi) + 2.0 * math.lgamma(garg)
                         + math.log(g_q)))
    return total


def t0_t1_reg(profile: HornProfile, section: SectionModel):
    """Regular parts of the double-sequence blocks, in closed form.

    The ((value-type at -alpha) - (derivative-type at +alpha)) pairing
    collapses to the continued sum of (log u_n - log h(l)) over the
    section ladder, i.e. -Z'(0) - Z(0) log h(l) with Z the section zeta
    function of the coexact degree.  Odd m sums degrees q <= p-2 into t0
    and takes half the q = p-1 term as t1; even m cancels both blocks.
    """
    m = section.dim
    if m % 2 == 0:
        return 0.0, 0.0
    p = (m + 1) // 2
    h_l = float(profile.h_eval(profile.length)[0])

    def pair(q):
        z = section.cex_zeta(q)
        return -z.derivative(0.0) - z.value(0.0) * math.log(h_l)

    t0 = sum((-1.0) ** q * pair(q) for q in range(0, p - 1))
    t1 = (-1.0) ** (p - 1) * 0.5 * pair(p - 1)
    return t0, t1


# ---------------------------------------------------------------------------
# singular parts of the double-sequence blocks
# ---------------------------------------------------------------------------

def _sdl_families(m: int):
    """(weight_sign, condition, coefficient) triples per coexact degree q
    entering the t0 + t1 singular combination.

    t0 carries (1/2)(-1)^q [(Z_- - Zhat_+) + (-1)^(m-1)(Z_+ - Zhat_-)]
    for q up to ceil(m/2)-2 ... [m/2]-1; odd m adds the single t1 pair
    (1/2)(-1)^(p-1)(Z_- - Zhat_+) at q = p-1.
    """
    out = {}
    for q in range(0, m // 2):
        sgn = (-1.0) ** q
        out.setdefault(q, []).extend([
            (-1, SideCondition.RELATIVE, 0.5 * sgn),
            (+1, SideCondition.ABSOLUTE, -0.5 * sgn),
            (+1, SideCondition.RELATIVE, 0.5 * sgn * (-1.0) ** (m - 1)),
            (-1, SideCondition.ABSOLUTE, -0.5 * sgn * (-1.0) ** (m - 1)),
        ])
    if m % 2 == 1:
        p = (m + 1) // 2
        sgn = (-1.0) ** (p - 1)
        out.setdefault(p - 1, []).extend([
            (-1, SideCondition.RELATIVE, 0.5 * sgn),
            (+1, SideCondition.ABSOLUTE, -0.5 * sgn),
        ])
    return out


def singular_parts(profile: HornProfile, section: SectionModel,
                   n_samples=(6, 10, 16, 26, 40), tau_max: float = 12.0,
                   n_inner: int = 36, rtol: float = 1e-9,
                   _cache: dict | None = None):
    """(t0_sing, t1_sing): numerically evaluated singular parts of the
    double-sequence blocks; their sum is the boundary anomaly beyond the
    quarter-Euler-characteristic term and vanishes for h'(l) = 0.

    Weight signs that coincide (alpha_q = 0) are still assembled once per
    (sign, condition) slot; a cache dict may be passed to share assemblies
    across calls (e.g. between the two t blocks or a duality pair).
    """
    m = section.dim
    cache = {} if _cache is None else _cache

    def sing(q, sign, cond):
        ta = sign * two_alpha(m, q)
        key = (q, ta, cond)
        if key not in cache:
            ds = DoubleSequence(profile=profile, section=section, degree=q,
                                signed_two_alpha=ta, condition=cond)
            c = contour_for(ds, tau_max=tau_max)
            ue = extract_uniform_expansion(ds, n_samples, contour=c,
                                           rtol=rtol)
            cache[key] = sdl_assemble(ds, ue, n_inner=n_inner)
        return cache[key].zeta_prime0_sing

    fams = _sdl_families(m)
    t0 = t1 = 0.0
    p = (m + 1) // 2
    for q, terms in fams.items():
        for sign, cond, coef in terms:
            val = coef * sing(q, sign, cond)
            if m % 2 == 1 and q == p - 1:
                t1 += val
            else:
                t0 += val
    return t0, t1


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------

@dataclass
class TorsionComponents:
    t0_reg: float
    t1_reg: float
    t2: float
    t3: float
    t0_sing: float
    t1_sing: float

    @property
    def total(self) -> float:
        return (self.t0_reg + self.t1_reg + self.t2 + self.t3
                + self.t0_sing + self.t1_sing)


@dataclass
class TorsionReport:
    components: TorsionComponents
    gamma_qs: list
    log_T_global: float
    log_T_boundary: float
    log_T_total: float
    anomalies: dict
    combinatorial_inputs_present: bool
    boundary_anomaly_numeric: float = 0.0
    geodesic_boundary: bool = False
    method: str = "direct"
    diagnostics: dict = field(default_factory=dict)


def euler_characteristic_section(section: SectionModel) -> int:
    return sum((-1) ** q * section.betti(q)
               for q in range(0, section.dim + 1))


def a_analy(profile: HornProfile, section: SectionModel) -> float:
    """Analytic comparison anomaly (even section dimension): quarter-Euler
    log 2 plus the alternating Gamma-squared weight sum."""
    m = section.dim
    if m % 2 == 1:
        return 0.25 * euler_characteristic_section(section) * math.log(2.0)
    p = m // 2
    kap = profile.kappa
    total = 0.25 * euler_characteristic_section(section) * math.log(2.0)
    for q in range(0, p):
        r_q = section.betti(q)
        if r_q == 0:
            continue
        a_q = _alpha(m, q)
        garg = 0.5 - kap * (a_q - 0.5)
        if garg <= 0.0:
            raise NonPositiveGammaArgument(
                f"Gamma argument {garg} at degree {q}")
        total += (0.5 * (-1.0) ** (q + 1) * r_q
                  * (kap * (1.0 - 2.0 * a_q) * math.log(2.0)
                     - math.log(math.pi) + 2.0 * math.lgamma(garg)))
    return total


def a_comb(section: SectionModel, perversity: Perversity,
           torsion_orders, de_rham_dets) -> float:
    """Combinatorial comparison anomaly from user inputs: orders of the
    integral torsion subgroups and the de Rham determinant norms
    |det(A_q/n_q)|, alternating-summed up to the perversity's cut."""
    m = section.dim
    if m % 2 == 1:
        return 0.0
    p = m // 2
    top = p if perversity is Perversity.LOWER_MIDDLE else p - 1
    need = top + 1
    if torsion_orders is None or de_rham_dets is None or \
            len(torsion_orders) < need or len(de_rham_dets) < need:
        raise MissingCombinatorialInputs(
            f"need {need} torsion orders and determinant norms")
    return -sum((-1.0) ** q
                * math.log(torsion_orders[q] * abs(de_rham_dets[q]))
                for q in range(0, need))


def torsion_total(profile: HornProfile, section: SectionModel,
                  perversity: Perversity | None = None,
                  bc: SideCondition = SideCondition.ABSOLUTE,
                  combinatorics: dict | None = None,
                  singular: str = "numeric",
                  **sdl_kwargs) -> TorsionReport:
    """Assemble log T and its global/boundary decomposition.

    ``singular`` is "numeric" (run the double-sequence singular
    assemblies) or "assume-geodesic" (assert h'(l) = 0 and take the
    boundary anomaly to vanish; rejected otherwise).  The relative
    boundary condition is evaluated through the exact duality with the
    complementary perversity, flipping the overall sign in odd total
    dimension m+1; the report's ``method`` field records this.
    ``combinatorics`` may carry ``torsion_orders``, ``de_rham_dets`` and
    ``reidemeister_W``; absent inputs downgrade the comparison outputs to
    None instead of failing.
    """
    m = section.dim
    if bc is SideCondition.RELATIVE:
        dual_p = perversity.complement if perversity is not None else None
        rep = torsion_total(profile, section, dual_p,
                            SideCondition.ABSOLUTE, combinatorics,
                            singular, **sdl_kwargs)
        s = (-1.0) ** m
        comps = TorsionComponents(
            *(s * v for v in (rep.components.t0_reg, rep.components.t1_reg,
                              rep.components.t2, rep.components.t3,
                              rep.components.t0_sing,
                              rep.components.t1_sing)))
        return TorsionReport(
            components=comps, gamma_qs=rep.gamma_qs,
            log_T_global=s * rep.log_T_global,
            log_T_boundary=s * rep.log_T_boundary,
            log_T_total=s * rep.log_T_total,
            anomalies=rep.anomalies,
            combinatorial_inputs_present=rep.combinatorial_inputs_present,
            boundary_anomaly_numeric=s * rep.boundary_anomaly_numeric,
            geodesic_boundary=rep.geodesic_boundary,
            method="duality", diagnostics=rep.diagnostics)

    if m % 2 == 0 and perversity is None:
        raise ValueError("even section dimension needs a perversity")
    l = profile.length
    h_l, h1_l, _ = (float(v) for v in profile.h_eval(l))
    geodesic = abs(h1_l) <= 1e-12 * max(1.0, abs(h_l) / l)

    t0r, t1r = t0_t1_reg(profile, section)
    t2 = t2_prime(profile, section)
    p_mid = section.dim // 2
    t3 = t3_prime(m, perversity, section.betti(p_mid) if m % 2 == 0 else 0,
                  l)
    if singular == "assume-geodesic":
        if not geodesic:
            raise ValueError(
                "zero boundary anomaly requested but h'(l) != 0")
        t0s = t1s = 0.0
    elif singular == "numeric":
        t0s, t1s = singular_parts(profile, section, **sdl_kwargs)
    else:
        raise ValueError(f"unknown singular mode {singular!r}")
    comps = TorsionComponents(t0_reg=t0r, t1_reg=t1r, t2=t2, t3=t3,
                              t0_sing=t0s, t1_sing=t1s)

    chi = euler_characteristic_section(section)
    anomaly_numeric = t0s + t1s
    log_T_boundary = 0.25 * chi * math.log(2.0) + \
        (0.0 if geodesic else anomaly_numeric)
    log_T_total = comps.total
    log_T_global = log_T_total - log_T_boundary

    gammas = []
    for q in range(0, (m + 1) // 2):
        try:
            gammas.append(gamma_q(profile, m, q))
        except DivergentIntegral:
            gammas.append(math.inf)

    combo = combinatorics or {}
    present = all(k in combo for k in ("torsion_orders", "de_rham_dets"))
    anomalies = {"A_analy": a_analy(profile, section), "A_comb_p": None}
    if m % 2 == 0 and present:
        anomalies["A_comb_p"] = a_comb(section, perversity,
                                       combo.get("torsion_orders"),
                                       combo.get("de_rham_dets"))
    return TorsionReport(
        components=comps, gamma_qs=gammas,
        log_T_global=log_T_global, log_T_boundary=log_T_boundary,
        log_T_total=log_T_total, anomalies=anomalies,
        combinatorial_inputs_present=present,
        boundary_anomaly_numeric=anomaly_numeric,
        geodesic_boundary=geodesic, method="direct")
