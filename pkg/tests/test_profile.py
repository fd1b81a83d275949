import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hornspec.profile import (
    BoundaryFlavor,
    DegreeContext,
    DivergentIntegral,
    HornProfile,
    Perversity,
    SideCondition,
    TipCondition,
    alpha,
    c_of_alpha,
    gamma_q,
    two_alpha,
    warped_integral,
)


def test_alpha_values_are_half_integers():
    # [TRIVIAL] alpha_q = q + (1-m)/2 directly.
    assert two_alpha(1, 0) == 0 and alpha(1, 0) == 0.0
    assert two_alpha(1, 1) == 2 and alpha(1, 1) == 1.0
    assert two_alpha(2, 0) == -1 and alpha(2, 0) == -0.5
    assert two_alpha(2, 1) == 1 and alpha(2, 1) == 0.5
    assert two_alpha(3, 2) == 2


@given(st.integers(1, 12), st.integers(-2, 14))
def test_alpha_ladder_and_duality(m, q):
    # alpha_q - alpha_{q-1} = 1 and alpha_{m-1-q} = -alpha_q, exactly.
    assert two_alpha(m, q) - two_alpha(m, q - 1) == 2
    assert two_alpha(m, m - 1 - q) == -two_alpha(m, q)


@given(st.integers(1, 12), st.integers(-2, 14),
       st.floats(1.01, 8.0, allow_nan=False))
def test_c_alpha_identities(m, q, kappa):
    # c_{-alpha_{q-1}} + c_{alpha_q} = 1 and 2 c_{-alpha} = (-2 alpha - 1) kappa + 1.
    ta_q = two_alpha(m, q)
    ta_qm1 = two_alpha(m, q - 1)
    c_plus = c_of_alpha(kappa, ta_q)
    c_minus = c_of_alpha(kappa, -ta_qm1)
    assert math.isclose(c_plus + c_minus, 1.0, rel_tol=0, abs_tol=1e-12)
    assert math.isclose(2 * c_minus, (-ta_qm1 - 1) * kappa + 1, abs_tol=1e-12)


def test_degree_context_dual():
    ctx = DegreeContext(m=3, q=0)
    assert ctx.two_alpha_q == -2
    assert ctx.dual.q == 2 and ctx.dual.two_alpha_q == 2


def test_profile_validation():
    with pytest.raises(ValueError):
        HornProfile(kappa=1.0, length=1.0)
    with pytest.raises(ValueError):
        HornProfile(kappa=2.0, length=-1.0)
    with pytest.raises(ValueError):
        HornProfile(kappa=2.0, length=1.0, H_coeffs=(2.0,))
    with pytest.raises(ValueError):
        # H(x) = 1 - 2x vanishes inside [0, 1]
        HornProfile(kappa=2.0, length=1.0, H_coeffs=(1.0, -2.0))


def test_h_eval_against_finite_differences():
    # [DERIVED] h', h'' from central differences of h.
    prof = HornProfile(kappa=1.5, length=2.0, H_coeffs=(1.0, 0.25, -0.05))
    xs = np.linspace(0.2, 1.9, 7)
    h, h1, h2 = prof.h_eval(xs)
    eps = 1e-5
    hp, _, _ = prof.h_eval(xs + eps)
    hm, _, _ = prof.h_eval(xs - eps)
    assert np.allclose(h1, (hp - hm) / (2 * eps), rtol=1e-8, atol=1e-8)
    assert np.allclose(h2, (hp - 2 * h + hm) / eps ** 2, rtol=1e-4, atol=1e-4)
    r1, r2 = prof.h_ratios(xs)
    assert np.allclose(r1, h1 / h, rtol=1e-12)
    assert np.allclose(r2, h2 / h, rtol=1e-12)


def test_warped_integral_monomial_closed_form():
    # [DERIVED] For H == 1, int_0^l x^(kappa e) dx = l^(kappa e + 1)/(kappa e + 1).
    prof = HornProfile(kappa=2.0, length=1.5)
    for e in (-0.4, 0.0, 1.0, 3.0):
        ke = prof.kappa * e
        exact = prof.length ** (ke + 1) / (ke + 1)
        assert math.isclose(warped_integral(prof, e), exact, rel_tol=1e-10)


def test_warped_integral_polynomial_oracle():
    # [DERIVED] e = 1 integrates the polynomial x^kappa H(x) exactly.
    prof = HornProfile(kappa=2.0, length=1.0, H_coeffs=(1.0, -2.0 / 3.0))
    exact = 1.0 / 3.0 - (2.0 / 3.0) / 4.0  # int_0^1 (x^2 - 2x^3/3)
    assert math.isclose(warped_integral(prof, 1.0), exact, rel_tol=1e-12)


def test_warped_integral_divergence_flagged():
    prof = HornProfile(kappa=2.0, length=1.0)
    with pytest.raises(DivergentIntegral):
        warped_integral(prof, -0.5)  # kappa*e = -1 exactly
    with pytest.raises(DivergentIntegral):
        warped_integral(prof, -1.0)


def test_gamma_q_circle_example():
    # gamma_0 for m=1, kappa=2, H == 1, l=1 is int_0^1 x^2 dx = 1/3.
    prof = HornProfile(kappa=2.0, length=1.0)
    assert math.isclose(gamma_q(prof, 1, 0), 1.0 / 3.0, rel_tol=1e-12)


@given(st.floats(1.1, 4.0), st.floats(0.3, 2.5), st.floats(-0.3, 1.5))
@settings(max_examples=25, deadline=None)
def test_warped_integral_additive_over_split(kappa, length, e):
    prof = HornProfile(kappa=kappa, length=length)
    mid = 0.4 * length
    whole = warped_integral(prof, e)
    left = warped_integral(prof, e, upper=mid)
    right = warped_integral(prof, e, lower=mid)
    assert math.isclose(whole, left + right, rel_tol=1e-9, abs_tol=1e-12)


def test_enums():
    assert Perversity.LOWER_MIDDLE.complement is Perversity.UPPER_MIDDLE
    assert Perversity.UPPER_MIDDLE.complement is Perversity.LOWER_MIDDLE
    assert SideCondition.ABSOLUTE.angle == math.pi / 2
    assert SideCondition.RELATIVE.angle == 0.0
    assert SideCondition.ABSOLUTE.complement is SideCondition.RELATIVE
    assert TipCondition.PLUS.angle == 0.0
    assert TipCondition.MINUS.angle == math.pi / 2
    fl = BoundaryFlavor(at_l=SideCondition.ABSOLUTE)
    assert fl.at_0 is None
