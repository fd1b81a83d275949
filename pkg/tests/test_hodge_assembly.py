"""Tests for the degree-by-degree Hodge spectrum assembly."""

import math

import mpmath as mp
import numpy as np
import pytest

from hornspec.hodge_assembly import (
    SectionTableExhausted,
    assemble_spectrum,
    circle_section,
    cohomology_rank,
    duality_partner,
    euler_characteristic,
    family_slots,
    harmonic_dim,
    load_section_table,
    save_section_table,
    sphere_section,
)
from hornspec.profile import HornProfile, Perversity, SideCondition
from hornspec.zeta_reg import PoleHit

PROF = HornProfile(kappa=2.0, length=1.0)
PROF_H = HornProfile(kappa=1.5, length=0.8, H_coeffs=(1.0, -2.0 / 3.0))


# ---------------------------------------------------------------------------
# section models and tables
# ---------------------------------------------------------------------------

def test_circle_ladder_and_betti():
    # [TRIVIAL] circumference 2 pi: lambda_n = n^2, multiplicity 2.
    circ = circle_section()
    vals, mults = circ.cex_levels(0, 5)
    assert np.allclose(vals, [1.0, 4.0, 9.0, 16.0, 25.0])
    assert np.all(mults == 2)
    assert (circ.betti(0), circ.betti(1), circ.betti(2)) == (1, 1, 0)
    # no coexact 1-forms on a circle
    v1, _ = circ.cex_levels(1, 5)
    assert len(v1) == 0


def test_sphere_ladder_and_betti():
    # [TRIVIAL] unit 2-sphere: lambda_l = l(l+1), multiplicity 2l+1, shared
    # by the coexact 0- and 1-form ladders.
    sph = sphere_section()
    for q in (0, 1):
        vals, mults = sph.cex_levels(q, 4)
        assert np.allclose(vals, [2.0, 6.0, 12.0, 20.0])
        assert np.all(mults == [3, 5, 7, 9])
    assert (sph.betti(0), sph.betti(1), sph.betti(2)) == (1, 0, 1)


def test_circle_zeta_against_direct_sum():
    # [DERIVED] Z(s) = 2 sum n^(-s) (c = 1): compare with a brute-force sum
    # at s = 4 and with zeta(0) = -1/2 at s = 0.
    zeta = circle_section().cex_zeta(0)
    brute = 2.0 * sum(n ** -4.0 for n in range(1, 200000))
    assert zeta.value(4.0) == pytest.approx(brute, rel=1e-9)
    assert zeta.value(0.0) == pytest.approx(-1.0, abs=1e-12)
    assert zeta.residue(1.0) == pytest.approx(2.0)
    with pytest.raises(PoleHit):
        zeta.value(1.0)
    # [DERIVED] finite part at the pole: 2 c^s zeta(s) = 2c/(s-1)
    # + 2c (gamma + log c) + O(s-1); here c = 1.
    assert zeta.finite_part(1.0) == pytest.approx(2.0 * float(mp.euler),
                                                  rel=1e-7)


def test_circle_zeta_scaling_in_circumference():
    # [DERIVED] Z_L(s) = (L / 2 pi)^s Z_{2 pi}(s).
    L = 3.7
    c = L / (2.0 * math.pi)
    za = circle_section(L).cex_zeta(0)
    zb = circle_section().cex_zeta(0)
    for s in (-1.5, 0.5, 3.0):
        assert za.value(s) == pytest.approx(c ** s * zb.value(s), rel=1e-10)
    assert za.residue(1.0) == pytest.approx(2.0 * c)


def test_sphere_zeta_continuation():
    # [DERIVED] special values of sum (2l+1) (l(l+1))^(-s/2): the heat-trace
    # constant gives Z(0) = -2/3, the s = -2 value is -1/15 (both recovered
    # independently from the Euler-Maclaurin continuation), and at s = 5 the
    # series converges and can be summed directly.
    zeta = sphere_section().cex_zeta(0)
    assert zeta.value(0.0) == pytest.approx(-2.0 / 3.0, abs=1e-10)
    assert zeta.value(-2.0) == pytest.approx(-1.0 / 15.0, abs=1e-10)
    ll = np.arange(1, 400000, dtype=float)
    brute = float(np.sum((2 * ll + 1) * (ll * (ll + 1)) ** -2.5))
    assert zeta.value(5.0) == pytest.approx(brute, rel=1e-10)
    assert zeta.residue(2.0) == pytest.approx(2.0)
    with pytest.raises(PoleHit):
        zeta.value(2.0)
    assert math.isfinite(zeta.finite_part(2.0))


def test_section_table_round_trip(tmp_path):
    # [TRIVIAL] save/load preserves dimensions, Betti numbers and ladders;
    # the loaded (finite) table refuses requests past its depth.
    path = str(tmp_path / "sphere.table")
    save_section_table(sphere_section(), path, n_levels=12)
    loaded = load_section_table(path)
    assert loaded.dim == 2
    assert tuple(loaded.harmonic) == (1, 0, 1)
    want_v, want_m = sphere_section().cex_levels(1, 12)
    got_v, got_m = loaded.cex_levels(1, 12)
    assert np.allclose(got_v, want_v, rtol=1e-11)
    assert np.all(got_m == want_m)
    with pytest.raises(SectionTableExhausted):
        loaded.cex_levels(0, 13)


# ---------------------------------------------------------------------------
# assembled spectra
# ---------------------------------------------------------------------------

def merged(profile, section, q, bc, perversity=None, count=16):
    seq = assemble_spectrum(profile, section, q, bc, perversity, count=count)
    return np.repeat(seq.values, seq.multiplicities.astype(int))


def test_circle_middle_degree_is_union_of_ends():
    # [DERIVED] on a 2-dimensional horn the 1-form spectrum is the disjoint
    # union of the 0-form and 2-form spectra (d and its adjoint intertwine
    # the Laplacians away from the kernel).
    circ = circle_section(length=math.pi)
    e0 = merged(PROF, circ, 0, SideCondition.ABSOLUTE, count=14)
    e2 = merged(PROF, circ, 2, SideCondition.ABSOLUTE, count=14)
    e1 = merged(PROF, circ, 1, SideCondition.ABSOLUTE, count=30)
    cut = min(e0[-1], e2[-1], e1[-1]) * (1.0 - 1e-9)
    want = np.sort(np.concatenate([e0, e2]))
    want = want[want <= cut]
    got = e1[e1 <= cut]
    assert len(got) == len(want)
    assert np.allclose(got, want, rtol=1e-6)


@pytest.mark.parametrize("q", [0, 1, 2])
def test_circle_duality_pairing(q):
    # [DERIVED] the Hodge star exchanges the relative spectrum in degree q
    # with the absolute spectrum in degree m + 1 - q.
    circ = circle_section(length=math.pi)
    qd, pd, bcd = duality_partner(1, q, None, SideCondition.RELATIVE)
    assert bcd is SideCondition.ABSOLUTE and pd is None
    rel = merged(PROF, circ, q, SideCondition.RELATIVE, count=14)
    ab = merged(PROF, circ, qd, SideCondition.ABSOLUTE, count=14)
    n = min(len(rel), len(ab))
    assert np.allclose(rel[:n], ab[:n], rtol=1e-8)


def test_sphere_duality_pairing_swaps_perversity():
    # [DERIVED] same pairing on a 3-dimensional horn, where the perversity
    # is exchanged as well.
    sph = sphere_section()
    qd, pd, bcd = duality_partner(2, 1, Perversity.LOWER_MIDDLE,
                                  SideCondition.RELATIVE)
    assert (qd, pd, bcd) == (2, Perversity.UPPER_MIDDLE,
                             SideCondition.ABSOLUTE)
    rel = merged(PROF, sph, 1, SideCondition.RELATIVE,
                 Perversity.LOWER_MIDDLE, count=12)
    ab = merged(PROF, sph, 2, SideCondition.ABSOLUTE,
                Perversity.UPPER_MIDDLE, count=12)
    n = min(len(rel), len(ab))
    assert np.allclose(rel[:n], ab[:n], rtol=1e-8)


def test_assembled_count_and_order():
    # [TRIVIAL] the assembly returns at least the requested number of
    # eigenvalues (with multiplicity), sorted increasing, all positive.
    seq = assemble_spectrum(PROF, sphere_section(), 1,
                            SideCondition.ABSOLUTE,
                            Perversity.LOWER_MIDDLE, count=18)
    assert seq.expanded_count >= 18
    assert np.all(seq.values > 0)
    assert np.all(np.diff(seq.values) >= 0)
    assert seq.tail_model is not None


def test_slot_table_needs_perversity_for_even_section():
    # [TRIVIAL]
    with pytest.raises(ValueError):
        family_slots(PROF, sphere_section(), 1, SideCondition.ABSOLUTE)
    with pytest.raises(ValueError):
        harmonic_dim(PROF, sphere_section(), 1, SideCondition.ABSOLUTE)


# ---------------------------------------------------------------------------
# zero modes versus topology
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("profile", [PROF, PROF_H])
@pytest.mark.parametrize("bc", [SideCondition.ABSOLUTE,
                                SideCondition.RELATIVE])
def test_circle_harmonic_dims_match_cohomology(profile, bc):
    # [DERIVED] the numerically counted zero modes realize the cohomology
    # table in every degree.
    circ = circle_section(length=math.pi)
    for q in range(0, 3):
        assert harmonic_dim(profile, circ, q, bc) == \
            cohomology_rank(circ, q, bc)


@pytest.mark.parametrize("profile", [PROF, PROF_H])
@pytest.mark.parametrize("perv", [Perversity.LOWER_MIDDLE,
                                  Perversity.UPPER_MIDDLE])
@pytest.mark.parametrize("bc", [SideCondition.ABSOLUTE,
                                SideCondition.RELATIVE])
def test_sphere_harmonic_dims_match_cohomology(profile, perv, bc):
    # [DERIVED] same comparison for the 3-dimensional horn, where the two
    # perversities give different middle-degree answers.
    sph = sphere_section()
    for q in range(0, 4):
        assert harmonic_dim(profile, sph, q, bc, perv) == \
            cohomology_rank(sph, q, bc, perv)


def test_cohomology_tables_explicitly():
    # [DERIVED] the full rank tables for both model sections.
    circ, sph = circle_section(), sphere_section()
    A, R = SideCondition.ABSOLUTE, SideCondition.RELATIVE
    LM, UM = Perversity.LOWER_MIDDLE, Perversity.UPPER_MIDDLE
    assert [cohomology_rank(circ, q, A) for q in range(3)] == [1, 0, 0]
    assert [cohomology_rank(circ, q, R) for q in range(3)] == [0, 0, 1]
    assert [cohomology_rank(sph, q, A, LM) for q in range(4)] == [1, 0, 0, 0]
    assert [cohomology_rank(sph, q, A, UM) for q in range(4)] == [1, 0, 0, 0]
    assert [cohomology_rank(sph, q, R, LM) for q in range(4)] == [0, 0, 0, 1]
    assert [cohomology_rank(sph, q, R, UM) for q in range(4)] == [0, 0, 0, 1]


def test_euler_characteristics():
    # [TRIVIAL] alternating sums of the tables above.
    circ, sph = circle_section(), sphere_section()
    A, R = SideCondition.ABSOLUTE, SideCondition.RELATIVE
    assert euler_characteristic(circ, A) == 1
    assert euler_characteristic(circ, R) == 1
    for perv in (Perversity.LOWER_MIDDLE, Perversity.UPPER_MIDDLE):
        assert euler_characteristic(sph, A, perv) == 1
        assert euler_characteristic(sph, R, perv) == -1
