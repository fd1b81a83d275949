"""Hodge-Laplacian spectra on a finite metric horn, degree by degree.

The Laplacian on q-forms of the (m+1)-dimensional horn decomposes over the
eigenforms of the m-dimensional cross-section W into scalar radial problems.
This module holds the bookkeeping for that decomposition:

  * ``SectionModel`` packages what the assembly needs from W: harmonic form
    dimensions per degree and the coexact eigenvalue ladders (value,
    multiplicity).  Builders for the round circle and the round 2-sphere are
    provided, plus a plain-text table format for externally supplied sections.
  * ``family_slots`` lists, for one form degree q and one boundary condition
    at x = l, the radial Sturm-Liouville families whose positive eigenvalues
    together make up the positive spectrum of the Hodge Laplacian.
  * ``assemble_spectrum`` merges the families into one ``SpectralSequence``,
    adaptively deciding how many section levels and how many radial
    eigenvalues per family are needed.
  * ``harmonic_dim`` counts zero modes numerically (kernel of each radial
    extension times its multiplicity) and ``cohomology_rank`` gives the
    topological prediction, so the two can be compared independently.
  * ``SectionZeta`` provides the analytic continuation of the section zeta
    function sum_n m_n lambda_n^(-s/2), used by the regularized determinant
    assembly downstream.

Tangential ("E") components carry a derivative-type condition under the
absolute boundary condition and a value-type condition under the relative
one; normal ("O") components the other way around.  Through the first-order
factorization of the b = 0 radial operators, a derivative-type zero set of
the weight-alpha family coincides with a value-type zero set of the partner
weight, which is how the slot tables below are normalized: every slot is
stated as a zero set of one radial boundary function, either of its value at
x = l ("plain", SideCondition.RELATIVE) or of its derivative ("hat",
SideCondition.ABSOLUTE).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .profile import (HornProfile, Perversity, SideCondition, TipCondition,
                      two_alpha)
from .sl_engine import (EndpointClass, SLProblem, classify_endpoint,
                        find_eigenvalues, kernel_dimension)
from .zeta_reg import PoleHit, SpectralSequence


class SectionTableExhausted(RuntimeError):
    """Raised when a finite section table cannot supply enough levels."""


# ---------------------------------------------------------------------------
# section models
# ---------------------------------------------------------------------------

@dataclass
class SectionModel:
    """Spectral data of the cross-section W needed by the assembly.

    harmonic[q] is the dimension of harmonic q-forms on W (the q-th Betti
    number).  ladders maps a degree q to a callable (count) -> (values,
    multiplicities) returning the first ``count`` coexact eigenvalue levels
    in increasing order.  zetas optionally maps a degree to the analytic
    continuation of the corresponding section zeta function.
    """

    name: str
    dim: int
    harmonic: tuple
    ladders: dict = field(default_factory=dict)
    zetas: dict = field(default_factory=dict)

    def betti(self, q: int) -> int:
        if 0 <= q <= self.dim:
            return int(self.harmonic[q])
        return 0

    def cex_levels(self, q: int, count: int):
        """First ``count`` coexact eigenvalue levels (values, multiplicities)
        in degree q; empty arrays when the degree carries no coexact forms."""
        fn = self.ladders.get(q)
        if fn is None or count <= 0:
            return np.zeros(0), np.zeros(0, dtype=int)
        vals, mults = fn(count)
        return np.asarray(vals, dtype=float), np.asarray(mults, dtype=int)

    def cex_zeta(self, q: int):
        return self.zetas.get(q)


def circle_section(length: float = 2.0 * math.pi) -> SectionModel:
    """Round circle of the given circumference (dim = 1).

    Coexact 0-forms: lambda_n = (2 pi n / L)^2 with multiplicity 2; no
    coexact 1-forms; harmonic dimensions (1, 1).
    """
    c = length / (2.0 * math.pi)

    def levels(count):
        n = np.arange(1, count + 1, dtype=float)
        return (n / c) ** 2, np.full(count, 2, dtype=int)

    zeta = SectionZeta(lambda s: 2 * mp.power(c, s) * mp.zeta(s),
                       poles={1.0: 2.0 * c},
                       name=f"circle(L={length:g}) functions")
    return SectionModel(name=f"circle(L={length:g})", dim=1,
                        harmonic=(1, 1), ladders={0: levels},
                        zetas={0: zeta})


def _sphere_zeta_series(s, kmax: int = 40):
    """sum_{l>=1} (2l+1) (l(l+1))^(-s/2) continued via the binomial expansion
    (l(l+1))^(-s/2) = sum_k binom(-s/2, k) (-1/4)^k (l+1/2)^(-s-2k),
    which reduces to Hurwitz zeta values at shifted arguments.  The apparent
    poles at s = 2 - 2k cancel for k >= 1; the genuine pole sits at s = 2."""
    s = mp.mpf(s) if not isinstance(s, mp.mpc) else s
    half3 = mp.mpf(3) / 2
    tot = mp.mpf(0)
    for k in range(kmax):
        quarter = mp.power(mp.mpf(-1) / 4, k)
        if k >= 1 and abs(s + 2 * k - 2) < mp.mpf(10) ** -8:
            # binomial zero against the Hurwitz pole: finite limit
            # d/ds binom(-s/2, k) at s = 2-2k is -1/(2k), residue is 1
            tot += -quarter / (2 * k)
            continue
        coef = mp.binomial(-s / 2, k) * quarter
        if coef == 0:
            continue
        term = coef * mp.zeta(s + 2 * k - 1, half3)
        tot += term
        if k > 4 and abs(term) < mp.mpf(10) ** (-mp.mp.dps - 5) * (1 + abs(tot)):
            break
    return 2 * tot


def sphere_section() -> SectionModel:
    """Round unit 2-sphere (dim = 2).

    Coexact 0-forms and coexact 1-forms share the ladder lambda_l = l(l+1)
    with multiplicity 2l+1, l >= 1; harmonic dimensions (1, 0, 1).
    """

    def levels(count):
        ll = np.arange(1, count + 1, dtype=float)
        return ll * (ll + 1.0), (2 * np.arange(1, count + 1) + 1).astype(int)

    zeta = SectionZeta(_sphere_zeta_series, poles={2.0: 2.0},
                       name="sphere coexact ladder")
    return SectionModel(name="sphere", dim=2, harmonic=(1, 0, 1),
                        ladders={0: levels, 1: levels},
                        zetas={0: zeta, 1: zeta})


def save_section_table(section: SectionModel, path: str,
                       n_levels: int = 64) -> None:
    """Write a section model to a plain-text table (finite ladder)."""
    lines = [f"# section spectral table, {n_levels} levels per degree",
             f"section {section.name.replace(' ', '_')} {section.dim}"]
    for q in range(section.dim + 1):
        lines.append(f"har {q} {section.betti(q)}")
    for q in range(section.dim + 1):
        vals, mults = section.cex_levels(q, n_levels)
        for v, mlt in zip(vals, mults):
            lines.append(f"cex {q} {v:.12g} {int(mlt)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_section_table(path: str) -> SectionModel:
    """Read a section model written by ``save_section_table``.

    The resulting ladders are finite: asking for more levels than stored
    raises ``SectionTableExhausted``.
    """
    name, dim = None, None
    har: dict = {}
    cex: dict = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] == "section":
                name, dim = tok[1], int(tok[2])
            elif tok[0] == "har":
                har[int(tok[1])] = int(tok[2])
            elif tok[0] == "cex":
                cex.setdefault(int(tok[1]), []).append(
                    (float(tok[2]), int(tok[3])))
            else:
                raise ValueError(f"unrecognized section table line: {line!r}")
    if name is None:
        raise ValueError("section table is missing its 'section' header line")
    harmonic = tuple(har.get(q, 0) for q in range(dim + 1))

    def make_ladder(rows):
        rows = sorted(rows)

        def levels(count):
            if count > len(rows):
                raise SectionTableExhausted(
                    f"section table {name!r} holds {len(rows)} levels, "
                    f"{count} requested")
            vals = np.array([r[0] for r in rows[:count]])
            mults = np.array([r[1] for r in rows[:count]], dtype=int)
            return vals, mults

        return levels

    ladders = {q: make_ladder(rows) for q, rows in cex.items()}
    return SectionModel(name=name, dim=dim, harmonic=harmonic,
                        ladders=ladders)


# ---------------------------------------------------------------------------
# slot tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilySlot:
    """One radial eigenvalue family contributing to a Hodge spectrum.

    ``condition`` states which boundary function supplies the zeros:
    RELATIVE for the value f(l, lambda) and ABSOLUTE for the derivative
    f'(l, lambda).  ``tip`` selects the solution at the singular end when a
    choice exists (regular / limit-circle weights at b = 0)."""

    two_alpha: int
    b: float
    condition: SideCondition
    multiplicity: int
    tip: TipCondition | None = None
    origin: str = ""

    @property
    def is_regular_closed_form(self) -> bool:
        return self.two_alpha == 1 and self.b == 0.0

    def problem(self, profile: HornProfile) -> SLProblem:
        return SLProblem(profile, self.two_alpha, self.b,
                         bc_at_l=self.condition, tip=self.tip)


def _tip_for(profile: HornProfile, ta: int, b: float) -> TipCondition | None:
    """Default tip flag: the recessive solution wherever a choice exists."""
    cls = classify_endpoint(SLProblem(profile, ta, b))
    if cls in (EndpointClass.REGULAR, EndpointClass.RS_LIMIT_CIRCLE):
        return TipCondition.PLUS
    return None


def family_slots(profile: HornProfile, section: SectionModel, q: int,
                 bc: SideCondition, perversity: Perversity | None = None,
                 n_levels: int = 8) -> list:
    """Radial families whose positive eigenvalues build Sp+ of the Hodge
    Laplacian on q-forms with the given boundary condition at x = l.

    Four coexact families per section level (degrees q, q-1, q-1, q-2) plus
    up to two harmonic families.  Under the absolute condition the
    positive-weight slots are derivative-type and the negative-weight slots
    value-type; the relative condition swaps the two.  For even-dimensional
    sections the harmonic slots of weight 1/2 are regular and the perversity
    picks the sine-type or cosine-type family.
    """
    m = section.dim
    if m % 2 == 0 and perversity is None:
        raise ValueError("even-dimensional sections need a perversity")
    pos_cond = SideCondition.ABSOLUTE if bc is SideCondition.ABSOLUTE \
        else SideCondition.RELATIVE
    neg_cond = pos_cond.complement
    slots: list = []

    # coexact families, one quadruple per section level
    quad = [(q, +1, pos_cond), (q - 1, +1, pos_cond),
            (q - 1, -1, neg_cond), (q - 2, -1, neg_cond)]
    for deg, sign, cond in quad:
        if not 0 <= deg <= m:
            continue
        vals, mults = section.cex_levels(deg, n_levels)
        ta = sign * two_alpha(m, deg)
        for n, (lam, mlt) in enumerate(zip(vals, mults), start=1):
            slots.append(FamilySlot(ta, float(lam), cond, int(mlt),
                                    tip=_tip_for(profile, ta, float(lam)),
                                    origin=f"cex[deg={deg},n={n}]"))

    # harmonic families (value-type in both tables)
    if bc is SideCondition.ABSOLUTE:
        har_pairs = [(q, -two_alpha(m, q - 1)), (q - 1, -two_alpha(m, q - 2))]
    else:
        har_pairs = [(q, two_alpha(m, q)), (q - 1, two_alpha(m, q - 1))]
    for deg, ta in har_pairs:
        mlt = section.betti(deg)
        if mlt == 0:
            continue
        if ta == 1:
            # regular weight: the perversity selects the solution family
            plus = (bc is SideCondition.ABSOLUTE) == \
                (perversity is Perversity.LOWER_MIDDLE)
            tip = TipCondition.PLUS if plus else TipCondition.MINUS
        else:
            tip = _tip_for(profile, ta, 0.0)
        slots.append(FamilySlot(ta, 0.0, SideCondition.RELATIVE, mlt,
                                tip=tip, origin=f"har[deg={deg}]"))
    return slots


def slot_eigenvalues(profile: HornProfile, slot: FamilySlot, count: int,
                     rel_tol: float = 1e-7) -> np.ndarray:
    """First ``count`` positive eigenvalues of one family (unexpanded)."""
    if count <= 0:
        return np.zeros(0)
    if slot.is_regular_closed_form:
        l = profile.length
        k = np.arange(1, count + 1, dtype=float)
        # value-type zeros of the sine solution / derivative-type zeros of
        # the cosine solution: (pi k / l)^2; the complementary pairings give
        # the odd family ((k - 1/2) pi / l)^2
        sine_family = (slot.tip is TipCondition.PLUS) == \
            (slot.condition is SideCondition.RELATIVE)
        if sine_family:
            return (math.pi * k / l) ** 2
        return (math.pi * (k - 0.5) / l) ** 2
    return find_eigenvalues(slot.problem(profile), count,
                            rel_tol=rel_tol).values.copy()


# module-level cache: the same radial family shows up in several degrees and
# on both sides of the duality, so keep the longest run computed so far
_SLOT_CACHE: dict = {}


def _cached_slot_eigenvalues(profile: HornProfile, slot: FamilySlot,
                             count: int) -> np.ndarray:
    key = (profile, slot.two_alpha, slot.b, slot.condition, slot.tip)
    have = _SLOT_CACHE.get(key)
    if have is None or len(have) < count:
        # fetch with headroom: growing an existing run restarts the scan,
        # so make refetches rare
        have = slot_eigenvalues(profile, slot, count + 2 + count // 4)
        _SLOT_CACHE[key] = have
    return have[:count]


def assemble_spectrum(profile: HornProfile, section: SectionModel, q: int,
                      bc: SideCondition,
                      perversity: Perversity | None = None,
                      count: int = 40) -> SpectralSequence:
    """Merged positive spectrum of the Hodge Laplacian on q-forms.

    Guarantees at least ``count`` eigenvalues counted with multiplicity and
    full coverage (every contributing family resolved) up to the returned
    maximum; section levels and per-family eigenvalue counts are grown
    adaptively using the crude lower bound lambda_1(b) >= b / max(h)^2.
    """
    l = profile.length
    xs = np.linspace(l * 1e-6, l, 512)
    hmax = float(np.max(profile.h_eval(xs)[0]))

    def lower_bound(slot):
        return slot.b / hmax ** 2

    n_levels = 2
    cutoff = None
    for _round in range(40):
        slots = family_slots(profile, section, q, bc, perversity, n_levels)
        if not slots:
            raise ValueError(
                f"degree {q} carries no spectrum for this section")
        # fetch low-lying families first to get a provisional cutoff, then
        # iterate until every unskipped family is resolved up to the cutoff
        fetched = {i: np.zeros(0) for i in range(len(slots))}
        order = sorted(range(len(slots)), key=lambda i: slots[i].b)

        def refresh_cutoff(cur):
            chunks = [np.repeat(v, slots[j].multiplicity)
                      for j, v in fetched.items() if len(v)]
            if not chunks:
                return cur
            expanded = np.sort(np.concatenate(chunks))
            if len(expanded) < count:
                return cur
            new_cut = float(expanded[count - 1])
            return new_cut if cur is None else min(cur, new_cut)

        for _pass in range(30):
            for i in order:
                slot = slots[i]
                # one slot can never contribute more than `count` expanded
                # values below the cutoff, which caps every fetch
                cap = count // slot.multiplicity + 2
                if cutoff is not None and lower_bound(slot) > cutoff:
                    continue
                vals = fetched[i]
                if len(vals) >= cap or (cutoff is not None and len(vals)
                                        and vals[-1] >= cutoff):
                    continue
                head = (max(cutoff - lower_bound(slot), 0.0)
                        if cutoff is not None else 0.0)
                n_est = (int(l * math.sqrt(head) / math.pi) + 3
                         if cutoff is not None else max(4, count // 2))
                n_est = min(cap, max(n_est, len(vals) + 3))
                vals = _cached_slot_eigenvalues(profile, slot, n_est)
                while cutoff is not None and vals[-1] < cutoff \
                        and len(vals) < cap:
                    n_est = min(cap, n_est + max(3, n_est // 2))
                    vals = _cached_slot_eigenvalues(profile, slot, n_est)
                fetched[i] = vals
                cutoff = refresh_cutoff(cutoff)
            cutoff = refresh_cutoff(cutoff)
            if cutoff is None:
                break
            covered = all(lower_bound(slots[i]) > cutoff or len(v) >= count
                          // slots[i].multiplicity + 2
                          or (len(v) and v[-1] >= cutoff)
                          for i, v in fetched.items())
            if covered:
                break
        if cutoff is None:
            n_levels *= 2
            continue
        # the level list is exhausted once the deepest fetched level's lower
        # bound clears the cutoff; otherwise grow it and go again
        deepest = 0.0
        for deg in (q, q - 1, q - 2):
            if not 0 <= deg <= section.dim:
                continue
            vals, _m = section.cex_levels(deg, n_levels)
            if len(vals) == n_levels:
                deepest = max(deepest, float(vals[-1]))
        if deepest and deepest / hmax ** 2 <= cutoff and n_levels < 4096:
            n_levels *= 2
            continue
        # coverage is complete: merge and truncate at the cutoff
        values, mults = [], []
        for i, vals in fetched.items():
            keep = vals[vals <= cutoff * (1.0 + 1e-12)]
            if len(keep):
                values.append(keep)
                mults.append(np.full(len(keep), slots[i].multiplicity,
                                     dtype=float))
        seq = SpectralSequence(np.concatenate(values),
                               np.concatenate(mults),
                               order_hint=(section.dim + 1) / 2.0)
        if seq.expanded_count >= count:
            seq.fit_tail(p=2.0 / (section.dim + 1))
            return seq
        cutoff *= 1.5
    raise RuntimeError("spectrum assembly failed to converge")


def duality_partner(m: int, q: int, perversity: Perversity | None,
                    bc: SideCondition):
    """The (degree, perversity, boundary condition) whose spectrum matches."""
    return (m + 1 - q,
            perversity.complement if perversity is not None else None,
            bc.complement)


# ---------------------------------------------------------------------------
# zero modes and topology
# ---------------------------------------------------------------------------

def harmonic_dim(profile: HornProfile, section: SectionModel, q: int,
                 bc: SideCondition,
                 perversity: Perversity | None = None) -> int:
    """Dimension of the space of harmonic q-forms, counted numerically.

    Under the absolute condition only the tangential slot of degree q can
    contribute: multiplicity betti(q) times the kernel dimension of the
    weight-alpha_q extension with the derivative-type condition at x = l
    (the value-type slots have nonvanishing boundary value at lambda = 0).
    The relative count follows by the Hodge-star isometry.
    """
    m = section.dim
    if m % 2 == 0 and perversity is None:
        raise ValueError("even-dimensional sections need a perversity")
    if bc is SideCondition.RELATIVE:
        pc = perversity.complement if perversity is not None else None
        return harmonic_dim(profile, section, m + 1 - q,
                            SideCondition.ABSOLUTE, pc)
    if not 0 <= q <= m:
        return 0
    mlt = section.betti(q)
    if mlt == 0:
        return 0
    ta = two_alpha(m, q)
    if ta == 1:
        tip = TipCondition.MINUS if perversity is Perversity.LOWER_MIDDLE \
            else TipCondition.PLUS
    else:
        tip = _tip_for(profile, ta, 0.0)
    prob = SLProblem(profile, ta, 0.0, bc_at_l=SideCondition.ABSOLUTE,
                     tip=tip)
    return mlt * kernel_dimension(prob)


def cohomology_rank(section: SectionModel, q: int, bc: SideCondition,
                    perversity: Perversity | None = None) -> int:
    """Rank of the cohomology group the harmonic q-forms represent.

    For an odd-dimensional section (m = 2p-1), and for the upper-middle
    perversity in even dimension (m = 2p), the absolute groups are betti(q)
    for q <= p-1 and zero above, while the relative groups are betti(q-1)
    for p+1 <= q <= m+1.  The lower-middle perversity in even dimension
    extends the absolute range to q <= p and starts the relative range at
    q = p+2.
    """
    m = section.dim
    if m % 2 == 1:
        p = (m + 1) // 2
        wide = False
    else:
        if perversity is None:
            raise ValueError("even-dimensional sections need a perversity")
        p = m // 2
        wide = perversity is Perversity.LOWER_MIDDLE
    if bc is SideCondition.ABSOLUTE:
        top = p if wide else p - 1
        return section.betti(q) if 0 <= q <= top else 0
    bottom = p + 2 if wide else p + 1
    return section.betti(q - 1) if bottom <= q <= m + 1 else 0


def euler_characteristic(section: SectionModel, bc: SideCondition,
                         perversity: Perversity | None = None) -> int:
    return sum((-1) ** q * cohomology_rank(section, q, bc, perversity)
               for q in range(section.dim + 2))


# ---------------------------------------------------------------------------
# section zeta continuation
# ---------------------------------------------------------------------------

class SectionZeta:
    """Analytic continuation of Z(s) = sum_n m_n lambda_n^(-s/2).

    ``fun`` evaluates the continuation at an mpmath scalar away from poles;
    ``poles`` maps each pole location to its residue.  Finite parts are
    extracted by the symmetric two-point average, which cancels the simple
    pole and leaves an O(eps^2) error at working precision.
    """

    def __init__(self, fun, poles: dict, name: str = ""):
        self._fun = fun
        self.poles = dict(poles)
        self.name = name

    def _near_pole(self, s: float) -> float | None:
        for sigma in self.poles:
            if abs(s - sigma) < 1e-9:
                return sigma
        return None

    def value(self, s: float) -> float:
        if self._near_pole(s) is not None:
            raise PoleHit(f"section zeta {self.name} has a pole at s={s}")
        with mp.workdps(30):
            return float(self._fun(mp.mpf(s)))

    def residue(self, sigma: float) -> float:
        return self.poles.get(sigma, 0.0)

    def finite_part(self, sigma: float) -> float:
        """lim_{s->sigma} [Z(s) - Res/(s - sigma)] (equals Z(sigma) away
        from the poles)."""
        if self._near_pole(sigma) is None:
            return self.value(sigma)
        with mp.workdps(40):
            eps = mp.mpf(10) ** -8
            avg = (self._fun(mp.mpf(sigma) + eps)
                   + self._fun(mp.mpf(sigma) - eps)) / 2
            return float(avg)

    def derivative(self, s: float) -> float:
        if self._near_pole(s) is not None:
            raise PoleHit(f"section zeta {self.name} has a pole at s={s}")
        with mp.workdps(40):
            return float(mp.diff(self._fun, mp.mpf(s)))
