"""
Elementary-subgroup probes: cyclic reduction, loxodromic classification,
stable translation numbers and the finite search for E(g).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from sc_engine.errors import NotHyperbolic
from sc_engine.groups import IDENTITY, GroupSpec, NormalForm, ball
from sc_engine.models import ElementaryProbeReport, TranslationReport
from sc_engine.parsing import canonical_spec_text, format_element

logger = logging.getLogger(__name__)

TRIVIAL = "trivial"
PARABOLIC = "parabolic"
HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class ConjClassForm:
    """A cyclically reduced normal form"""
    form: NormalForm

    @property
    def syllables(self) -> int:
        return len(self.form)


@dataclass(frozen=True)
class Classification:
    kind: str
    factor_index: Optional[int] = None


@dataclass(frozen=True)
class TranslationNumber:
    value: Fraction
    exact: bool
    n_at_min: int


@dataclass(frozen=True)
class ElementaryWitness:
    f: NormalForm
    n: int
    sign: int


def cyclic_core(g: NormalForm, spec: GroupSpec) -> Tuple[NormalForm, NormalForm]:
    """(r, t) with g = t·r·t⁻¹ and r cyclically reduced"""
    core, t = g, IDENTITY
    while len(core) >= 2 and core[0][0] == core[-1][0]:
        head = (core[0],)
        t = spec.mul(t, head)
        core = spec.conj(core, head)
    return core, t


def cyclically_reduce(g: NormalForm, spec: GroupSpec) -> Tuple[ConjClassForm, NormalForm]:
    spec.check_element(g)
    core, t = cyclic_core(g, spec)
    return ConjClassForm(form=core), t


def classify(g: NormalForm, spec: GroupSpec) -> Classification:
    """Trivial, parabolic (conjugate into some H_λ) or hyperbolic"""
    form, _ = cyclically_reduce(g, spec)
    if not form.form:
        return Classification(TRIVIAL)
    if form.syllables == 1 and form.form[0][0] < spec.k:
        return Classification(PARABOLIC, spec.factors[form.form[0][0]].index)
    return Classification(HYPERBOLIC)


def translation_number(g: NormalForm, spec: GroupSpec, n_max: int) -> TranslationNumber:
    """
    min_{n ≤ n_max} |gⁿ|/n. Exact when |g^{2m}| = 2|g^m| at m = n_max // 2;
    parabolic and trivial elements have translation number 0.
    """
    if classify(g, spec).kind != HYPERBOLIC:
        return TranslationNumber(value=Fraction(0), exact=True, n_at_min=1)
    best, best_n = None, 1
    power = IDENTITY
    for n in range(1, n_max + 1):
        power = spec.mul(power, g)
        value = Fraction(spec.length(power), n)
        if best is None or value < best:
            best, best_n = value, n
    m = max(1, n_max // 2)
    exact = spec.length(spec.power(g, 2 * m)) == 2 * spec.length(spec.power(g, m))
    return TranslationNumber(value=best, exact=exact, n_at_min=best_n)


def elementary_probe(g: NormalForm, spec: GroupSpec, radius: int, n_max: int) -> List[ElementaryWitness]:
    """
    Elements f of the ball with f⁻¹gⁿf = g^{±n} for some 1 ≤ n ≤ n_max;
    each f is reported once, with its smallest n.

    Raises:
        NotHyperbolic, InfiniteFactorInBall, RadiusCapExceeded
    """
    if classify(g, spec).kind != HYPERBOLIC:
        raise NotHyperbolic(f"{format_element(g, spec)} is not hyperbolic")
    powers = [(n, spec.power(g, n), spec.power(g, -n)) for n in range(1, n_max + 1)]
    witnesses = []
    for f in ball(spec, radius).elements():
        for n, pos, neg in powers:
            conj = spec.conj(pos, f)
            if conj == pos:
                witnesses.append(ElementaryWitness(f=f, n=n, sign=1))
                break
            if conj == neg:
                witnesses.append(ElementaryWitness(f=f, n=n, sign=-1))
                break
    logger.info(f"📊 {len(witnesses)} elements of ball({radius}) normalise ⟨gⁿ⟩ for some n ≤ {n_max}")
    return witnesses


def translation_report(g: NormalForm, spec: GroupSpec, n_max: int) -> TranslationReport:
    tau = translation_number(g, spec, n_max)
    return TranslationReport(
        spec_text=canonical_spec_text(spec),
        element=format_element(g, spec),
        value=tau.value,
        exact=tau.exact,
        n_max=n_max,
        n_at_min=tau.n_at_min,
    )


def elementary_report(g: NormalForm, spec: GroupSpec, radius: int, n_max: int) -> ElementaryProbeReport:
    witnesses = elementary_probe(g, spec, radius, n_max)
    return ElementaryProbeReport(
        spec_text=canonical_spec_text(spec),
        element=format_element(g, spec),
        radius=radius,
        n_max=n_max,
        witnesses=[{"f": format_element(w.f, spec), "n": w.n, "sign": w.sign} for w in witnesses],
    )
