"""
Word builder for the small-cancellation words

W = x·a₁b₁·a₂b₂···aₙbₙ with a_i ∈ H_α, b_i ∈ H_β (α ≠ β), x a free
generator or absent. Builds W under the shape, factor and forbidden-set
conditions, audits the quasi-geodesic subword property, certifies C₁
with μ = (3ε+11)/n, λ = 1/3, c = 2, ρ = 2n+1, and checks common edges
of thin quadrangles.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import FrozenSet, List, Optional, Sequence, Tuple

from sc_engine.errors import (
    BudgetExceeded,
    DuplicatePower,
    FactorMismatch,
    ForbiddenElement,
    InvalidParameter,
    InvolutionLetter,
    TooShort,
    TrivialLetter,
    UnknownConstants,
)
from sc_engine.groups import GroupSpec, Letter, NormalForm, Word, ball
from sc_engine.models import BuildReport, CheckItem, SubwordCheckReport, QuadReport, SCCertificate, SCParams
from sc_engine.parsing import canonical_spec_text, format_element, format_word
from sc_engine.paths import PathRef, components, components_connected_across, subword_audit
from sc_engine.pieces import SmallCancellationChecker, symmetrize
from sc_engine.settings import settings

logger = logging.getLogger(__name__)

QG_LAMBDA = Fraction(1, 3)
QG_C = Fraction(2)

PURE_FREE_PRODUCT = "pure_free_product"
OMEGA = "omega"


# =============================================================================
# FORBIDDEN SET
# =============================================================================

@dataclass(frozen=True)
class ForbiddenSet:
    """𝓕 = {g ∈ ⟨Ω⟩ : |g|_Ω ≤ K(32ε + 70)}; empty for pure free products"""
    mode: str
    elements: FrozenSet[NormalForm] = frozenset()
    radius: int = 0

    def __contains__(self, g: NormalForm) -> bool:
        return g in self.elements


def forbidden_set(
    spec: GroupSpec,
    epsilon: int,
    omega: Optional[Tuple[Sequence[NormalForm], Fraction]] = None,
    budget: Optional[int] = None,
) -> ForbiddenSet:
    """
    Raises:
        UnknownConstants when G is not a pure free product and Ω, K are not supplied
        BudgetExceeded when ⟨Ω⟩ grows past the node budget
    """
    if omega is None:
        if not spec.is_pure:
            raise UnknownConstants("forbidden set needs Ω and K outside pure free products")
        return ForbiddenSet(mode=PURE_FREE_PRODUCT)

    generators, k_const = omega
    radius = floor(Fraction(k_const) * (32 * epsilon + 70))
    base = spec.without_relators()
    step = []
    for g in generators:
        step.extend([tuple(g), base.inv(tuple(g))])
    budget = settings.BUDGET_NODES if budget is None else budget

    seen = {(): 0}
    frontier = [()]
    for d in range(radius):
        next_frontier = []
        for g in frontier:
            for s in step:
                h = base.mul(g, s)
                if h not in seen:
                    seen[h] = d + 1
                    next_frontier.append(h)
        if len(seen) > budget:
            raise BudgetExceeded(f"⟨Ω⟩ ball exceeded {budget} elements at radius {d + 1}")
        if not next_frontier:
            break
        frontier = next_frontier
    logger.info(f"📊 forbidden set: {len(seen)} elements within Ω-radius {radius}")
    return ForbiddenSet(mode=OMEGA, elements=frozenset(seen), radius=radius)


# =============================================================================
# BUILDING W
# =============================================================================

@dataclass(frozen=True)
class WSpec:
    a_list: Tuple[Letter, ...]
    b_list: Tuple[Letter, ...]
    x: Optional[Letter] = None

    @property
    def n(self) -> int:
        return len(self.a_list)


def _letter_checks(
    letters: Sequence[Letter],
    spec: GroupSpec,
    role: str,
    theorem_extras: bool,
    items: List[CheckItem],
) -> int:
    slots = {slot for slot, _ in letters}
    if len(slots) != 1 or next(iter(slots)) >= spec.k:
        raise FactorMismatch(f"{role}-letters must all lie in one parabolic factor")
    slot = next(iter(slots))
    factor = spec.factors[slot]

    for i, (_, value) in enumerate(letters):
        if value == 0:
            raise TrivialLetter(f"{role}_{i + 1} is the identity")
    items.append(CheckItem(name=f"{role} nontrivial", passed=True, detail=f"all {len(letters)} in {factor.name}"))

    if theorem_extras:
        for i, (_, value) in enumerate(letters):
            if factor.inv(value) == value:
                raise InvolutionLetter(f"{role}_{i + 1} = {role}_{i + 1}⁻¹")
        seen = {}
        for i, (_, value) in enumerate(letters):
            for v in (value, factor.inv(value)):
                if v in seen and seen[v] != i:
                    raise DuplicatePower(f"{role}_{i + 1} = {role}_{seen[v] + 1}^±1")
            seen.setdefault(value, i)
        items.append(CheckItem(name=f"{role} distinct up to inverse", passed=True))
    return slot


def _validate(wspec: WSpec, forbidden: ForbiddenSet, spec: GroupSpec, theorem_extras: bool) -> List[CheckItem]:
    items: List[CheckItem] = []
    if wspec.n < 1 or len(wspec.b_list) != wspec.n:
        raise InvalidParameter(f"need n ≥ 1 and |a| = |b|, got {len(wspec.a_list)} and {len(wspec.b_list)}")
    items.append(CheckItem(name="shape", passed=True, detail=f"n = {wspec.n}"))

    if wspec.x is not None and (wspec.x[0] < spec.k or abs(wspec.x[1]) != 1):
        raise FactorMismatch("x must be a free generator letter")
    items.append(CheckItem(name="x free or absent", passed=True))

    alpha = _letter_checks(wspec.a_list, spec, "a", theorem_extras, items)
    beta = _letter_checks(wspec.b_list, spec, "b", theorem_extras, items)
    if alpha == beta:
        raise FactorMismatch("a- and b-letters must come from different factors")
    items.append(CheckItem(name="α ≠ β", passed=True, detail=f"{spec.slot_name(alpha)}, {spec.slot_name(beta)}"))

    for role, letters in (("a", wspec.a_list), ("b", wspec.b_list)):
        for i, letter in enumerate(letters):
            if (letter,) in forbidden:
                raise ForbiddenElement(f"{role}_{i + 1} lies in the forbidden set")
    items.append(CheckItem(name="outside forbidden set", passed=True, detail=forbidden.mode))
    return items


def _assemble(wspec: WSpec) -> Word:
    word: List[Letter] = [wspec.x] if wspec.x is not None else []
    for a, b in zip(wspec.a_list, wspec.b_list):
        word.extend([a, b])
    return tuple(word)


def letter_uniqueness(word: Word, spec: GroupSpec) -> bool:
    """No letter of W occurs twice in W^{±1}"""
    seen = set()
    for slot, value in word:
        inverse = (slot, spec.factors[slot].inv(value) if slot < spec.k else -value)
        if (slot, value) in seen or inverse in seen:
            return False
        seen.add((slot, value))
    return True


def build_W(
    wspec: WSpec,
    forbidden: ForbiddenSet,
    spec: GroupSpec,
    theorem_extras: bool = True,
) -> Tuple[Word, BuildReport]:
    """
    Raises:
        TrivialLetter, FactorMismatch, DuplicatePower, InvolutionLetter,
        ForbiddenElement, InvalidParameter
    """
    items = _validate(wspec, forbidden, spec, theorem_extras)
    word = _assemble(wspec)
    unique = letter_uniqueness(word, spec)
    report = BuildReport(
        spec_text=canonical_spec_text(spec),
        word=format_word(word, spec),
        n=wspec.n,
        checks=items,
        letter_uniqueness=unique,
        forbidden_mode=forbidden.mode,
    )
    logger.info(f"✅ built W of length {len(word)} (n = {wspec.n})")
    return word, report


def standard_wspec(spec: GroupSpec, n: int, use_x: bool = True) -> WSpec:
    """
    W = x a b a² b² ... aⁿ bⁿ on the first two factors and the first free
    generator.
    """
    if spec.k < 2:
        raise FactorMismatch("need two parabolic factors")
    a_factor, b_factor = spec.factors[0], spec.factors[1]
    a_list = tuple((0, a_factor.power(1, i)) for i in range(1, n + 1))
    b_list = tuple((1, b_factor.power(1, i)) for i in range(1, n + 1))
    x = (spec.k, 1) if use_x and spec.free_names else None
    return WSpec(a_list=a_list, b_list=b_list, x=x)


def build_fg_word(f: Letter, g: Letter, m: int, spec: GroupSpec) -> Tuple[Word, BuildReport]:
    """(fg)^m, validated under the shape, factor and forbidden-set conditions"""
    if m < 1:
        raise InvalidParameter(f"m = {m} < 1")
    wspec = WSpec(a_list=(f,) * m, b_list=(g,) * m)
    return build_W(wspec, forbidden_set(spec, 0), spec, theorem_extras=False)


def word_n(word: Word) -> int:
    return (len(word) - (len(word) % 2)) // 2


# =============================================================================
# AUDITS AND CERTIFICATES
# =============================================================================

def qg_subword_check(word: Word, spec: GroupSpec) -> SubwordCheckReport:
    """Every subword of every cyclic shift of W^{±1}: no backtracking, (1/3, 2)-quasi-geodesic"""
    rset = symmetrize([word], spec)
    subwords = qg_bad = bt_bad = 0
    worst, worst_member, worst_span = QG_C, rset.members[0], (0, 0)
    for member in rset.members:
        audit = subword_audit(member, QG_LAMBDA, QG_C, spec)
        subwords += audit.subwords
        qg_bad += audit.qg_violations
        bt_bad += audit.backtracking_violations
        if audit.worst_margin < worst:
            worst, worst_member, worst_span = audit.worst_margin, member, audit.worst_span

    verdict = "pass" if qg_bad == 0 and bt_bad == 0 else "fail"
    if verdict == "pass":
        logger.info(f"✅ quasi-geodesic subword audit: {subwords} subwords, worst margin {worst}")
    else:
        logger.error(f"❌ quasi-geodesic subword audit: {qg_bad} QG and {bt_bad} backtracking failures")
    return SubwordCheckReport(
        spec_text=canonical_spec_text(spec),
        word=format_word(word, spec),
        members=len(rset),
        subwords_checked=subwords,
        qg_violations=qg_bad,
        backtracking_violations=bt_bad,
        worst_margin=worst,
        worst_member=format_word(worst_member, spec),
        worst_span=worst_span,
        verdict=verdict,
    )


def theorem_params(n: int, epsilon: int) -> SCParams:
    return SCParams(epsilon=epsilon, mu=Fraction(3 * epsilon + 11, n), lam=QG_LAMBDA, c=QG_C, rho=2 * n + 1)


def theorem_w_certificate(word: Word, spec: GroupSpec, epsilon: int, forbidden: Optional[ForbiddenSet] = None) -> SCCertificate:
    """
    C₁(ε, (3ε+11)/n, 1/3, 2, 2n+1) certificate for the symmetrized closure of W.

    A failing certificate means W was built wrong.
    """
    n = word_n(word)
    if n < 1:
        raise InvalidParameter("W must contain at least one a·b pair")
    params = theorem_params(n, epsilon)
    forbidden = forbidden if forbidden is not None else forbidden_set(spec, epsilon)
    assumptions = []
    if forbidden.mode == PURE_FREE_PRODUCT:
        assumptions.append("forbidden set is trivial: G is a pure free product")
    else:
        assumptions.append(f"forbidden set from supplied Ω within radius {forbidden.radius}")
    cert = SmallCancellationChecker(symmetrize([word], spec), params).certify(
        with_prime=True,
        theorem=f"W(n={n}, ε={epsilon})",
        assumptions=assumptions,
    )
    if cert.verdict == "fail":
        logger.error(f"❌ W(n={n}) failed its own certificate; the builder produced a defective word")
    return cert


def quad_common_edge_check(subword: Word, spec: GroupSpec, epsilon: int) -> QuadReport:
    """
    Quadrangles p, q labelled by L whose endpoints are pairwise ε-close
    share an edge, and every component of the trimmed p is connected to a
    component of q.

    Raises:
        TooShort when ‖L‖ < 6ε + 22
        InfiniteFactorInBall
    """
    n = len(subword)
    if n < 6 * epsilon + 22:
        raise TooShort(f"‖L‖ = {n} < 6ε + 22 = {6 * epsilon + 22}")

    q_vertices = [()]
    stack: list = []
    for letter in subword:
        spec.push(stack, letter)
        q_vertices.append(tuple(stack))
    positions = {}
    for j, v in enumerate(q_vertices):
        positions.setdefault(v, []).append(j)
    l_nf, l_inv = q_vertices[-1], spec.inv(q_vertices[-1])

    trim = 3 * epsilon + 6
    q_path = PathRef.from_word(subword)
    quadrangles = checked = unmatched = 0
    missing: List[str] = []
    for u in ball(spec, epsilon).elements():
        if spec.length(spec.mul(spec.mul(l_inv, u), l_nf)) > epsilon:
            continue
        quadrangles += 1

        p_vertices = [u]
        stack = list(u)
        for letter in subword:
            spec.push(stack, letter)
            p_vertices.append(tuple(stack))
        if not _shares_edge(p_vertices, q_vertices, positions):
            missing.append(format_element(u, spec))

        p_path = PathRef.from_word(subword, base=u)
        linked = {s for s, _ in components_connected_across(p_path, q_path, spec)}
        for idx, comp in enumerate(components(p_path, spec)):
            if comp.start >= trim and comp.end <= n - trim:
                checked += 1
                if idx not in linked:
                    unmatched += 1

    verdict = "pass" if not missing and unmatched == 0 else "fail"
    logger.info(f"📊 {quadrangles} thin quadrangles, {len(missing)} without a common edge, {unmatched} unmatched components")
    return QuadReport(
        spec_text=canonical_spec_text(spec),
        word=format_word(subword, spec),
        epsilon=epsilon,
        quadrangles=quadrangles,
        without_common_edge=missing,
        components_checked=checked,
        unmatched_components=unmatched,
        verdict=verdict,
    )


def _shares_edge(p_vertices: List[NormalForm], q_vertices: List[NormalForm], positions) -> bool:
    for j in range(len(p_vertices) - 1):
        for jq in positions.get(p_vertices[j], ()):
            nxt = p_vertices[j + 1]
            if jq + 1 < len(q_vertices) and q_vertices[jq + 1] == nxt:
                return True
            if jq >= 1 and q_vertices[jq - 1] == nxt:
                return True
    return False
