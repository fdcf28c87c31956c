"""
Quotient lab for G₁ = G / ⟨⟨R⟩⟩

Implements:
- Certified quotients built from a spec plus an SC certificate
- A Dehn-style reducer over cyclic conjugates with replayable steps
- Relative area certificates (from reducer traces or bounded search)
- Injectivity, torsion and isoperimetric probes

A reducer step rewrites a cyclic conjugate rot = τ⁻¹·w·τ whose prefix U
matches a long member prefix up to bridges, U = Y·U′·Z with R ≡ U′V′,
into Y·V′⁻¹·Z·T where rot ≡ U·T. Lengths strictly decrease.
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from sc_engine.elementary import cyclic_core
from sc_engine.errors import (
    BoundTooLarge,
    BudgetExceeded,
    NotCertified,
    SpecMismatch,
)
from sc_engine.groups import IDENTITY, GroupSpec, NormalForm, Word, ball, element_order
from sc_engine.models import (
    AreaCertificate,
    AreaFactor,
    DehnStepRecord,
    DehnTrace,
    InjectivityReport,
    IsoperimetricReport,
    IsoSample,
    SCCertificate,
    SCParams,
    TorsionReport,
)
from sc_engine.parallel import fan_out
from sc_engine.parsing import canonical_spec_text, format_element, format_word, parse_group_spec, parse_word
from sc_engine.pieces import SymmetrizedSet, symmetrize
from sc_engine.settings import settings

logger = logging.getLogger(__name__)

TRIVIAL = "Trivial"
NONTRIVIAL = "Nontrivial"
UNKNOWN = "Unknown"

REDUCTION_CONSTANT = 23


# =============================================================================
# QUOTIENT SPECS
# =============================================================================

@dataclass(frozen=True)
class QuotientSpec:
    base: GroupSpec
    relators: SymmetrizedSet
    certificate: Optional[SCCertificate] = None

    @property
    def params(self) -> SCParams:
        if self.certificate is None:
            raise NotCertified("relator set carries no C₁ certificate")
        return self.certificate.params

    def require_certified(self) -> SCParams:
        params = self.params
        if self.certificate.verdict != "pass":
            raise NotCertified("relator set failed its small-cancellation check")
        return params

    @property
    def spec_text(self) -> str:
        return canonical_spec_text(self.base)

    @property
    def seed_literals(self) -> List[str]:
        return [format_word(s, self.base) for s in self.relators.seeds]


def quotient_from_spec(spec: GroupSpec, certificate: Optional[SCCertificate] = None) -> QuotientSpec:
    """
    Raises:
        EmptySeed, SpecMismatch when the certificate names another relator set
    """
    base = spec.without_relators()
    relators = symmetrize(spec.extra_relators, base)
    if certificate is not None:
        cert_spec = parse_group_spec(certificate.spec_text)
        if canonical_spec_text(cert_spec.without_relators()) != canonical_spec_text(base):
            raise SpecMismatch("certificate was issued for a different group")
        cert_set = symmetrize([parse_word(s, base) for s in certificate.seeds], base)
        if set(cert_set.members) != set(relators.members):
            raise SpecMismatch("certificate was issued for a different relator set")
    return QuotientSpec(base=base, relators=relators, certificate=certificate)


def quotient_from_certificate(certificate: SCCertificate) -> QuotientSpec:
    base = parse_group_spec(certificate.spec_text).without_relators()
    seeds = [parse_word(s, base) for s in certificate.seeds]
    return QuotientSpec(base=base, relators=symmetrize(seeds, base), certificate=certificate)


def bound_N(params: SCParams) -> int:
    """N = ⌊λρ/2 − c − 2ε⌋: nontrivial words of length ≤ N stay nontrivial"""
    return floor(params.lam * params.rho / 2 - params.c - 2 * params.epsilon)


# =============================================================================
# DEHN REDUCER
# =============================================================================

@dataclass(frozen=True)
class ReductionStep:
    before: NormalForm
    conjugator: NormalForm
    u_length: int
    member: int
    prefix_length: int
    y: NormalForm
    z: NormalForm
    after: NormalForm


@dataclass
class Reduction:
    word: NormalForm
    outcome: str
    final: NormalForm
    steps: List[ReductionStep] = field(default_factory=list)
    reason: str = ""


def min_prefix_length(member_length: int, mu: Fraction) -> int:
    """Smallest m with m > θ‖R‖, θ = min(1 − 23μ, 1 − 1/‖R‖)"""
    bound = min((1 - REDUCTION_CONSTANT * Fraction(mu)) * member_length, Fraction(member_length - 1))
    return max(1, floor(bound) + 1)


class DehnReducer:
    """
    Greedy reducer. Ties break by leftmost rotation, then largest matched
    fraction m/‖R‖, then lowest member index.
    """

    def __init__(
        self,
        quotient: QuotientSpec,
        epsilon: Optional[int] = None,
        mu: Optional[Fraction] = None,
        budget_nodes: Optional[int] = None,
        budget_secs: Optional[float] = None,
        params: Optional[SCParams] = None,
    ):
        params = quotient.require_certified() if params is None else params
        self.quotient = quotient
        self.spec = quotient.base
        self.params = params
        self.epsilon = params.epsilon if epsilon is None else epsilon
        self.mu = params.mu if mu is None else Fraction(mu)
        self.bound = bound_N(params)
        self.budget_nodes = settings.BUDGET_NODES if budget_nodes is None else budget_nodes
        self.budget_secs = settings.BUDGET_SECS if budget_secs is None else budget_secs

        spec = self.spec
        members = quotient.relators.members
        self.members = members
        self.min_member_length = min(len(m) for m in members)
        self.max_member_length = max(len(m) for m in members)
        self.bridges = ball(spec, self.epsilon).elements()
        self.bridge_inverses = [spec.inv(g) for g in self.bridges]

        # nf(Y·U′) for member prefixes U′ long enough to trigger a rewrite
        self.index: Dict[NormalForm, List[Tuple[int, int, int]]] = {}
        self.tails: Dict[Tuple[int, int], NormalForm] = {}
        for r, m in enumerate(members):
            threshold = min_prefix_length(len(m), self.mu)
            stack: list = []
            for length, letter in enumerate(m, start=1):
                spec.push(stack, letter)
                if length < threshold:
                    continue
                prefix = tuple(stack)
                for yi, y in enumerate(self.bridges):
                    self.index.setdefault(spec.mul(y, prefix), []).append((r, length, yi))
                self.tails[(r, length)] = spec.inv(spec.reduce(m[length:]))

    def _candidate(self, rot_letters: Word, start_time: float, nodes: List[int]):
        """Best rewrite of one cyclic conjugate, or None"""
        spec = self.spec
        n = len(rot_letters)
        current_length = n
        best = None
        stack: list = []
        limit = min(n, self.max_member_length + 2 * self.epsilon)
        for u_len in range(1, limit + 1):
            spec.push(stack, rot_letters[u_len - 1])
            u = tuple(stack)
            tail = None
            for zi, z_inv in enumerate(self.bridge_inverses):
                nodes[0] += 1
                hits = self.index.get(spec.mul(u, z_inv))
                if not hits:
                    continue
                if tail is None:
                    tail = spec.reduce(rot_letters[u_len:])
                for r, m, yi in hits:
                    after = spec.mul(
                        spec.mul(spec.mul(self.bridges[yi], self.tails[(r, m)]), self.bridges[zi]),
                        tail,
                    )
                    if spec.length(after) >= current_length:
                        continue
                    key = (-Fraction(m, len(self.members[r])), r, u_len, yi, zi)
                    if best is None or key < best[0]:
                        best = (key, r, m, u_len, yi, zi, after)
            if nodes[0] > self.budget_nodes:
                raise BudgetExceeded(f"reduction exceeded {self.budget_nodes} nodes")
        if self.budget_secs is not None and time.monotonic() - start_time > self.budget_secs:
            raise BudgetExceeded(f"reduction exceeded {self.budget_secs}s")
        return best

    def run(self, g: NormalForm) -> Reduction:
        spec = self.spec
        start_time = time.monotonic()
        nodes = [0]
        current = g
        steps: List[ReductionStep] = []
        reason = ""
        while current:
            if 3 * spec.length(current) + 4 * self.epsilon <= self.min_member_length:
                reason = "quick exit: 3|w| + 4ε ≤ min ‖R‖"
                break
            core, t = cyclic_core(current, spec)
            letters = spec.letters_of(core)
            chosen = None
            for s in range(len(letters)):
                rot = letters[s:] + letters[:s]
                best = self._candidate(rot, start_time, nodes)
                if best is not None:
                    rho = spec.reduce(letters[:s])
                    chosen = (spec.mul(t, rho), best)
                    break
            if chosen is None:
                reason = "no long piece of a relator found"
                break
            tau, (_, r, m, u_len, yi, zi, after) = chosen
            steps.append(ReductionStep(
                before=current,
                conjugator=tau,
                u_length=u_len,
                member=r,
                prefix_length=m,
                y=self.bridges[yi],
                z=self.bridges[zi],
                after=after,
            ))
            current = after

        if not current:
            outcome = TRIVIAL
        elif spec.length(current) <= self.bound:
            outcome = NONTRIVIAL
        else:
            outcome = UNKNOWN
        logger.debug(f"reduced word of length {spec.length(g)} in {len(steps)} steps: {outcome}")
        return Reduction(word=g, outcome=outcome, final=current, steps=steps, reason=reason)

    # -------------------------------------------------------------------------
    # Replay
    # -------------------------------------------------------------------------

    def replay_step(self, step: ReductionStep) -> Optional[str]:
        """None when the step checks out, else what went wrong"""
        spec = self.spec
        if not 0 <= step.member < len(self.members):
            return f"member {step.member} out of range"
        member = self.members[step.member]
        if spec.length(step.y) > self.epsilon or spec.length(step.z) > self.epsilon:
            return "bridge longer than ε"
        if not min_prefix_length(len(member), self.mu) <= step.prefix_length <= len(member):
            return f"prefix length {step.prefix_length} below the rewrite threshold"
        rot = spec.conj(step.before, step.conjugator)
        letters = spec.letters_of(rot)
        if not 1 <= step.u_length <= len(letters):
            return "matched length outside the conjugate"
        u = spec.reduce(letters[:step.u_length])
        tail = spec.reduce(letters[step.u_length:])
        u_prime = spec.reduce(member[:step.prefix_length])
        if spec.mul(spec.mul(step.y, u_prime), step.z) != u:
            return "U ≠ Y·U′·Z"
        v_inv = spec.inv(spec.reduce(member[step.prefix_length:]))
        expected = spec.mul(spec.mul(spec.mul(step.y, v_inv), step.z), tail)
        if expected != step.after:
            return "after ≠ Y·V′⁻¹·Z·T"
        relator = spec.reduce(member)
        conj_relator = spec.mul(spec.mul(step.y, relator), spec.inv(step.y))
        if spec.mul(conj_relator, step.after) != rot:
            return "τ⁻¹·before·τ ≠ (Y·R·Y⁻¹)·after"
        if spec.length(step.after) >= spec.length(step.before):
            return "length did not decrease"
        return None

    def replay(self, reduction: Reduction) -> List[str]:
        issues = []
        current = reduction.word
        for k, step in enumerate(reduction.steps):
            if step.before != current:
                issues.append(f"step {k}: does not continue from the previous step")
            problem = self.replay_step(step)
            if problem:
                issues.append(f"step {k}: {problem}")
            current = step.after
        if current != reduction.final:
            issues.append("final word does not match the last step")
        if reduction.outcome == TRIVIAL and reduction.final:
            issues.append("Trivial outcome with a nonempty final word")
        if reduction.outcome == NONTRIVIAL and (not reduction.final or self.spec.length(reduction.final) > self.bound):
            issues.append("Nontrivial outcome outside the bound N")
        return issues


# =============================================================================
# TRACES AND AREA CERTIFICATES
# =============================================================================

def trace_model(reducer: DehnReducer, reduction: Reduction) -> DehnTrace:
    spec = reducer.spec
    q = reducer.quotient
    steps = [
        DehnStepRecord(
            before=format_element(s.before, spec),
            conjugator=format_element(s.conjugator, spec),
            u_length=s.u_length,
            member=s.member,
            member_word=format_word(reducer.members[s.member], spec),
            prefix_length=s.prefix_length,
            y=format_element(s.y, spec),
            z=format_element(s.z, spec),
            after=format_element(s.after, spec),
            before_length=spec.length(s.before),
            after_length=spec.length(s.after),
        )
        for s in reduction.steps
    ]
    return DehnTrace(
        spec_text=q.spec_text,
        seeds=q.seed_literals,
        params=reducer.params,
        epsilon=reducer.epsilon,
        mu=reducer.mu,
        word=format_element(reduction.word, spec),
        steps=steps,
        outcome=reduction.outcome,
        final_word=format_element(reduction.final, spec),
        bound_n=reducer.bound,
        reason=reduction.reason,
    )


def dehn_reduce(
    quotient: QuotientSpec,
    word: NormalForm,
    epsilon: Optional[int] = None,
    mu: Optional[Fraction] = None,
) -> DehnTrace:
    """
    Raises:
        NotCertified, BudgetExceeded
    """
    reducer = DehnReducer(quotient, epsilon, mu)
    return trace_model(reducer, reducer.run(word))


def trace_to_area_certificate(reducer: DehnReducer, reduction: Reduction) -> AreaCertificate:
    """
    w = ∏ c_k·R_k·c_k⁻¹ with c_k = τ₁···τ_{k−1}·τ_k·Y_k; reported as
    f_k⁻¹·R_k·f_k with f_k = c_k⁻¹.
    """
    spec = reducer.spec
    q = reducer.quotient
    if reduction.outcome != TRIVIAL:
        return AreaCertificate(
            spec_text=q.spec_text, seeds=q.seed_literals,
            word=format_element(reduction.word, spec), k=None,
            verdict="unknown", source="none",
        )
    factors = []
    sigma = IDENTITY
    for step in reduction.steps:
        c = spec.mul(spec.mul(sigma, step.conjugator), step.y)
        factors.append(AreaFactor(
            conjugator=format_element(spec.inv(c), spec),
            member=step.member,
            relator=format_word(reducer.members[step.member], spec),
        ))
        sigma = spec.mul(sigma, step.conjugator)
    return AreaCertificate(
        spec_text=q.spec_text, seeds=q.seed_literals,
        word=format_element(reduction.word, spec), k=len(factors),
        factors=factors, verdict="found", source="trace",
    )


def area_product(quotient: QuotientSpec, factors: Sequence[Tuple[NormalForm, int]]) -> NormalForm:
    """∏ f⁻¹·R·f in the free product"""
    spec = quotient.base
    total = IDENTITY
    for f, r in factors:
        relator = quotient.relators.normal_forms[r]
        total = spec.mul(total, spec.conj(relator, f))
    return total


class AreaSearch:
    """Iterative deepening over products of conjugated relators"""

    def __init__(self, quotient: QuotientSpec, conj_len_max: int, budget: Optional[int] = None):
        self.quotient = quotient
        self.spec = quotient.base
        self.conj_len_max = conj_len_max
        self.budget = settings.BUDGET_NODES if budget is None else budget
        self.nodes = 0
        spec = self.spec
        self.member_index: Dict[NormalForm, int] = {}
        for r, nf in enumerate(quotient.relators.normal_forms):
            self.member_index.setdefault(nf, r)
        self.conjugates = []
        for f in ball(spec, conj_len_max).elements():
            for r, nf in enumerate(quotient.relators.normal_forms):
                p = spec.conj(nf, f)
                self.conjugates.append((spec.inv(p), f, r))

    def _single(self, target: NormalForm) -> Optional[List[Tuple[NormalForm, int]]]:
        core, t = cyclic_core(target, self.spec)
        r = self.member_index.get(core)
        if r is None or self.spec.length(t) > self.conj_len_max:
            return None
        return [(self.spec.inv(t), r)]

    def _search(self, target: NormalForm, depth: int) -> Optional[List[Tuple[NormalForm, int]]]:
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(f"area search exceeded {self.budget} nodes")
        if depth == 0:
            return [] if not target else None
        if depth == 1:
            return self._single(target)
        spec = self.spec
        options = []
        for i, (p_inv, f, r) in enumerate(self.conjugates):
            rest = spec.mul(p_inv, target)
            options.append((spec.length(rest), i, rest, f, r))
        options.sort(key=lambda o: (o[0], o[1]))
        for _, _, rest, f, r in options:
            found = self._search(rest, depth - 1)
            if found is not None:
                return [(f, r)] + found
        return None

    def run(self, target: NormalForm, k_max: int) -> Optional[List[Tuple[NormalForm, int]]]:
        for k in range(k_max + 1):
            found = self._search(target, k)
            if found is not None:
                return found
        return None


def area_certificate(quotient: QuotientSpec, word: NormalForm, factors, source: str) -> AreaCertificate:
    spec = quotient.base
    if factors is None:
        return AreaCertificate(
            spec_text=quotient.spec_text, seeds=quotient.seed_literals,
            word=format_element(word, spec), k=None, verdict="unknown", source="none",
        )
    return AreaCertificate(
        spec_text=quotient.spec_text,
        seeds=quotient.seed_literals,
        word=format_element(word, spec),
        k=len(factors),
        factors=[
            AreaFactor(
                conjugator=format_element(f, spec),
                member=r,
                relator=format_word(quotient.relators.members[r], spec),
            )
            for f, r in factors
        ],
        verdict="found",
        source=source,
    )


def relative_area_bounded(
    quotient: QuotientSpec,
    word: NormalForm,
    k_max: int,
    conj_len_max: int,
    budget: Optional[int] = None,
) -> AreaCertificate:
    """
    Minimal-k certificate w = ∏_{i ≤ k} f_i⁻¹·R_i·f_i with |f_i| ≤ conj_len_max,
    or verdict "unknown" when none exists within the bounds.

    Raises:
        BudgetExceeded, InfiniteFactorInBall
    """
    factors = AreaSearch(quotient, conj_len_max, budget).run(word, k_max)
    return area_certificate(quotient, word, factors, "search")


# =============================================================================
# PROBES
# =============================================================================

def _probe_rows(payload) -> Tuple[int, List[Tuple[NormalForm, NormalForm]]]:
    quotient, epsilon, mu, elements, rows = payload
    reducer = DehnReducer(quotient, epsilon, mu)
    spec = reducer.spec
    pairs, bad = 0, []
    for i in rows:
        g_inv = spec.inv(elements[i])
        for j, h in enumerate(elements):
            if i == j:
                continue
            pairs += 1
            if reducer.run(spec.mul(g_inv, h)).outcome == TRIVIAL:
                bad.append((elements[i], h))
    return pairs, bad


def injectivity_probe(quotient: QuotientSpec, n_bound: int, workers: Optional[int] = None) -> InjectivityReport:
    """
    Distinct elements of ball(⌈N/2⌉) stay distinct in G₁.

    Raises:
        NotCertified, BoundTooLarge
    """
    params = quotient.require_certified()
    limit = bound_N(params)
    if n_bound > limit:
        raise BoundTooLarge(f"N = {n_bound} exceeds ⌊λρ/2 − c − 2ε⌋ = {limit}")
    spec = quotient.base
    radius = max(0, (n_bound + 1) // 2)
    elements = ball(spec, radius).elements() if n_bound > 0 else [IDENTITY]
    workers = settings.WORKERS if workers is None else workers

    chunk = max(1, len(elements) // max(1, 4 * workers))
    payloads = [
        (quotient, params.epsilon, params.mu, elements, range(lo, min(lo + chunk, len(elements))))
        for lo in range(0, len(elements), chunk)
    ]
    pairs, violations = 0, []
    for count, bad in fan_out(_probe_rows, payloads, workers, desc="injectivity rows"):
        pairs += count
        violations.extend(bad)

    verdict = "pass" if not violations else "fail"
    if verdict == "pass":
        logger.info(f"✅ injectivity: {pairs} ordered pairs in ball({radius}) stay distinct")
    else:
        logger.error(f"❌ injectivity: {len(violations)} pairs collapse in the quotient")
    return InjectivityReport(
        spec_text=quotient.spec_text,
        seeds=quotient.seed_literals,
        params=params,
        bound=n_bound,
        radius=radius,
        pairs_checked=pairs,
        violations=[(format_element(g, spec), format_element(h, spec)) for g, h in violations],
        verdict=verdict,
    )


def torsion_probe(quotient: QuotientSpec, g: NormalForm, order_max: int) -> TorsionReport:
    """
    Smallest k ≤ order_max with g^k reducing to 1. Flags a counterexample
    when g has infinite order in G but collapses in G₁.

    Raises:
        NotCertified, BudgetExceeded
    """
    reducer = DehnReducer(quotient)
    spec = reducer.spec
    base_order = element_order(g, spec)
    outcomes, traces = [], []
    detected = None
    for k in range(1, order_max + 1):
        reduction = reducer.run(spec.power(g, k))
        outcomes.append(reduction.outcome)
        if reduction.outcome == TRIVIAL:
            detected = k
            traces.append(trace_model(reducer, reduction))
            break
    counterexample = detected is not None and base_order is None
    if counterexample:
        logger.error(f"❌ element of infinite order collapses to order {detected} in the quotient")
    return TorsionReport(
        spec_text=quotient.spec_text,
        seeds=quotient.seed_literals,
        params=reducer.params,
        element=format_element(g, spec),
        order_in_base=base_order,
        order_max=order_max,
        detected_order=detected,
        counterexample=counterexample,
        outcomes=outcomes,
        traces=traces,
    )


def isoperimetric_probe(
    quotient: QuotientSpec,
    samples: int,
    len_max: int,
    seed: Optional[int] = None,
    k_max: int = 3,
    conj_len_max: int = 0,
) -> IsoperimetricReport:
    """
    Random products of k ≤ k_max conjugated relators, conjugated once more
    by a random letter, with the area of each measured by bounded search.
    When the search gives up the construction itself is the certificate.
    """
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    spec = quotient.base
    conjugators = ball(spec, conj_len_max).elements()
    letters = [IDENTITY] + [(letter,) for letter in spec.alphabet()]
    members = quotient.relators.normal_forms
    search = AreaSearch(quotient, conj_len_max + 1)

    entries, certificates = [], []
    worst = 0.0
    for _ in tqdm(range(samples), desc="isoperimetric", disable=not settings.SHOW_PROGRESS):
        for _attempt in range(20):
            k = int(rng.integers(1, k_max + 1))
            h = letters[int(rng.integers(len(letters)))]
            factors = []
            for _i in range(k):
                f = conjugators[int(rng.integers(len(conjugators)))]
                factors.append((spec.mul(f, h), int(rng.integers(len(members)))))
            word = area_product(quotient, factors)
            if word and spec.length(word) <= len_max:
                break
        else:
            continue

        search.nodes = 0
        try:
            found = search.run(word, k)
            source = "search"
        except BudgetExceeded:
            found = None
        if found is None:
            found, source = factors, "construction"
        cert = area_certificate(quotient, word, found, source)
        length = spec.length(word)
        ratio = cert.k / length
        worst = max(worst, ratio)
        entries.append(IsoSample(word=cert.word, length=length, area=cert.k, source=source))
        certificates.append(cert)

    logger.info(f"📊 isoperimetric probe: {len(entries)} samples, max area/length {worst:.3f}")
    return IsoperimetricReport(
        spec_text=quotient.spec_text,
        seeds=quotient.seed_literals,
        samples=len(entries),
        len_max=len_max,
        seed=seed,
        max_ratio=worst,
        entries=entries,
        certificates=certificates,
    )
