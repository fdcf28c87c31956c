"""
Path geometry in Γ(G, X ∪ H)

A path is a base vertex plus a label word; its vertices are the
successive prefixes base·label[:j]. Component, connectedness and
backtracking tests follow the usual relatively hyperbolic definitions.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from sc_engine.errors import FactorMismatch, NotACycle
from sc_engine.groups import IDENTITY, GroupSpec, Letter, NormalForm, Word
from sc_engine.models import CycleAuditReport
from sc_engine.parsing import canonical_spec_text, format_element, format_word

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathRef:
    base: NormalForm
    label: Word

    @classmethod
    def from_word(cls, label: Sequence[Letter], base: NormalForm = IDENTITY) -> "PathRef":
        return cls(base=base, label=tuple(label))

    def __len__(self) -> int:
        return len(self.label)


@dataclass(frozen=True)
class Component:
    """Maximal run of letters from one factor: label[start:end]"""
    slot: int
    start: int
    end: int
    element: int
    vertex: NormalForm

    @property
    def is_trivial(self) -> bool:
        return self.element == 0


@dataclass(frozen=True)
class QuasiGeodesicResult:
    ok: bool
    worst_margin: Fraction
    worst_span: Tuple[int, int]


@dataclass(frozen=True)
class SubwordAudit:
    subwords: int
    qg_violations: int
    backtracking_violations: int
    worst_margin: Fraction
    worst_span: Tuple[int, int]


@dataclass(frozen=True)
class AuditEntry:
    component: Component
    isolated: bool

    @property
    def ok(self) -> bool:
        return not self.isolated or self.component.is_trivial


# =============================================================================
# COMPONENTS
# =============================================================================

def components(p: PathRef, spec: GroupSpec) -> List[Component]:
    out: List[Component] = []
    stack = list(p.base)
    i, n = 0, len(p.label)
    while i < n:
        slot = p.label[i][0]
        if slot >= spec.k:
            spec.push(stack, p.label[i])
            i += 1
            continue
        vertex = tuple(stack)
        factor = spec.factors[slot]
        element, j = 0, i
        while j < n and p.label[j][0] == slot:
            element = factor.mul(element, p.label[j][1])
            spec.push(stack, p.label[j])
            j += 1
        out.append(Component(slot=slot, start=i, end=j, element=element, vertex=vertex))
        i = j
    return out


def _in_factor(g: Sequence, slot: int) -> bool:
    return not g or (len(g) == 1 and g[0][0] == slot)


def are_connected(p: PathRef, i: int, j: int, spec: GroupSpec) -> bool:
    """Do components i and j of p lie in the same left coset of H_λ?"""
    comps = components(p, spec)
    for idx in (i, j):
        if not 0 <= idx < len(comps):
            raise FactorMismatch(f"component index {idx} out of range (path has {len(comps)})")
    s, t = comps[i], comps[j]
    if s.slot != t.slot:
        raise FactorMismatch(
            f"components {i} and {j} lie in different factors "
            f"({spec.slot_name(s.slot)} vs {spec.slot_name(t.slot)})"
        )
    if i == j:
        return True
    if i > j:
        s, t = t, s
    between = spec.reduce(p.label[s.end:t.start])
    return _in_factor(between, s.slot)


def connected_pairs(p: PathRef, spec: GroupSpec, comps: Optional[List[Component]] = None) -> List[Tuple[int, int]]:
    """All pairs (i, j), i < j, of connected components, in lexicographic order"""
    comps = components(p, spec) if comps is None else comps
    push = spec.push
    pairs: List[Tuple[int, int]] = []
    for i, s in enumerate(comps):
        stack: list = []
        pos = s.end
        for j in range(i + 1, len(comps)):
            t = comps[j]
            for letter in p.label[pos:t.start]:
                push(stack, letter)
            if t.slot == s.slot and _in_factor(stack, s.slot):
                pairs.append((i, j))
            for letter in p.label[t.start:t.end]:
                push(stack, letter)
            pos = t.end
    return pairs


def is_without_backtracking(p: PathRef, spec: GroupSpec) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """No two distinct components connected; returns the first offending pair"""
    pairs = connected_pairs(p, spec)
    if pairs:
        return False, pairs[0]
    return True, None


def components_connected_across(p: PathRef, q: PathRef, spec: GroupSpec) -> List[Tuple[int, int]]:
    """Pairs (s, t) with component s of p connected to component t of q"""
    out = []
    q_comps = components(q, spec)
    for i, s in enumerate(components(p, spec)):
        for j, t in enumerate(q_comps):
            if s.slot == t.slot and _in_factor(spec.mul(spec.inv(s.vertex), t.vertex), s.slot):
                out.append((i, j))
    return out


# =============================================================================
# QUASI-GEODESICS
# =============================================================================

def _distance_rows(label: Word, spec: GroupSpec) -> List[List[int]]:
    """rows[i][m] = |label[i:i+m]|"""
    return [spec.running_lengths(label[i:]) for i in range(len(label))]


def is_quasi_geodesic(p: PathRef, lam: Fraction, c: Fraction, spec: GroupSpec) -> QuasiGeodesicResult:
    """
    Every subpath q satisfies d(q₋, q₊) ≥ λ·ℓ(q) − c.

    The worst margin d − (λℓ − c) is reported with its span; ties keep
    the leftmost, shortest span.
    """
    lam, c = Fraction(lam), Fraction(c)
    worst, span = c, (0, 0)
    for i, row in enumerate(_distance_rows(p.label, spec)):
        for m in range(1, len(row)):
            margin = row[m] - (lam * m - c)
            if margin < worst:
                worst, span = margin, (i, i + m)
    return QuasiGeodesicResult(ok=worst >= 0, worst_margin=worst, worst_span=span)


def is_k_local_geodesic(p: PathRef, k: int, spec: GroupSpec) -> Tuple[bool, Optional[Tuple[int, int]]]:
    """Every subpath of length ≤ k is geodesic"""
    n = len(p.label)
    for i in range(n):
        lengths = spec.running_lengths(p.label[i:i + k])
        for m in range(1, len(lengths)):
            if lengths[m] != m:
                return False, (i, i + m)
    return True, None


def _count_containing(intervals: List[Tuple[int, int]], n: int) -> int:
    """Number of spans [i, j) with i ≤ a and j ≥ b for some (a, b)"""
    reach = [n + 1] * (n + 1)
    for a, b in intervals:
        reach[a] = min(reach[a], b)
    count, best = 0, n + 1
    for i in range(n - 1, -1, -1):
        best = min(best, reach[i])
        if best <= n:
            count += n - best + 1
    return count


def subword_audit(label: Word, lam: Fraction, c: Fraction, spec: GroupSpec) -> SubwordAudit:
    """
    Backtracking and (λ, c)-quasi-geodesicity for every subword at once.

    A subword fails quasi-geodesicity exactly when it contains a failing
    span, and backtracks exactly when it meets both members of a
    connected pair of the whole word.
    """
    lam, c = Fraction(lam), Fraction(c)
    n = len(label)
    bad_spans: List[Tuple[int, int]] = []
    worst, span = c, (0, 0)
    for i, row in enumerate(_distance_rows(label, spec)):
        for m in range(1, len(row)):
            margin = row[m] - (lam * m - c)
            if margin < 0:
                bad_spans.append((i, i + m))
            if margin < worst:
                worst, span = margin, (i, i + m)

    path = PathRef.from_word(label)
    comps = components(path, spec)
    meeting = [(comps[i].end - 1, comps[j].start + 1) for i, j in connected_pairs(path, spec, comps)]
    return SubwordAudit(
        subwords=n * (n + 1) // 2,
        qg_violations=_count_containing(bad_spans, n),
        backtracking_violations=_count_containing(meeting, n),
        worst_margin=worst,
        worst_span=span,
    )


# =============================================================================
# CYCLES
# =============================================================================

def isolated_component_audit(cycle: PathRef, spec: GroupSpec) -> List[AuditEntry]:
    """
    Flag isolated components of a cycle. In a free product every isolated
    component of a cycle represents the identity.

    Raises:
        NotACycle when the label is nontrivial
    """
    if spec.reduce(cycle.label) != IDENTITY:
        raise NotACycle("label does not evaluate to the identity")
    comps = components(cycle, spec)
    linked = set()
    for i, j in connected_pairs(cycle, spec, comps):
        linked.update((i, j))
    entries = [AuditEntry(component=comp, isolated=idx not in linked) for idx, comp in enumerate(comps)]
    bad = [e for e in entries if not e.ok]
    if bad:
        logger.error(f"❌ {len(bad)} isolated nontrivial components in cycle of length {len(cycle)}")
    return entries


def random_cycle_audit(spec: GroupSpec, cycles: int, length: int, seed: int) -> CycleAuditReport:
    """
    Audit random cycles w·nf(w)⁻¹ with w a uniform word of the given
    length over X ∪ H.

    Raises:
        InfiniteFactorInBall
    """
    rng = np.random.default_rng(seed)
    alphabet = spec.alphabet()
    total = isolated = 0
    bad: List[Dict[str, Any]] = []
    for _ in range(cycles):
        word = tuple(alphabet[int(i)] for i in rng.integers(len(alphabet), size=length))
        label = word + spec.letters_of(spec.inv(spec.reduce(word)))
        entries = isolated_component_audit(PathRef.from_word(label), spec)
        total += len(entries)
        isolated += sum(1 for e in entries if e.isolated)
        for e in entries:
            if not e.ok:
                bad.append({
                    "cycle": format_word(label, spec),
                    "span": [e.component.start, e.component.end],
                    "element": format_element(((e.component.slot, e.component.element),), spec),
                })
    verdict = "pass" if not bad else "fail"
    logger.info(f"📊 audited {cycles} cycles: {total} components, {isolated} isolated, {len(bad)} nontrivial isolated")
    return CycleAuditReport(
        spec_text=canonical_spec_text(spec),
        cycles=cycles,
        components=total,
        isolated=isolated,
        isolated_nontrivial=bad,
        seed=seed,
        verdict=verdict,
    )
