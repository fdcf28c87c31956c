"""
Free product arithmetic for G = H_1 * ... * H_k * F(X)

Implements:
- Factor arithmetic for cyclic, table and infinite cyclic factors
- Normal forms (alternating syllables) and multiplication
- The relative word metric over X ∪ H
- Breadth-first balls in the Cayley graph Γ(G, X ∪ H)

A syllable or letter is a pair (slot, value). Slots below k name a
parabolic factor and carry an element id (the identity is always 0);
slots from k upward name a free generator and carry a nonzero exponent.
Letters are syllables whose free exponent is ±1.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from sc_engine.errors import (
    InfiniteFactorInBall,
    InvalidTable,
    QuotientNotDecidable,
    RadiusCapExceeded,
    SpecMismatch,
)
from sc_engine.settings import settings

logger = logging.getLogger(__name__)

Syllable = Tuple[int, int]
Letter = Tuple[int, int]
Word = Tuple[Letter, ...]
NormalForm = Tuple[Syllable, ...]

IDENTITY: NormalForm = ()


class FactorKind(str, Enum):
    CYCLIC = "cyclic"
    TABLE = "table"
    INFINITE_CYCLIC = "zcyclic"


# =============================================================================
# TABLE VALIDATION
# =============================================================================

def validate_table(rows: Sequence[Sequence[int]]) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[int, ...]]:
    """
    Check a Cayley table for the group axioms and relabel it so the
    identity is element 0.

    Returns:
        (internal table, labels) where labels[i] is the symbol the caller
        used for internal element i

    Raises:
        InvalidTable naming the first axiom that fails
    """
    try:
        table = np.asarray(rows, dtype=np.int64)
    except (TypeError, ValueError) as e:
        raise InvalidTable(f"table is not a rectangular integer array: {e}")

    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise InvalidTable(f"table must be square, got shape {table.shape}")
    m = table.shape[0]
    if m < 2:
        raise InvalidTable(f"order {m} < 2")
    if m > settings.TABLE_ORDER_CAP:
        raise InvalidTable(f"order {m} exceeds table cap {settings.TABLE_ORDER_CAP}")
    if table.min() < 0 or table.max() >= m:
        raise InvalidTable(f"entries must lie in 0..{m - 1}")

    ids = np.arange(m)
    candidates = [e for e in range(m) if np.array_equal(table[e], ids) and np.array_equal(table[:, e], ids)]
    if not candidates:
        raise InvalidTable("no identity element")
    e = candidates[0]

    if not all(np.any(table[i] == e) for i in range(m)):
        raise InvalidTable("some element has no inverse")

    for i in range(m):
        if len(np.unique(table[i])) != m or len(np.unique(table[:, i])) != m:
            raise InvalidTable(f"row or column {i} is not a permutation")

    # (ij)k against i(jk) for every triple
    left = table[table, :]
    right = table[ids[:, None, None], table[None, :, :]]
    if not np.array_equal(left, right):
        bad = np.argwhere(left != right)[0]
        raise InvalidTable(f"not associative at ({bad[0]}, {bad[1]}, {bad[2]})")

    # swap e and 0; the permutation is its own inverse
    perm = ids.copy()
    perm[e], perm[0] = 0, e
    relabeled = np.empty_like(table)
    relabeled[np.ix_(perm, perm)] = perm[table]
    internal = tuple(tuple(int(v) for v in row) for row in relabeled)
    labels = tuple(int(v) for v in perm)
    return internal, labels


# =============================================================================
# FACTORS
# =============================================================================

@dataclass(frozen=True)
class FactorSpec:
    """One parabolic factor H_λ"""
    kind: FactorKind
    index: int
    name: str
    order: Optional[int] = None
    rows: Optional[Tuple[Tuple[int, ...], ...]] = None

    @cached_property
    def _relabeled(self) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[int, ...]]:
        return validate_table(self.rows)

    @cached_property
    def table(self) -> Tuple[Tuple[int, ...], ...]:
        return self._relabeled[0]

    @cached_property
    def labels(self) -> Tuple[int, ...]:
        if self.kind is FactorKind.TABLE:
            return self._relabeled[1]
        return tuple(range(self.order or 0))

    @cached_property
    def inverses(self) -> Tuple[int, ...]:
        return tuple(row.index(0) for row in self.table)

    @property
    def is_finite(self) -> bool:
        return self.kind is not FactorKind.INFINITE_CYCLIC

    def mul(self, u: int, v: int) -> int:
        if self.kind is FactorKind.CYCLIC:
            return (u + v) % self.order
        if self.kind is FactorKind.TABLE:
            return self.table[u][v]
        return u + v

    def inv(self, u: int) -> int:
        if self.kind is FactorKind.CYCLIC:
            return (-u) % self.order
        if self.kind is FactorKind.TABLE:
            return self.inverses[u]
        return -u

    def power(self, u: int, n: int) -> int:
        if self.kind is FactorKind.CYCLIC:
            return (u * n) % self.order
        if self.kind is FactorKind.INFINITE_CYCLIC:
            return u * n
        base = u if n >= 0 else self.inv(u)
        result = 0
        for _ in range(abs(n) % self.order):
            result = self.mul(result, base)
        return result

    def is_valid(self, u: int) -> bool:
        if self.kind is FactorKind.INFINITE_CYCLIC:
            return isinstance(u, int)
        return 0 <= u < self.order

    def elements(self) -> List[int]:
        """Nontrivial element ids, finite factors only"""
        if not self.is_finite:
            raise InfiniteFactorInBall(f"factor {self.name} is infinite cyclic")
        return list(range(1, self.order))

    def element_order(self, u: int) -> Optional[int]:
        """Order of u in H_λ; None means infinite"""
        if u == 0:
            return 1
        if self.kind is FactorKind.CYCLIC:
            return self.order // gcd(u, self.order)
        if self.kind is FactorKind.INFINITE_CYCLIC:
            return None
        k, acc = 1, u
        while acc != 0:
            acc = self.mul(acc, u)
            k += 1
        return k


# =============================================================================
# GROUP SPECIFICATION
# =============================================================================

@dataclass(frozen=True)
class GroupSpec:
    """
    A free product H_1 * ... * H_k * F(X), optionally with extra relators.

    With extra relators the spec names the quotient G_1; arithmetic is
    only available on the underlying free product.
    """
    factors: Tuple[FactorSpec, ...]
    free_names: Tuple[str, ...] = ()
    extra_relators: Tuple[Word, ...] = field(default=())

    @cached_property
    def k(self) -> int:
        return len(self.factors)

    @property
    def slot_count(self) -> int:
        return self.k + len(self.free_names)

    @property
    def is_pure(self) -> bool:
        return not self.extra_relators

    @property
    def all_finite(self) -> bool:
        return all(f.is_finite for f in self.factors)

    def is_parabolic(self, slot: int) -> bool:
        return slot < self.k

    def slot_name(self, slot: int) -> str:
        if slot < self.k:
            return self.factors[slot].name
        return self.free_names[slot - self.k]

    def slot_of_index(self, index: int) -> int:
        """Slot of the factor whose user-facing index is λ"""
        for slot, factor in enumerate(self.factors):
            if factor.index == index:
                return slot
        raise SpecMismatch(f"no factor with index {index}")

    def without_relators(self) -> "GroupSpec":
        return GroupSpec(factors=self.factors, free_names=self.free_names)

    def require_pure(self) -> None:
        if not self.is_pure:
            raise QuotientNotDecidable(
                f"spec carries {len(self.extra_relators)} extra relators; "
                "use the quotient commands for arithmetic in the quotient"
            )

    def require_finite(self) -> None:
        for f in self.factors:
            if not f.is_finite:
                raise InfiniteFactorInBall(f"factor {f.name} is infinite cyclic")

    # -------------------------------------------------------------------------
    # Syllable stack
    # -------------------------------------------------------------------------

    def _merge(self, slot: int, a: int, b: int) -> int:
        if slot < self.k:
            return self.factors[slot].mul(a, b)
        return a + b

    def push(self, stack: List[Syllable], syllable: Syllable) -> int:
        """
        Multiply a normal-form stack on the right by one syllable, in place.

        Returns the change in relative length.
        """
        slot, value = syllable
        parabolic = slot < self.k
        if stack and stack[-1][0] == slot:
            top = stack[-1][1]
            merged = self._merge(slot, top, value)
            if merged == 0:
                stack.pop()
                return -1 if parabolic else -abs(top)
            stack[-1] = (slot, merged)
            return 0 if parabolic else abs(merged) - abs(top)
        stack.append(syllable)
        return 1 if parabolic else abs(value)

    def reduce(self, letters: Iterable[Syllable]) -> NormalForm:
        stack: List[Syllable] = []
        push = self.push
        for syllable in letters:
            if syllable[1] == 0:
                continue
            push(stack, syllable)
        return tuple(stack)

    def mul(self, u: NormalForm, v: NormalForm) -> NormalForm:
        stack = list(u)
        push = self.push
        for syllable in v:
            push(stack, syllable)
        return tuple(stack)

    def inv(self, u: NormalForm) -> NormalForm:
        k = self.k
        return tuple(
            (slot, self.factors[slot].inv(value) if slot < k else -value)
            for slot, value in reversed(u)
        )

    def conj(self, g: NormalForm, t: NormalForm) -> NormalForm:
        """t⁻¹ g t"""
        return self.mul(self.mul(self.inv(t), g), t)

    def power(self, g: NormalForm, n: int) -> NormalForm:
        base = g if n >= 0 else self.inv(g)
        result: NormalForm = IDENTITY
        square = base
        n = abs(n)
        while n:
            if n & 1:
                result = self.mul(result, square)
            n >>= 1
            if n:
                square = self.mul(square, square)
        return result

    def length(self, g: Iterable[Syllable]) -> int:
        k = self.k
        return sum(1 if slot < k else abs(value) for slot, value in g)

    def letters_of(self, g: NormalForm) -> Word:
        """The geodesic letter string spelling a normal form"""
        out: List[Letter] = []
        k = self.k
        for slot, value in g:
            if slot < k:
                out.append((slot, value))
            else:
                step = 1 if value > 0 else -1
                out.extend([(slot, step)] * abs(value))
        return tuple(out)

    def word_inverse(self, word: Sequence[Letter]) -> Word:
        k = self.k
        return tuple(
            (slot, self.factors[slot].inv(value) if slot < k else -value)
            for slot, value in reversed(word)
        )

    def running_lengths(self, letters: Sequence[Letter], start: NormalForm = IDENTITY) -> List[int]:
        """
        Relative lengths of start·letters[:j] for j = 0..len(letters).
        """
        stack = list(start)
        current = self.length(start)
        out = [current]
        push = self.push
        for letter in letters:
            current += push(stack, letter)
            out.append(current)
        return out

    def alphabet(self) -> Tuple[Letter, ...]:
        """All letters of X ∪ H, finite factors only"""
        self.require_finite()
        letters: List[Letter] = []
        for slot, factor in enumerate(self.factors):
            letters.extend((slot, v) for v in factor.elements())
        for j in range(len(self.free_names)):
            letters.append((self.k + j, 1))
            letters.append((self.k + j, -1))
        return tuple(letters)

    def check_element(self, g: Sequence[Syllable]) -> None:
        """Raise SpecMismatch unless g is a normal form of this spec"""
        previous = None
        for syllable in g:
            if not (isinstance(syllable, tuple) and len(syllable) == 2):
                raise SpecMismatch(f"malformed syllable {syllable!r}")
            slot, value = syllable
            if not (0 <= slot < self.slot_count):
                raise SpecMismatch(f"slot {slot} outside spec with {self.slot_count} slots")
            if value == 0:
                raise SpecMismatch("trivial syllable inside a normal form")
            if slot < self.k and not self.factors[slot].is_valid(value):
                raise SpecMismatch(f"element {value} not in factor {self.factors[slot].name}")
            if slot == previous:
                raise SpecMismatch(f"adjacent syllables share slot {slot}")
            previous = slot


# =============================================================================
# PUBLIC OPERATIONS
# =============================================================================

def normal_form(word: Sequence[Letter], spec: GroupSpec) -> NormalForm:
    """
    Unique normal form of a word over X ∪ H.

    Raises:
        QuotientNotDecidable, SpecMismatch
    """
    spec.require_pure()
    for slot, value in word:
        if not (0 <= slot < spec.slot_count):
            raise SpecMismatch(f"letter slot {slot} outside spec")
        if slot < spec.k and not spec.factors[slot].is_valid(value):
            raise SpecMismatch(f"element {value} not in factor {spec.factors[slot].name}")
    return spec.reduce(word)


def multiply(u: NormalForm, v: NormalForm, spec: GroupSpec) -> NormalForm:
    spec.check_element(u)
    spec.check_element(v)
    return spec.mul(u, v)


def invert(u: NormalForm, spec: GroupSpec) -> NormalForm:
    spec.check_element(u)
    return spec.inv(u)


def conjugate(g: NormalForm, t: NormalForm, spec: GroupSpec) -> NormalForm:
    spec.check_element(g)
    spec.check_element(t)
    return spec.conj(g, t)


def relative_length(g: NormalForm, spec: GroupSpec) -> int:
    """|g|_{X∪H}: parabolic syllables count 1, free syllables x^k count |k|"""
    spec.require_pure()
    spec.check_element(g)
    return spec.length(g)


def element_order(g: NormalForm, spec: GroupSpec) -> Optional[int]:
    """
    Order of g in the free product; None when infinite.

    Elements of finite order are conjugate into a factor.
    """
    spec.check_element(g)
    if not g:
        return 1
    core = g
    while len(core) >= 2 and core[0][0] == core[-1][0]:
        core = spec.conj(core, (core[0],))
    if len(core) != 1 or core[0][0] >= spec.k:
        return None
    slot, value = core[0]
    return spec.factors[slot].element_order(value)


# =============================================================================
# BALLS
# =============================================================================

@dataclass
class Ball:
    """Elements at distance ≤ radius from 1, with BFS parents"""
    radius: int
    distances: Dict[NormalForm, int]
    parents: Dict[NormalForm, List[Tuple[NormalForm, Letter]]]

    def elements(self) -> List[NormalForm]:
        return sorted(self.distances, key=lambda g: (self.distances[g], g))

    def sphere(self, r: int) -> List[NormalForm]:
        return sorted(g for g, d in self.distances.items() if d == r)

    def __len__(self) -> int:
        return len(self.distances)

    def __contains__(self, g: NormalForm) -> bool:
        return g in self.distances


def ball(spec: GroupSpec, radius: int, cap: Optional[int] = None) -> Ball:
    """
    Breadth-first ball of the given radius in Γ(G, X ∪ H).

    Raises:
        RadiusCapExceeded, InfiniteFactorInBall, QuotientNotDecidable
    """
    cap = settings.RADIUS_CAP if cap is None else cap
    if radius < 0:
        raise RadiusCapExceeded(f"radius {radius} is negative")
    if radius > cap:
        raise RadiusCapExceeded(f"radius {radius} exceeds cap {cap}")
    spec.require_pure()

    distances: Dict[NormalForm, int] = {IDENTITY: 0}
    parents: Dict[NormalForm, List[Tuple[NormalForm, Letter]]] = {IDENTITY: []}
    if radius == 0:
        return Ball(radius=0, distances=distances, parents=parents)

    letters = spec.alphabet()
    frontier = [IDENTITY]
    for d in range(radius):
        next_level: List[NormalForm] = []
        for g in sorted(frontier):
            for letter in letters:
                stack = list(g)
                spec.push(stack, letter)
                h = tuple(stack)
                seen = distances.get(h)
                if seen is None:
                    distances[h] = d + 1
                    parents[h] = [(g, letter)]
                    next_level.append(h)
                elif seen == d + 1:
                    parents[h].append((g, letter))
        frontier = next_level

    logger.debug(f"📊 ball radius {radius}: {len(distances)} elements")
    return Ball(radius=radius, distances=distances, parents=parents)
