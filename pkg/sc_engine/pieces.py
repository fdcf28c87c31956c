"""
Small cancellation over free products: symmetrized sets, pieces and the
C(ε, μ, λ, c, ρ) / C₁ certificates

Pieces are prefix based. An ε-piece of R ∈ R is a prefix U of R with a
prefix U′ of some R′ ∈ R and bridges Y, Z (|Y|, |Z| ≤ ε) such that
U′ = Y·U·Z in G and Y·R·Y⁻¹ ≠ R′. An ε′-piece of R is a prefix U with
a later subword U′ of the same R, R ≡ U V U′ V′, and U′ = Y·U^{±1}·Z.

Scans are meet-in-the-middle: every scanned prefix U is pushed through
the bridge ball once (nf(Y·U) into a dict), and every candidate U′ is
probed with nf(U′·Z⁻¹).
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import ceil
from typing import Dict, List, Optional, Sequence, Tuple

from tqdm import tqdm

from sc_engine.errors import BudgetExceeded, EmptySeed
from sc_engine.groups import GroupSpec, NormalForm, Word, ball
from sc_engine.models import (
    ClauseFailure,
    PieceRecord,
    PieceScanReport,
    SCCertificate,
    SCParams,
    ScanStatistics,
)
from sc_engine.parsing import canonical_spec_text, format_element, format_word
from sc_engine.paths import PathRef, is_quasi_geodesic
from sc_engine.settings import settings

logger = logging.getLogger(__name__)

EPSILON = "epsilon"
EPSILON_PRIME = "epsilon_prime"


# =============================================================================
# SYMMETRIZED SETS
# =============================================================================

@dataclass(frozen=True)
class SymmetrizedSet:
    """All cyclic shifts of the seeds and their inverses, without repeats"""
    spec: GroupSpec
    seeds: Tuple[Word, ...]
    members: Tuple[Word, ...]
    origins: Tuple[Tuple[int, int, int], ...]

    @cached_property
    def index(self) -> Dict[Word, int]:
        return {m: i for i, m in enumerate(self.members)}

    @cached_property
    def normal_forms(self) -> Tuple[NormalForm, ...]:
        return tuple(self.spec.reduce(m) for m in self.members)

    @property
    def min_length(self) -> int:
        return min(len(m) for m in self.members)

    def __len__(self) -> int:
        return len(self.members)


def symmetrize(seeds: Sequence[Sequence], spec: GroupSpec) -> SymmetrizedSet:
    """
    Close the seeds under cyclic shifts and inversion.

    origins[i] = (seed index, sign, shift) of the first way member i arose.

    Raises:
        EmptySeed
    """
    if not seeds:
        raise EmptySeed("no seed words given")
    members: List[Word] = []
    origins: List[Tuple[int, int, int]] = []
    seen = set()
    for s_idx, seed in enumerate(seeds):
        seed = tuple(seed)
        if not seed:
            raise EmptySeed(f"seed {s_idx} is the empty word")
        for sign in (1, -1):
            word = seed if sign == 1 else spec.word_inverse(seed)
            for shift in range(len(word)):
                rotated = word[shift:] + word[:shift]
                if rotated not in seen:
                    seen.add(rotated)
                    members.append(rotated)
                    origins.append((s_idx, sign, shift))
    return SymmetrizedSet(
        spec=spec,
        seeds=tuple(tuple(s) for s in seeds),
        members=tuple(members),
        origins=tuple(origins),
    )


# =============================================================================
# PIECES
# =============================================================================

@dataclass(frozen=True, order=True)
class Piece:
    """U = member[u_start:u_end], U′ = member_prime[up_start:up_end]"""
    kind: str
    member: int
    u_start: int
    u_end: int
    member_prime: int
    up_start: int
    up_end: int
    y: NormalForm = field(compare=False)
    z: NormalForm = field(compare=False)
    orientation: int = 1

    @property
    def u_length(self) -> int:
        return self.u_end - self.u_start

    @property
    def u_prime_length(self) -> int:
        return self.up_end - self.up_start

    @property
    def size(self) -> int:
        return max(self.u_length, self.u_prime_length)


class PieceScanner:
    """Meet-in-the-middle piece search over one symmetrized set"""

    def __init__(self, rset: SymmetrizedSet, epsilon: int, budget: Optional[int] = None):
        self.rset = rset
        self.spec = rset.spec
        self.epsilon = epsilon
        self.budget = settings.SCAN_BUDGET if budget is None else budget
        self.bridges: List[NormalForm] = ball(self.spec, epsilon).elements()
        self.bridge_index = {g: i for i, g in enumerate(self.bridges)}
        self.bridge_inverses = [self.spec.inv(g) for g in self.bridges]
        self.stats = ScanStatistics(members=len(rset))
        self._conjugates: Dict[Tuple[int, int], NormalForm] = {}

    @cached_property
    def prefixes(self) -> List[List[NormalForm]]:
        """prefixes[r][l] = nf(member_r[:l])"""
        out = []
        for m in self.rset.members:
            stack: list = []
            row = [()]
            for letter in m:
                self.spec.push(stack, letter)
                row.append(tuple(stack))
            out.append(row)
        return out

    def _spend(self, n: int = 1) -> None:
        self.stats.normal_forms += n
        if self.stats.normal_forms > self.budget:
            raise BudgetExceeded(f"piece scan exceeded {self.budget} normal-form operations")

    def _conjugate(self, r: int, yi: int) -> NormalForm:
        """nf(Y R Y⁻¹)"""
        key = (r, yi)
        if key not in self._conjugates:
            spec = self.spec
            y = self.bridges[yi]
            self._conjugates[key] = spec.mul(spec.mul(y, self.rset.normal_forms[r]), self.bridge_inverses[yi])
        return self._conjugates[key]

    def _inverse_index(self, i: int) -> int:
        return self.bridge_index[self.bridge_inverses[i]]

    # -------------------------------------------------------------------------
    # ε-pieces
    # -------------------------------------------------------------------------

    def epsilon_pieces(self, min_len: int = 1) -> List[Piece]:
        """
        Every ε-piece whose U or U′ has at least min_len letters, plus the
        mirror of each one found.
        """
        spec, bridges = self.spec, self.bridges
        table: Dict[NormalForm, List[Tuple[int, int, int]]] = {}
        for r, row in enumerate(self.prefixes):
            for l in range(max(min_len, 1), len(row)):
                u = row[l]
                for yi, y in enumerate(bridges):
                    table.setdefault(spec.mul(y, u), []).append((r, l, yi))
                self._spend(len(bridges))

        best: Dict[Tuple[int, int, int, int], Tuple[int, int]] = {}
        members = self.rset.normal_forms
        for r2, row in enumerate(tqdm(self.prefixes, desc="ε-probe", disable=not settings.SHOW_PROGRESS)):
            for l2 in range(1, len(row)):
                u_prime = row[l2]
                for zi, z_inv in enumerate(self.bridge_inverses):
                    self.stats.probes += 1
                    hits = table.get(spec.mul(u_prime, z_inv))
                    if not hits:
                        continue
                    for r, l, yi in hits:
                        if self._conjugate(r, yi) == members[r2]:
                            continue
                        self.stats.matches += 1
                        key = (r, l, r2, l2)
                        if key not in best or (yi, zi) < best[key]:
                            best[key] = (yi, zi)
                self._spend(len(bridges))

        for (r, l, r2, l2), (yi, zi) in list(best.items()):
            mirror = (r2, l2, r, l)
            cand = (self._inverse_index(yi), self._inverse_index(zi))
            if mirror not in best or cand < best[mirror]:
                best[mirror] = cand

        pieces = [
            Piece(EPSILON, r, 0, l, r2, 0, l2, bridges[yi], bridges[zi])
            for (r, l, r2, l2), (yi, zi) in best.items()
        ]
        return sorted(pieces)

    # -------------------------------------------------------------------------
    # ε′-pieces
    # -------------------------------------------------------------------------

    def epsilon_prime_pieces(self, min_len: int = 1) -> List[Piece]:
        """Every ε′-piece whose U or U′ has at least min_len letters"""
        spec, bridges = self.spec, self.bridges
        best: Dict[Tuple[int, int, int, int, int], Tuple[int, int]] = {}
        start = max(min_len, 1)

        for r, m in enumerate(tqdm(self.rset.members, desc="ε′-scan", disable=not settings.SHOW_PROGRESS)):
            n = len(m)
            row = self.prefixes[r]
            table: Dict[NormalForm, List[Tuple[int, int, int]]] = {}
            for l in range(start, n):
                u = row[l]
                for sign, base in ((1, u), (-1, spec.inv(u))):
                    for yi, y in enumerate(bridges):
                        table.setdefault(spec.mul(y, base), []).append((l, sign, yi))
                self._spend(2 * len(bridges))
            if not table:
                continue

            for s in range(start, n):
                stack: list = []
                for e in range(s + 1, n + 1):
                    spec.push(stack, m[e - 1])
                    u_prime = tuple(stack)
                    for zi, z_inv in enumerate(self.bridge_inverses):
                        self.stats.probes += 1
                        hits = table.get(spec.mul(u_prime, z_inv))
                        if not hits:
                            continue
                        for l, sign, yi in hits:
                            if l > s:
                                continue
                            self.stats.matches += 1
                            key = (r, l, s, e, sign)
                            if key not in best or (yi, zi) < best[key]:
                                best[key] = (yi, zi)
                    self._spend(len(bridges))

        for (r, l, s, e, sign), (yi, zi) in list(best.items()):
            m = self.rset.members[r]
            n = len(m)
            r2 = self.rset.index[m[s:] + m[:s]]
            if sign == 1:
                cand = (self._inverse_index(yi), self._inverse_index(zi))
            else:
                cand = (zi, yi)
            mirror = (r2, e - s, n - s, n - s + l, sign)
            if mirror not in best or cand < best[mirror]:
                best[mirror] = cand

        pieces = [
            Piece(EPSILON_PRIME, r, 0, l, r, s, e, bridges[yi], bridges[zi], sign)
            for (r, l, s, e, sign), (yi, zi) in best.items()
        ]
        return sorted(pieces)


def find_epsilon_pieces(rset: SymmetrizedSet, epsilon: int, min_len: int = 1) -> List[Piece]:
    return PieceScanner(rset, epsilon).epsilon_pieces(min_len)


def find_epsilon_prime_pieces(rset: SymmetrizedSet, epsilon: int, min_len: int = 1) -> List[Piece]:
    return PieceScanner(rset, epsilon).epsilon_prime_pieces(min_len)


def verify_piece(piece: Piece, rset: SymmetrizedSet, epsilon: int) -> bool:
    """Recheck a piece from scratch"""
    spec = rset.spec
    if spec.length(piece.y) > epsilon or spec.length(piece.z) > epsilon:
        return False
    r_word = rset.members[piece.member]
    rp_word = rset.members[piece.member_prime]
    u = spec.reduce(r_word[piece.u_start:piece.u_end])
    u_prime = spec.reduce(rp_word[piece.up_start:piece.up_end])
    if piece.u_length < 1 or piece.u_prime_length < 1:
        return False
    if piece.kind == EPSILON:
        if piece.u_start != 0 or piece.up_start != 0:
            return False
        if spec.mul(spec.mul(piece.y, u), piece.z) != u_prime:
            return False
        conj = spec.mul(spec.mul(piece.y, rset.normal_forms[piece.member]), spec.inv(piece.y))
        return conj != rset.normal_forms[piece.member_prime]
    if piece.member != piece.member_prime or piece.u_start != 0:
        return False
    if piece.up_start < piece.u_end or piece.up_end > len(r_word):
        return False
    base = u if piece.orientation == 1 else spec.inv(u)
    return spec.mul(spec.mul(piece.y, base), piece.z) == u_prime


def piece_record(piece: Piece, rset: SymmetrizedSet, violates: bool = False) -> PieceRecord:
    spec = rset.spec
    r_word = rset.members[piece.member]
    rp_word = rset.members[piece.member_prime]
    return PieceRecord(
        kind=piece.kind,
        member=piece.member,
        member_prime=piece.member_prime,
        u=format_word(r_word[piece.u_start:piece.u_end], spec),
        u_prime=format_word(rp_word[piece.up_start:piece.up_end], spec),
        u_span=(piece.u_start, piece.u_end),
        u_prime_span=(piece.up_start, piece.up_end),
        y=format_element(piece.y, spec),
        z=format_element(piece.z, spec),
        orientation=piece.orientation,
        u_length=piece.u_length,
        u_prime_length=piece.u_prime_length,
        violates=violates,
    )


# =============================================================================
# CERTIFICATES
# =============================================================================

def pruning_threshold(rset: SymmetrizedSet, mu: Fraction) -> int:
    """Only pieces with a side of at least ⌈μ·min‖R‖⌉ letters can violate"""
    return max(1, ceil(Fraction(mu) * rset.min_length))


def _violates(piece: Piece, rset: SymmetrizedSet, mu: Fraction) -> bool:
    return piece.size >= mu * len(rset.members[piece.member])


class SmallCancellationChecker:
    """Builds C / C₁ certificates for one symmetrized set"""

    def __init__(self, rset: SymmetrizedSet, params: SCParams, prune: bool = True):
        self.rset = rset
        self.params = params
        self.prune = prune

    def _clause_failures(self) -> List[ClauseFailure]:
        spec, params = self.rset.spec, self.params
        failures = []
        for r, m in enumerate(self.rset.members):
            if len(m) < params.rho:
                failures.append(ClauseFailure(
                    clause=1, member=r, member_word=format_word(m, spec),
                    detail=f"‖R‖ = {len(m)} < ρ = {params.rho}",
                ))
        for r, m in enumerate(self.rset.members):
            result = is_quasi_geodesic(PathRef.from_word(m), params.lam, params.c, spec)
            if not result.ok:
                i, j = result.worst_span
                failures.append(ClauseFailure(
                    clause=2, member=r, member_word=format_word(m, spec),
                    detail=f"subpath [{i}, {j}) has margin {result.worst_margin}",
                ))
        return failures

    def certify(self, with_prime: bool, theorem: Optional[str] = None, assumptions: Sequence[str] = ()) -> SCCertificate:
        rset, params = self.rset, self.params
        spec = rset.spec
        threshold = pruning_threshold(rset, params.mu) if self.prune else 1
        failures = self._clause_failures()

        scanner = PieceScanner(rset, params.epsilon)
        pieces = scanner.epsilon_pieces(threshold)
        if with_prime:
            pieces += scanner.epsilon_prime_pieces(threshold)
        violations = [piece_record(p, rset, True) for p in pieces if _violates(p, rset, params.mu)]

        verdict = "fail" if failures or violations else "pass"
        all_assumptions = list(assumptions)
        if params.epsilon > 0:
            all_assumptions.append(f"bridges range over the full ball of radius {params.epsilon}")

        check = "C1" if with_prime else "C"
        if verdict == "pass":
            logger.info(f"✅ {check}{self._label()} holds for {len(rset)} members (threshold {threshold})")
        else:
            logger.error(f"❌ {check}{self._label()} fails: {len(failures)} clause failures, {len(violations)} violating pieces")

        return SCCertificate(
            check=check,
            spec_text=canonical_spec_text(spec),
            seeds=[format_word(s, spec) for s in rset.seeds],
            params=params,
            min_member_length=rset.min_length,
            pruning_threshold=threshold,
            vacuous=params.mu >= 1,
            verdict=verdict,
            clause_failures=failures,
            violations=violations,
            statistics=scanner.stats,
            assumptions=all_assumptions,
            theorem=theorem,
        )

    def _label(self) -> str:
        p = self.params
        return f"({p.epsilon}, {p.mu}, {p.lam}, {p.c}, {p.rho})"


def check_C(rset: SymmetrizedSet, params: SCParams, prune: bool = True) -> SCCertificate:
    return SmallCancellationChecker(rset, params, prune).certify(with_prime=False)


def check_C1(rset: SymmetrizedSet, params: SCParams, prune: bool = True) -> SCCertificate:
    return SmallCancellationChecker(rset, params, prune).certify(with_prime=True)


def params_stronger(a: SCParams, b: SCParams) -> bool:
    """True when a pass under `a` implies a pass under `b`"""
    return (
        a.epsilon >= b.epsilon
        and a.mu <= b.mu
        and a.lam >= b.lam
        and a.c <= b.c
        and a.rho >= b.rho
    )


def piece_scan_report(rset: SymmetrizedSet, epsilon: int, min_len: int, prime: bool) -> PieceScanReport:
    """
    Raises:
        BudgetExceeded, InfiniteFactorInBall
    """
    scanner = PieceScanner(rset, epsilon)
    pieces = scanner.epsilon_prime_pieces(min_len) if prime else scanner.epsilon_pieces(min_len)
    spec = rset.spec
    logger.info(f"📊 {len(pieces)} {'ε′' if prime else 'ε'}-pieces of length ≥ {min_len} at ε = {epsilon}")
    return PieceScanReport(
        spec_text=canonical_spec_text(spec),
        seeds=[format_word(s, spec) for s in rset.seeds],
        epsilon=epsilon,
        min_len=min_len,
        kind=EPSILON_PRIME if prime else EPSILON,
        pieces=[piece_record(p, rset) for p in pieces],
        statistics=scanner.stats,
    )
