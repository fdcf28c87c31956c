"""
Independent replay of saved reports

Every report file is re-validated against its model, then the claims it
carries are rechecked from scratch: reducer steps are replayed, area
certificates are multiplied out, pieces are re-verified and certificates
are recomputed and compared.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import List, Tuple

from pydantic import ValidationError

from sc_engine.errors import CorruptReport
from sc_engine.models import (
    REPORT_MODELS,
    AreaCertificate,
    DehnTrace,
    InjectivityReport,
    IsoperimetricReport,
    SubwordCheckReport,
    PieceRecord,
    PieceScanReport,
    SCCertificate,
    SCParams,
    TorsionReport,
)
from sc_engine.parsing import format_word, parse_element, parse_group_spec, parse_word
from sc_engine.pieces import Piece, SmallCancellationChecker, check_C1, symmetrize, verify_piece
from sc_engine.quotient import (
    DehnReducer,
    QuotientSpec,
    Reduction,
    ReductionStep,
    area_product,
    bound_N,
)
from sc_engine.words import qg_subword_check

logger = logging.getLogger(__name__)


@dataclass
class ReplayIssue:
    """A claim in a report that did not survive replay"""
    location: str
    issue_type: str  # 'mismatch', 'invalid', 'unverifiable'
    severity: str  # 'critical', 'warning'
    description: str


@dataclass
class ReplayResult:
    report_kind: str
    issues: List[ReplayIssue] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not any(i.severity == "critical" for i in self.issues)

    def fail(self, location: str, description: str, issue_type: str = "mismatch") -> None:
        self.issues.append(ReplayIssue(location, issue_type, "critical", description))


# =============================================================================
# LOADING
# =============================================================================

def load_report(text: str):
    """
    Raises:
        CorruptReport when the text is not a known, well-formed report
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorruptReport(f"not JSON: {e}")
    if not isinstance(data, dict) or data.get("report") not in REPORT_MODELS:
        raise CorruptReport("missing or unknown report tag")
    try:
        return REPORT_MODELS[data["report"]].model_validate(data)
    except ValidationError as e:
        raise CorruptReport(f"report does not match its schema: {e.error_count()} errors")


# =============================================================================
# REPLAYERS
# =============================================================================

def _quotient(spec_text: str, seeds: List[str]) -> QuotientSpec:
    base = parse_group_spec(spec_text).without_relators()
    return QuotientSpec(base=base, relators=symmetrize([parse_word(s, base) for s in seeds], base))


@lru_cache(maxsize=32)
def _params_certified(spec_text: str, seeds: Tuple[str, ...], params_json: str) -> bool:
    """C₁ recomputed for the relator set under the claimed parameters"""
    quotient = _quotient(spec_text, list(seeds))
    return check_C1(quotient.relators, SCParams.model_validate_json(params_json)).verdict == "pass"


def _require_certified(spec_text: str, seeds: List[str], params: SCParams, result: ReplayResult, location: str) -> None:
    if not _params_certified(spec_text, tuple(seeds), params.model_dump_json(by_alias=True)):
        result.fail(location, "parameters are not certified for the relator set", "invalid")


def replay_trace(trace: DehnTrace, result: ReplayResult, location: str = "trace") -> None:
    quotient = _quotient(trace.spec_text, trace.seeds)
    spec = quotient.base
    _require_certified(trace.spec_text, trace.seeds, trace.params, result, f"{location}.params")
    reducer = DehnReducer(quotient, trace.epsilon, trace.mu, params=trace.params)
    if trace.bound_n != bound_N(trace.params):
        result.fail(location, f"bound N = {trace.bound_n} disagrees with the parameters")
    steps = []
    for k, s in enumerate(trace.steps):
        if s.member_word != _member_literal(reducer, s.member):
            result.fail(f"{location}.steps[{k}]", "member word does not match the member index")
        steps.append(ReductionStep(
            before=parse_element(s.before, spec),
            conjugator=parse_element(s.conjugator, spec),
            u_length=s.u_length,
            member=s.member,
            prefix_length=s.prefix_length,
            y=parse_element(s.y, spec),
            z=parse_element(s.z, spec),
            after=parse_element(s.after, spec),
        ))
    reduction = Reduction(
        word=parse_element(trace.word, spec),
        outcome=trace.outcome,
        final=parse_element(trace.final_word, spec),
        steps=steps,
    )
    for problem in reducer.replay(reduction):
        result.fail(location, problem)
    result.checked += 1 + len(steps)


def _member_literal(reducer: DehnReducer, r: int) -> str:
    if not 0 <= r < len(reducer.members):
        return ""
    return format_word(reducer.members[r], reducer.spec)


def replay_area(cert: AreaCertificate, result: ReplayResult, location: str = "area") -> None:
    if cert.verdict != "found":
        return
    quotient = _quotient(cert.spec_text, cert.seeds)
    spec = quotient.base
    if cert.k != len(cert.factors):
        result.fail(location, f"k = {cert.k} but {len(cert.factors)} factors listed")
    factors = []
    for i, factor in enumerate(cert.factors):
        if not 0 <= factor.member < len(quotient.relators):
            result.fail(f"{location}.factors[{i}]", "member index out of range")
            return
        if parse_word(factor.relator, spec) != quotient.relators.members[factor.member]:
            result.fail(f"{location}.factors[{i}]", "relator does not match the member index")
        factors.append((parse_element(factor.conjugator, spec), factor.member))
    if area_product(quotient, factors) != parse_element(cert.word, spec):
        result.fail(location, "∏ f⁻¹·R·f does not multiply out to the word")
    result.checked += 1


def _piece_from_record(record: PieceRecord, spec) -> Piece:
    return Piece(
        record.kind,
        record.member, record.u_span[0], record.u_span[1],
        record.member_prime, record.u_prime_span[0], record.u_prime_span[1],
        parse_element(record.y, spec), parse_element(record.z, spec),
        record.orientation,
    )


def replay_certificate(cert: SCCertificate, result: ReplayResult) -> None:
    spec = parse_group_spec(cert.spec_text).without_relators()
    rset = symmetrize([parse_word(s, spec) for s in cert.seeds], spec)
    for i, record in enumerate(cert.violations):
        if not verify_piece(_piece_from_record(record, spec), rset, cert.params.epsilon):
            result.fail(f"violations[{i}]", "piece does not verify")
    fresh = SmallCancellationChecker(rset, cert.params).certify(
        with_prime=cert.check == "C1",
        theorem=cert.theorem,
        assumptions=[a for a in cert.assumptions if not a.startswith("bridges range")],
    )
    if fresh.verdict != cert.verdict:
        result.fail("verdict", f"recomputed verdict {fresh.verdict} ≠ reported {cert.verdict}")
    if fresh.violations != cert.violations or fresh.clause_failures != cert.clause_failures:
        result.fail("violations", "recomputed violations differ from the report")
    result.checked += 1 + len(cert.violations)


def replay_pieces(report: PieceScanReport, result: ReplayResult) -> None:
    spec = parse_group_spec(report.spec_text).without_relators()
    rset = symmetrize([parse_word(s, spec) for s in report.seeds], spec)
    for i, record in enumerate(report.pieces):
        if not verify_piece(_piece_from_record(record, spec), rset, report.epsilon):
            result.fail(f"pieces[{i}]", "piece does not verify")
        result.checked += 1


def replay_injectivity(report: InjectivityReport, result: ReplayResult) -> None:
    if report.bound > bound_N(report.params):
        result.fail("bound", "N exceeds ⌊λρ/2 − c − 2ε⌋")
    if (report.verdict == "pass") != (not report.violations):
        result.fail("verdict", "verdict disagrees with the violation list")
    _require_certified(report.spec_text, report.seeds, report.params, result, "params")
    quotient = _quotient(report.spec_text, report.seeds)
    reducer = DehnReducer(quotient, params=report.params)
    spec = quotient.base
    for i, (g, h) in enumerate(report.violations):
        d = spec.mul(spec.inv(parse_element(g, spec)), parse_element(h, spec))
        if reducer.run(d).outcome != "Trivial":
            result.fail(f"violations[{i}]", "pair does not collapse on replay")
    result.checked += 1


def replay_torsion(report: TorsionReport, result: ReplayResult) -> None:
    for i, trace in enumerate(report.traces):
        replay_trace(trace, result, f"traces[{i}]")
    if report.detected_order is not None and len(report.outcomes) != report.detected_order:
        result.fail("outcomes", "detected order does not match the outcome list")


def replay_isoperimetric(report: IsoperimetricReport, result: ReplayResult) -> None:
    for i, cert in enumerate(report.certificates):
        replay_area(cert, result, f"certificates[{i}]")


def replay_qg_subwords(report: SubwordCheckReport, result: ReplayResult) -> None:
    spec = parse_group_spec(report.spec_text).without_relators()
    fresh = qg_subword_check(parse_word(report.word, spec), spec)
    if fresh != report:
        result.fail("audit", "recomputed audit differs from the report")
    result.checked += 1


REPLAYERS = {
    "sc_certificate": replay_certificate,
    "piece_scan": replay_pieces,
    "dehn_trace": replay_trace,
    "area_certificate": replay_area,
    "injectivity": replay_injectivity,
    "torsion": replay_torsion,
    "isoperimetric": replay_isoperimetric,
    "qg_subwords": replay_qg_subwords,
}


def verify_report(text: str) -> ReplayResult:
    """
    Raises:
        CorruptReport
    """
    report = load_report(text)
    result = ReplayResult(report_kind=report.report)
    replayer = REPLAYERS.get(report.report)
    if replayer is None:
        result.issues.append(ReplayIssue(
            "report", "unverifiable", "warning",
            "report carries no replayable claims; schema validated only",
        ))
        return result
    replayer(report, result)
    if result.ok:
        logger.info(f"✅ replayed {report.report}: {result.checked} claims verified")
    else:
        logger.error(f"❌ replay of {report.report} found {len(result.issues)} issues")
    return result


def verify_trace(path: Path) -> ReplayResult:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CorruptReport(f"cannot read {path}: {e}")
    return verify_report(text)
