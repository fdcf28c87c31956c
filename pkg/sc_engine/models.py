"""
Report models

Every report is a pydantic model with a literal `report` tag so a saved
file can be re-validated and replayed. Words are word literals with one
token per letter; rationals serialize as "p/q". Reports carry no
timestamps, so identical inputs give byte-identical JSON.
"""

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational: {value!r}") from e
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1_000_000)
    raise ValueError(f"not a rational: {value!r}")


Rational = Annotated[
    Fraction,
    BeforeValidator(_to_fraction),
    PlainSerializer(lambda f: f"{f.numerator}/{f.denominator}", return_type=str),
]

Verdict = Literal["pass", "fail"]


class ReportModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)


# =============================================================================
# PARAMETERS
# =============================================================================

class SCParams(ReportModel):
    """Small-cancellation parameters (ε, μ, λ, c, ρ)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True, frozen=True)

    epsilon: int = Field(ge=0)
    mu: Rational
    lam: Rational = Field(alias="lambda")
    c: Rational
    rho: int = Field(ge=1)

    @field_validator("mu")
    @classmethod
    def _mu_positive(cls, v: Fraction) -> Fraction:
        if v <= 0:
            raise ValueError("μ must be positive")
        return v

    @field_validator("lam")
    @classmethod
    def _lambda_range(cls, v: Fraction) -> Fraction:
        if not (0 < v <= 1):
            raise ValueError("λ must lie in (0, 1]")
        return v

    @field_validator("c")
    @classmethod
    def _c_nonnegative(cls, v: Fraction) -> Fraction:
        if v < 0:
            raise ValueError("c must be non-negative")
        return v


# =============================================================================
# SMALL CANCELLATION
# =============================================================================

class PieceRecord(ReportModel):
    kind: Literal["epsilon", "epsilon_prime"]
    member: int
    member_prime: int
    u: str
    u_prime: str
    u_span: Tuple[int, int]
    u_prime_span: Tuple[int, int]
    y: str
    z: str
    orientation: int = 1
    u_length: int
    u_prime_length: int
    violates: bool = False


class ClauseFailure(ReportModel):
    clause: int
    member: int
    member_word: str
    detail: str


class ScanStatistics(ReportModel):
    members: int = 0
    probes: int = 0
    normal_forms: int = 0
    matches: int = 0


class SCCertificate(ReportModel):
    report: Literal["sc_certificate"] = "sc_certificate"
    check: Literal["C", "C1"]
    spec_text: str
    seeds: List[str]
    params: SCParams
    min_member_length: int
    pruning_threshold: int
    vacuous: bool
    verdict: Verdict
    clause_failures: List[ClauseFailure] = []
    violations: List[PieceRecord] = []
    statistics: ScanStatistics = ScanStatistics()
    assumptions: List[str] = []
    theorem: Optional[str] = None


class PieceScanReport(ReportModel):
    report: Literal["piece_scan"] = "piece_scan"
    spec_text: str
    seeds: List[str]
    epsilon: int
    min_len: int
    kind: Literal["epsilon", "epsilon_prime"]
    pieces: List[PieceRecord]
    statistics: ScanStatistics


# =============================================================================
# GENERIC CHECKS
# =============================================================================

class CheckItem(ReportModel):
    name: str
    passed: bool
    detail: str = ""


class CheckReport(ReportModel):
    """Shape shared by the path and elementary checks"""
    report: Literal["check"] = "check"
    check: str
    input: str
    verdict: Verdict
    witnesses: List[Dict[str, Any]] = []
    parameters: Dict[str, Any] = {}
    seed: Optional[int] = None
    items: List[CheckItem] = []


class BallReport(ReportModel):
    report: Literal["ball"] = "ball"
    spec_text: str
    radius: int
    size: int
    sphere_sizes: List[int]
    dump: Optional[str] = None


class GeometryEstimates(ReportModel):
    report: Literal["geometry"] = "geometry"
    spec_text: str
    delta_hat: float
    four_point_delta: float
    radius_used: int
    triangles_checked: int
    exhaustive: bool
    seed: int
    witness: List[str] = []


class CycleAuditReport(ReportModel):
    report: Literal["cycle_audit"] = "cycle_audit"
    spec_text: str
    cycles: int
    components: int
    isolated: int
    isolated_nontrivial: List[Dict[str, Any]] = []
    seed: Optional[int] = None
    verdict: Verdict


# =============================================================================
# WORD BUILDER
# =============================================================================

class BuildReport(ReportModel):
    report: Literal["build_w"] = "build_w"
    spec_text: str
    word: str
    n: int
    checks: List[CheckItem]
    letter_uniqueness: bool
    forbidden_mode: str


class SubwordCheckReport(ReportModel):
    report: Literal["qg_subwords"] = "qg_subwords"
    spec_text: str
    word: str
    members: int
    subwords_checked: int
    qg_violations: int
    backtracking_violations: int
    worst_margin: Rational
    worst_member: str
    worst_span: Tuple[int, int]
    verdict: Verdict


class QuadReport(ReportModel):
    report: Literal["quad"] = "quad"
    spec_text: str
    word: str
    epsilon: int
    quadrangles: int
    without_common_edge: List[str] = []
    components_checked: int = 0
    unmatched_components: int = 0
    verdict: Verdict


# =============================================================================
# QUOTIENT LAB
# =============================================================================

class DehnStepRecord(ReportModel):
    before: str
    conjugator: str
    u_length: int
    member: int
    member_word: str
    prefix_length: int
    y: str
    z: str
    after: str
    before_length: int
    after_length: int


class DehnTrace(ReportModel):
    report: Literal["dehn_trace"] = "dehn_trace"
    spec_text: str
    seeds: List[str]
    params: SCParams
    epsilon: int
    mu: Rational
    word: str
    steps: List[DehnStepRecord] = []
    outcome: Literal["Trivial", "Nontrivial", "Unknown"]
    final_word: str
    bound_n: int
    reason: str = ""


class AreaFactor(ReportModel):
    conjugator: str
    member: int
    relator: str


class AreaCertificate(ReportModel):
    report: Literal["area_certificate"] = "area_certificate"
    spec_text: str
    seeds: List[str]
    word: str
    k: Optional[int]
    factors: List[AreaFactor] = []
    verdict: Literal["found", "unknown"]
    source: Literal["search", "trace", "construction", "none"] = "search"


class InjectivityReport(ReportModel):
    report: Literal["injectivity"] = "injectivity"
    spec_text: str
    seeds: List[str]
    params: SCParams
    bound: int
    radius: int
    pairs_checked: int
    violations: List[Tuple[str, str]] = []
    verdict: Verdict


class TorsionReport(ReportModel):
    report: Literal["torsion"] = "torsion"
    spec_text: str
    seeds: List[str]
    params: SCParams
    element: str
    order_in_base: Optional[int]
    order_max: int
    detected_order: Optional[int]
    counterexample: bool
    outcomes: List[str]
    traces: List[DehnTrace] = []


class IsoSample(ReportModel):
    word: str
    length: int
    area: int
    source: str


class IsoperimetricReport(ReportModel):
    report: Literal["isoperimetric"] = "isoperimetric"
    spec_text: str
    seeds: List[str]
    samples: int
    len_max: int
    seed: int
    max_ratio: float
    entries: List[IsoSample] = []
    certificates: List[AreaCertificate] = []


# =============================================================================
# ELEMENTARY PROBE
# =============================================================================

class TranslationReport(ReportModel):
    report: Literal["translation"] = "translation"
    spec_text: str
    element: str
    value: Rational
    exact: bool
    n_max: int
    n_at_min: int


class ElementaryProbeReport(ReportModel):
    report: Literal["elementary_probe"] = "elementary_probe"
    spec_text: str
    element: str
    radius: int
    n_max: int
    witnesses: List[Dict[str, Any]] = []


REPORT_MODELS: Dict[str, type] = {
    model.model_fields["report"].default: model
    for model in (
        SCCertificate, PieceScanReport, CheckReport, BallReport, GeometryEstimates,
        CycleAuditReport, BuildReport, SubwordCheckReport, QuadReport, DehnTrace,
        AreaCertificate, InjectivityReport, TorsionReport, IsoperimetricReport,
        TranslationReport, ElementaryProbeReport,
    )
}
