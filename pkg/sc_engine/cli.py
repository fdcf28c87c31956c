"""
Command-line entry point

    python main.py --spec g.grp nf --word "a b^6 b"
    python main.py --spec g41.grp --json certify-thm-w --n 20 --eps 1
    python main.py verify-trace report.json

Exit codes: 0 success, 1 check failed, 2 Unknown or budget exhausted,
3 usage or input error.
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import BaseModel, ValidationError

from sc_engine.deps import cache_store
from sc_engine.elementary import classify, cyclically_reduce, elementary_report, translation_report
from sc_engine.errors import (
    EXIT_BUDGET,
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    CorruptReport,
    UsageError,
    WorkbenchError,
)
from sc_engine.groups import GroupSpec, ball, relative_length
from sc_engine.hyperbolicity import delta_estimate, dump_ball
from sc_engine.models import (
    BallReport,
    CheckItem,
    CheckReport,
    CycleAuditReport,
    SCCertificate,
    SCParams,
)
from sc_engine.parsing import (
    canonical_spec_text,
    format_element,
    format_word,
    parse_element,
    parse_group_spec,
    parse_word,
    parse_word_list,
)
from sc_engine.paths import (
    PathRef,
    components,
    connected_pairs,
    is_k_local_geodesic,
    is_quasi_geodesic,
    isolated_component_audit,
    random_cycle_audit,
)
from sc_engine.pieces import SmallCancellationChecker, piece_scan_report, symmetrize
from sc_engine.quotient import (
    DehnReducer,
    QuotientSpec,
    dehn_reduce,
    injectivity_probe,
    isoperimetric_probe,
    quotient_from_certificate,
    quotient_from_spec,
    relative_area_bounded,
    torsion_probe,
    trace_to_area_certificate,
)
from sc_engine.replay import verify_trace
from sc_engine.settings import Settings, activate, settings
from sc_engine.words import (
    WSpec,
    build_W,
    forbidden_set,
    qg_subword_check,
    quad_common_edge_check,
    standard_wspec,
    theorem_w_certificate,
)

logger = logging.getLogger("sc_engine")


class WorkbenchParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting"""

    def error(self, message: str):
        raise UsageError(message)


# =============================================================================
# INPUT HELPERS
# =============================================================================

def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}")


def _spec(args) -> GroupSpec:
    if args.spec is None:
        raise UsageError(f"{args.command} needs --spec")
    return parse_group_spec(_read(args.spec))


def _word_set(args, spec: GroupSpec):
    if args.set is None:
        raise UsageError(f"{args.command} needs --set")
    return symmetrize(parse_word_list(_read(args.set), spec.without_relators()), spec.without_relators())


def _params(args) -> SCParams:
    missing = [name for name in ("eps", "mu", "lam", "c", "rho") if getattr(args, name, None) is None]
    if missing:
        raise UsageError(f"missing parameters: {', '.join(missing)}")
    try:
        return SCParams(epsilon=args.eps, mu=args.mu, lam=args.lam, c=args.c, rho=args.rho)
    except ValidationError as e:
        raise UsageError(f"invalid parameters: {e.errors()[0]['msg']}")


def _certificate(path: Path) -> SCCertificate:
    try:
        return SCCertificate.model_validate_json(_read(path))
    except ValidationError as e:
        raise CorruptReport(f"{path} is not a certificate: {e.error_count()} errors")


def _quotient(args) -> QuotientSpec:
    """Relators from --cert, else from the spec's relators, certified on the fly when parameters are given"""
    if args.cert is not None:
        cert = _certificate(args.cert)
        if args.spec is None:
            return quotient_from_certificate(cert)
        return quotient_from_spec(_spec(args), cert)
    quotient = quotient_from_spec(_spec(args))
    if getattr(args, "mu", None) is None:
        return quotient
    cert = SmallCancellationChecker(quotient.relators, _params(args)).certify(with_prime=True)
    return QuotientSpec(base=quotient.base, relators=quotient.relators, certificate=cert)


def _exponents(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


def _check_report(check: str, input_text: str, passed: bool, **fields) -> CheckReport:
    return CheckReport(check=check, input=input_text, verdict="pass" if passed else "fail", **fields)


# =============================================================================
# GROUP CORE AND PATH GEOMETRY
# =============================================================================

def cmd_nf(args) -> BaseModel:
    spec = _spec(args)
    spec.require_pure()
    g = parse_element(args.word, spec)
    return _check_report("nf", args.word, True, witnesses=[{
        "normal_form": format_element(g, spec),
        "length": relative_length(g, spec),
    }])


def cmd_dist(args) -> BaseModel:
    spec = _spec(args)
    spec.require_pure()
    u, v = parse_element(args.u, spec), parse_element(args.v, spec)
    return _check_report("dist", f"{args.u} | {args.v}", True, witnesses=[{
        "distance": spec.length(spec.mul(spec.inv(u), v)),
    }])


def cmd_ball(args) -> BaseModel:
    spec = _spec(args)
    b = ball(spec, args.radius)
    dumped = dump_ball(b, spec, args.dump) if args.dump else None
    return BallReport(
        spec_text=canonical_spec_text(spec),
        radius=args.radius,
        size=len(b),
        sphere_sizes=[len(b.sphere(r)) for r in range(args.radius + 1)],
        dump=str(dumped) if dumped else None,
    )


def cmd_qg_check(args) -> BaseModel:
    spec = _spec(args)
    word = parse_word(args.word, spec)
    result = is_quasi_geodesic(PathRef.from_word(word), args.lam, args.c, spec)
    return _check_report(
        "qg-check", args.word, result.ok,
        witnesses=[{"worst_margin": str(result.worst_margin), "span": list(result.worst_span)}],
        parameters={"lambda": str(args.lam), "c": str(args.c)},
    )


def cmd_kloc_check(args) -> BaseModel:
    spec = _spec(args)
    word = parse_word(args.word, spec)
    ok, span = is_k_local_geodesic(PathRef.from_word(word), args.k, spec)
    return _check_report(
        "kloc-check", args.word, ok,
        witnesses=[{"span": list(span)}] if span else [],
        parameters={"k": args.k},
    )


def cmd_components(args) -> BaseModel:
    spec = _spec(args)
    path = PathRef.from_word(parse_word(args.word, spec))
    comps = components(path, spec)
    pairs = connected_pairs(path, spec, comps)
    return _check_report(
        "components", args.word, not pairs,
        witnesses=[
            {
                "factor": spec.slot_name(c.slot),
                "span": [c.start, c.end],
                "element": format_element(((c.slot, c.element),), spec) if c.element else "1",
                "vertex": format_element(c.vertex, spec),
            }
            for c in comps
        ],
        items=[CheckItem(
            name="without_backtracking",
            passed=not pairs,
            detail=", ".join(f"{i}~{j}" for i, j in pairs),
        )],
    )


def cmd_audit_cycles(args) -> BaseModel:
    spec = _spec(args)
    if args.word is None:
        return random_cycle_audit(spec, args.cycles, args.length, settings.SEED)
    label = parse_word(args.word, spec)
    entries = isolated_component_audit(PathRef.from_word(label), spec)
    bad = [e for e in entries if not e.ok]
    return CycleAuditReport(
        spec_text=canonical_spec_text(spec),
        cycles=1,
        components=len(entries),
        isolated=sum(1 for e in entries if e.isolated),
        isolated_nontrivial=[
            {"cycle": format_word(label, spec), "span": [e.component.start, e.component.end]}
            for e in bad
        ],
        verdict="pass" if not bad else "fail",
    )


def cmd_delta_est(args) -> BaseModel:
    return delta_estimate(_spec(args), args.radius, args.sample, settings.SEED)


# =============================================================================
# SMALL CANCELLATION AND WORDS
# =============================================================================

def cmd_piece_scan(args) -> BaseModel:
    spec = _spec(args)
    return piece_scan_report(_word_set(args, spec), args.eps, args.min_len, args.prime)


def _cmd_check(with_prime: bool) -> Callable:
    def handler(args) -> BaseModel:
        spec = _spec(args)
        return SmallCancellationChecker(_word_set(args, spec), _params(args)).certify(with_prime=with_prime)
    return handler


def _wspec(args, spec: GroupSpec) -> WSpec:
    if args.n is not None:
        return standard_wspec(spec, args.n, use_x=not getattr(args, "no_x", False))
    if args.a is None or args.b is None:
        raise UsageError("give --n, or both --a and --b")
    if spec.k < 2:
        raise UsageError("W needs two parabolic factors")
    a_factor, b_factor = spec.factors[0], spec.factors[1]
    x = parse_word(args.x, spec)[0] if args.x else None
    return WSpec(
        a_list=tuple((0, a_factor.power(1, e)) for e in _exponents(args.a)),
        b_list=tuple((1, b_factor.power(1, e)) for e in _exponents(args.b)),
        x=x,
    )


def cmd_build_w(args) -> BaseModel:
    spec = _spec(args)
    _, report = build_W(_wspec(args, spec), forbidden_set(spec, args.eps), spec)
    return report


def cmd_certify_thm_w(args) -> BaseModel:
    spec = _spec(args)
    store = cache_store()
    params = {"n": args.n, "epsilon": args.eps}
    forbidden = forbidden_set(spec, args.eps)
    word, _ = build_W(standard_wspec(spec, args.n), forbidden, spec)
    cached = store.check("thm_w", spec, params, SCCertificate, seeds=[word])
    if cached["action"] == "hit":
        return cached["report"]
    cert = theorem_w_certificate(word, spec, args.eps, forbidden)
    store.store("thm_w", spec, params, cert, seeds=[word])
    return cert


def cmd_qg_subwords(args) -> BaseModel:
    spec = _spec(args)
    if args.word is not None:
        word = parse_word(args.word, spec)
    elif args.n is not None:
        word, _ = build_W(standard_wspec(spec, args.n), forbidden_set(spec, 0), spec)
    else:
        raise UsageError("give --word or --n")
    return qg_subword_check(word, spec)


def cmd_quad_check(args) -> BaseModel:
    spec = _spec(args)
    word, _ = build_W(standard_wspec(spec, args.n), forbidden_set(spec, args.eps), spec)
    doubled = word + word
    start = args.offset % len(word)
    if args.prefix_len > len(word):
        raise UsageError(f"prefix length {args.prefix_len} exceeds ‖W‖ = {len(word)}")
    return quad_common_edge_check(doubled[start:start + args.prefix_len], spec, args.eps)


# =============================================================================
# QUOTIENT LAB
# =============================================================================

def cmd_quotient_reduce(args) -> BaseModel:
    quotient = _quotient(args)
    return dehn_reduce(quotient, parse_element(args.word, quotient.base), args.reduce_eps, args.reduce_mu)


def cmd_quotient_inj_probe(args) -> BaseModel:
    return injectivity_probe(_quotient(args), args.N, settings.WORKERS)


def cmd_quotient_torsion(args) -> BaseModel:
    quotient = _quotient(args)
    return torsion_probe(quotient, parse_element(args.word, quotient.base), args.max)


def cmd_quotient_area(args) -> BaseModel:
    quotient = _quotient(args)
    word = parse_element(args.word, quotient.base)
    if args.from_trace:
        reducer = DehnReducer(quotient)
        return trace_to_area_certificate(reducer, reducer.run(word))
    return relative_area_bounded(quotient, word, args.k_max, args.conj_max, settings.BUDGET_NODES)


def cmd_quotient_iso_probe(args) -> BaseModel:
    return isoperimetric_probe(
        _quotient(args), args.samples, args.len_max, settings.SEED, args.k_max, args.conj_max,
    )


# =============================================================================
# ELEMENTARY PROBES AND REPLAY
# =============================================================================

def cmd_classify(args) -> BaseModel:
    spec = _spec(args)
    g = parse_element(args.word, spec)
    kind = classify(g, spec)
    form, t = cyclically_reduce(g, spec)
    return _check_report("classify", args.word, True, witnesses=[{
        "kind": kind.kind,
        "factor_index": kind.factor_index,
        "core": format_element(form.form, spec),
        "conjugator": format_element(t, spec),
    }])


def cmd_tau(args) -> BaseModel:
    spec = _spec(args)
    return translation_report(parse_element(args.word, spec), spec, args.n_max)


def cmd_e_probe(args) -> BaseModel:
    spec = _spec(args)
    return elementary_report(parse_element(args.word, spec), spec, args.radius, args.n_max)


def cmd_verify_trace(args) -> BaseModel:
    result = verify_trace(args.report)
    return _check_report(
        "verify-trace", str(args.report), result.ok,
        parameters={"report_kind": result.report_kind, "claims_checked": result.checked},
        items=[
            CheckItem(name=issue.location, passed=issue.severity != "critical", detail=issue.description)
            for issue in result.issues
        ],
    )


# =============================================================================
# PARSER
# =============================================================================

def _add_params(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--eps", type=int, required=required)
    p.add_argument("--mu", type=Fraction, required=required)
    p.add_argument("--lambda", dest="lam", type=Fraction, required=required)
    p.add_argument("--c", type=Fraction, required=required)
    p.add_argument("--rho", type=int, required=required)


def _add_quotient_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cert", type=Path, help="C₁ certificate for the relator set")


# Shared options are accepted before or after the subcommand. They default to
# SUPPRESS so a subparser never overwrites a value given at the top level.
SHARED_DEFAULTS: Dict[str, object] = {
    "spec": None,
    "seed": None,
    "budget_nodes": None,
    "budget_secs": None,
    "workers": None,
    "cache_dir": None,
    "json": False,
    "progress": False,
    "log_level": None,
    "out": None,
}


def _shared_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, default=argparse.SUPPRESS, help="group spec file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--budget-nodes", type=int, default=argparse.SUPPRESS)
    common.add_argument("--budget-secs", type=float, default=argparse.SUPPRESS)
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    common.add_argument("--cache-dir", type=Path, default=argparse.SUPPRESS)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="emit JSON reports")
    common.add_argument("--progress", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--log-level", default=argparse.SUPPRESS)
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="also write the report to this file")
    return common


def build_parser() -> WorkbenchParser:
    common = _shared_options()
    parser = WorkbenchParser(
        prog="sc-workbench", description="small-cancellation verification workbench", parents=[common]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nf", parents=[common])
    p.add_argument("--word", required=True)
    p.set_defaults(handler=cmd_nf)

    p = sub.add_parser("dist", parents=[common])
    p.add_argument("--u", required=True)
    p.add_argument("--v", required=True)
    p.set_defaults(handler=cmd_dist)

    p = sub.add_parser("ball", parents=[common])
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--dump", type=Path)
    p.set_defaults(handler=cmd_ball)

    p = sub.add_parser("qg-check", parents=[common])
    p.add_argument("--word", required=True)
    p.add_argument("--lambda", dest="lam", type=Fraction, default=Fraction(1, 3))
    p.add_argument("--c", type=Fraction, default=Fraction(2))
    p.set_defaults(handler=cmd_qg_check)

    p = sub.add_parser("kloc-check", parents=[common])
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(handler=cmd_kloc_check)

    p = sub.add_parser("components", parents=[common])
    p.add_argument("--word", required=True)
    p.set_defaults(handler=cmd_components)

    p = sub.add_parser("audit-cycles", parents=[common])
    p.add_argument("--word", help="audit this cycle instead of random ones")
    p.add_argument("--cycles", type=int, default=1000)
    p.add_argument("--length", type=int, default=12)
    p.set_defaults(handler=cmd_audit_cycles)

    p = sub.add_parser("delta-est", parents=[common])
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--sample", type=int, default=20000)
    p.set_defaults(handler=cmd_delta_est)

    p = sub.add_parser("piece-scan", parents=[common])
    p.add_argument("--set", type=Path, required=True)
    p.add_argument("--eps", type=int, required=True)
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--prime", action="store_true", help="scan ε′-pieces")
    p.set_defaults(handler=cmd_piece_scan)

    for name, with_prime in (("check-c", False), ("check-c1", True)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--set", type=Path, required=True)
        _add_params(p, required=True)
        p.set_defaults(handler=_cmd_check(with_prime))

    p = sub.add_parser("build-w", parents=[common])
    p.add_argument("--n", type=int)
    p.add_argument("--x")
    p.add_argument("--a", help="exponents of the first factor's generator, e.g. 1,2,3")
    p.add_argument("--b", help="exponents of the second factor's generator")
    p.add_argument("--eps", type=int, default=0)
    p.add_argument("--no-x", action="store_true")
    p.set_defaults(handler=cmd_build_w)

    p = sub.add_parser("certify-thm-w", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=int, required=True)
    p.set_defaults(handler=cmd_certify_thm_w)

    p = sub.add_parser("qg-subwords", parents=[common])
    p.add_argument("--word")
    p.add_argument("--n", type=int)
    p.set_defaults(handler=cmd_qg_subwords)

    p = sub.add_parser("quad-check", parents=[common])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=int, required=True)
    p.add_argument("--prefix-len", type=int, required=True)
    p.add_argument("--offset", type=int, default=0)
    p.set_defaults(handler=cmd_quad_check)

    quotient = sub.add_parser("quotient", parents=[common])
    qsub = quotient.add_subparsers(dest="quotient_command", required=True)

    p = qsub.add_parser("reduce", parents=[common])
    _add_quotient_source(p)
    _add_params(p, required=False)
    p.add_argument("--word", required=True)
    p.add_argument("--reduce-eps", type=int, help="bridge radius used by the reducer")
    p.add_argument("--reduce-mu", type=Fraction, help="μ used for the rewrite threshold")
    p.set_defaults(handler=cmd_quotient_reduce)

    p = qsub.add_parser("inj-probe", parents=[common])
    _add_quotient_source(p)
    _add_params(p, required=False)
    p.add_argument("--N", type=int, required=True)
    p.set_defaults(handler=cmd_quotient_inj_probe)

    p = qsub.add_parser("torsion", parents=[common])
    _add_quotient_source(p)
    _add_params(p, required=False)
    p.add_argument("--word", required=True)
    p.add_argument("--max", type=int, default=20)
    p.set_defaults(handler=cmd_quotient_torsion)

    p = qsub.add_parser("area", parents=[common])
    _add_quotient_source(p)
    _add_params(p, required=False)
    p.add_argument("--word", required=True)
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--conj-max", type=int, default=3)
    p.add_argument("--from-trace", action="store_true", help="read the certificate off a reducer trace")
    p.set_defaults(handler=cmd_quotient_area)

    p = qsub.add_parser("iso-probe", parents=[common])
    _add_quotient_source(p)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--len-max", type=int, default=40)
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--conj-max", type=int, default=0)
    p.set_defaults(handler=cmd_quotient_iso_probe)

    p = sub.add_parser("classify", parents=[common])
    p.add_argument("--word", required=True)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("tau", parents=[common])
    p.add_argument("--word", required=True)
    p.add_argument("--n-max", type=int, default=32)
    p.set_defaults(handler=cmd_tau)

    p = sub.add_parser("e-probe", parents=[common])
    p.add_argument("--word", required=True)
    p.add_argument("--radius", type=int, default=3)
    p.add_argument("--n-max", type=int, default=6)
    p.set_defaults(handler=cmd_e_probe)

    p = sub.add_parser("verify-trace", parents=[common])
    p.add_argument("report", type=Path)
    p.set_defaults(handler=cmd_verify_trace)

    return parser


# =============================================================================
# SESSION AND OUTPUT
# =============================================================================

def session_from_args(args) -> Settings:
    """Environment settings overridden by the global flags"""
    updates: Dict[str, object] = {}
    for flag, field_name in (
        ("seed", "SEED"),
        ("budget_nodes", "BUDGET_NODES"),
        ("budget_secs", "BUDGET_SECS"),
        ("workers", "WORKERS"),
        ("cache_dir", "CACHE_DIR"),
        ("log_level", "LOG_LEVEL"),
    ):
        value = getattr(args, flag)
        if value is not None:
            updates[field_name] = value
    if args.json:
        updates["OUTPUT_FORMAT"] = "json"
    if args.progress:
        updates["SHOW_PROGRESS"] = True
    return Settings().model_copy(update=updates)


def exit_code_for(report: BaseModel) -> int:
    verdict = getattr(report, "verdict", None)
    if verdict == "fail":
        return EXIT_CHECK_FAILED
    if verdict == "unknown" or getattr(report, "outcome", None) == "Unknown":
        return EXIT_BUDGET
    if getattr(report, "counterexample", False):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def render_text(report: BaseModel) -> str:
    """One line per top-level field; lists are summarised by length"""
    lines = []
    for name, value in report.model_dump(mode="json", by_alias=True).items():
        if isinstance(value, list):
            lines.append(f"{name}: [{len(value)} entries]")
        elif isinstance(value, dict):
            lines.append(f"{name}: " + ", ".join(f"{k}={v}" for k, v in value.items()))
        else:
            lines.append(f"{name}: {value}")
    return "\n".join(lines)


def emit(report: BaseModel, out: Optional[Path]) -> None:
    body = report.model_dump_json(indent=2, by_alias=True)
    if settings.OUTPUT_FORMAT == "json":
        sys.stdout.write(body + "\n")
    else:
        sys.stdout.write(render_text(report) + "\n")
    if out is not None:
        try:
            Path(out).write_text(body + "\n", encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot write {out}: {e}")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    for name, default in SHARED_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    return args


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK

    activate(session_from_args(args))
    logging.basicConfig(
        level=settings.LOG_LEVEL.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    try:
        report = args.handler(args)
        emit(report, args.out)
    except WorkbenchError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    return exit_code_for(report)


def main() -> None:
    raise SystemExit(run())
