from fractions import Fraction

import pytest

from sc_engine.errors import (
    DuplicatePower,
    FactorMismatch,
    ForbiddenElement,
    InvalidParameter,
    InvolutionLetter,
    TooShort,
    TrivialLetter,
    UnknownConstants,
)
from sc_engine.parsing import format_word, parse_group_spec, parse_word
from sc_engine.words import (
    OMEGA,
    PURE_FREE_PRODUCT,
    WSpec,
    build_fg_word,
    build_W,
    forbidden_set,
    qg_subword_check,
    letter_uniqueness,
    quad_common_edge_check,
    standard_wspec,
    theorem_params,
    theorem_w_certificate,
)

A, A2, A4 = (0, 1), (0, 2), (0, 4)
B, B2 = (1, 1), (1, 2)
X = (2, 1)


def test_build_short_W(z5z7x):
    word, report = build_W(WSpec(a_list=(A, A2), b_list=(B, B2), x=X), forbidden_set(z5z7x, 0), z5z7x)
    assert format_word(word, z5z7x) == "x a b a^2 b^2"
    assert report.n == 2
    assert report.letter_uniqueness
    assert report.forbidden_mode == PURE_FREE_PRODUCT
    assert all(item.passed for item in report.checks)


def test_standard_wspec_matches_manual_build(z5z7x):
    word, _ = build_W(standard_wspec(z5z7x, 2), forbidden_set(z5z7x, 0), z5z7x)
    assert word == parse_word("x a b a^2 b^2", z5z7x)


def test_W_without_free_letter(z5z7x):
    word, _ = build_W(standard_wspec(z5z7x, 2, use_x=False), forbidden_set(z5z7x, 0), z5z7x)
    assert format_word(word, z5z7x) == "a b a^2 b^2"


@pytest.mark.parametrize(
    "wspec, error",
    [
        (WSpec(a_list=(A, A4), b_list=(B, B2), x=X), DuplicatePower),
        (WSpec(a_list=(A, A), b_list=(B, B2), x=X), DuplicatePower),
        (WSpec(a_list=((0, 0), A2), b_list=(B, B2), x=X), TrivialLetter),
        (WSpec(a_list=(A, A2), b_list=(A, A2), x=X), FactorMismatch),
        (WSpec(a_list=(A, B), b_list=(B, B2), x=X), FactorMismatch),
        (WSpec(a_list=(A, A2), b_list=(B, B2), x=A), FactorMismatch),
        (WSpec(a_list=(A, A2), b_list=(B,), x=X), InvalidParameter),
        (WSpec(a_list=(), b_list=(), x=X), InvalidParameter),
    ],
)
def test_build_W_rejects(z5z7x, wspec, error):
    with pytest.raises(error):
        build_W(wspec, forbidden_set(z5z7x, 0), z5z7x)


def test_involution_letters_are_rejected():
    spec = parse_group_spec("factors: [cyclic 2, cyclic 5]; free: [x]")
    with pytest.raises(InvolutionLetter):
        build_W(WSpec(a_list=((0, 1),), b_list=((1, 1),), x=(2, 1)), forbidden_set(spec, 0), spec)


def test_forbidden_letters_are_rejected(z5z7x):
    forbidden = forbidden_set(z5z7x, 0, omega=([(A,)], Fraction(1, 70)))
    assert forbidden.mode == OMEGA
    with pytest.raises(ForbiddenElement):
        build_W(WSpec(a_list=(A, A2), b_list=(B, B2), x=X), forbidden, z5z7x)


def test_fg_word(z5z7x):
    word, report = build_fg_word(A, B, 3, z5z7x)
    assert format_word(word, z5z7x) == "a b a b a b"
    assert not report.letter_uniqueness
    with pytest.raises(InvalidParameter):
        build_fg_word(A, B, 0, z5z7x)
    with pytest.raises(FactorMismatch):
        build_fg_word(A, A2, 2, z5z7x)


def test_letter_uniqueness(z5z7x):
    assert letter_uniqueness(parse_word("x a b a^2 b^2", z5z7x), z5z7x)
    assert not letter_uniqueness(parse_word("x a b a^4 b^2", z5z7x), z5z7x)
    assert not letter_uniqueness(parse_word("x a x^-1 b", z5z7x), z5z7x)


def test_forbidden_set_modes(z5z7x):
    assert forbidden_set(z5z7x, 3).mode == PURE_FREE_PRODUCT
    quotient = parse_group_spec('factors: [cyclic 5, cyclic 7]; free: [x]; relators: ["x a b"]')
    with pytest.raises(UnknownConstants):
        forbidden_set(quotient, 0)


def test_forbidden_set_from_a_cyclic_subgroup(z5z7x):
    forbidden = forbidden_set(z5z7x, 0, omega=([((2, 1),)], Fraction(1)))
    assert forbidden.radius == 70
    assert len(forbidden.elements) == 141
    assert ((2, 70),) in forbidden
    assert ((2, 71),) not in forbidden


def test_theorem_params():
    p = theorem_params(20, 1)
    assert p.mu == Fraction(14, 20)
    assert p.lam == Fraction(1, 3)
    assert p.c == 2
    assert p.rho == 41


def test_subword_audit_passes_on_W(z5z7x):
    report = qg_subword_check(parse_word("x a b a^2 b^2", z5z7x), z5z7x)
    assert report.verdict == "pass"
    assert report.members == 10
    assert report.qg_violations == 0 and report.backtracking_violations == 0


def test_subword_audit_passes_on_fg_power(z5z7x):
    word, _ = build_fg_word(A, B, 4, z5z7x)
    assert qg_subword_check(word, z5z7x).verdict == "pass"


def test_subword_audit_catches_collapsing_word(z5z7x):
    report = qg_subword_check(parse_word("a x x^-1 a^4 b b^6 x x^-1", z5z7x), z5z7x)
    assert report.verdict == "fail"
    assert report.qg_violations > 0
    assert report.worst_margin < 0


def test_theorem_certificate_for_short_W(z5z7x):
    word, _ = build_W(standard_wspec(z5z7x, 2), forbidden_set(z5z7x, 0), z5z7x)
    cert = theorem_w_certificate(word, z5z7x, 0)
    assert cert.verdict == "pass"
    assert cert.check == "C1"
    assert cert.theorem == "W(n=2, ε=0)"
    assert cert.params.rho == 5
    assert any("pure free product" in a for a in cert.assumptions)


def test_theorem_certificate_with_wider_bridges(z5z7x):
    word, _ = build_W(standard_wspec(z5z7x, 2), forbidden_set(z5z7x, 2), z5z7x)
    cert = theorem_w_certificate(word, z5z7x, 2)
    assert cert.params == theorem_params(2, 2)
    assert cert.params.mu == Fraction(17, 2)
    assert cert.theorem == "W(n=2, ε=2)"
    assert cert.vacuous
    assert cert.verdict == "pass"
    assert cert.violations == []


def test_theorem_certificate_for_long_W(theorem_spec, w20):
    cert = theorem_w_certificate(w20, theorem_spec, 0)
    assert cert.verdict == "pass"
    assert not cert.vacuous
    assert cert.pruning_threshold == 23


def test_quadrangle_check_needs_long_subwords(z5z7x):
    with pytest.raises(TooShort):
        quad_common_edge_check(parse_word("x a b a^2 b^2 x a b a^2 b^2", z5z7x), z5z7x, 0)


def test_quadrangle_check_on_W_window(theorem_spec, w20):
    report = quad_common_edge_check(w20[:29], theorem_spec, 1)
    assert report.verdict == "pass"
    assert report.quadrangles >= 1
    assert report.without_common_edge == []
    assert report.unmatched_components == 0
