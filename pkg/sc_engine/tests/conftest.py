import pytest

from sc_engine.parsing import parse_group_spec, parse_word
from sc_engine.pieces import check_C1, symmetrize
from sc_engine.quotient import QuotientSpec
from sc_engine.words import build_W, forbidden_set, standard_wspec, theorem_params

THEOREM_SPEC = "factors: [cyclic 41, cyclic 43]\nfree: [x]"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance runs that take more than a few seconds")


@pytest.fixture
def z5z7x():
    return parse_group_spec("factors: [cyclic 5, cyclic 7]; free: [x]")


@pytest.fixture
def z3z3():
    return parse_group_spec("factors: [cyclic 3, cyclic 3]")


@pytest.fixture
def theorem_spec():
    return parse_group_spec(THEOREM_SPEC)


@pytest.fixture
def w20(theorem_spec):
    word, _ = build_W(standard_wspec(theorem_spec, 20), forbidden_set(theorem_spec, 0), theorem_spec)
    return word


@pytest.fixture
def theorem_quotient(theorem_spec, w20):
    """G / ⟨⟨W⟩⟩ for n = 20, certified at ε = 0"""
    rset = symmetrize([w20], theorem_spec)
    cert = check_C1(rset, theorem_params(20, 0))
    assert cert.verdict == "pass"
    return QuotientSpec(base=theorem_spec, relators=rset, certificate=cert)


@pytest.fixture
def small_quotient(z5z7x):
    """G / ⟨⟨x a b a² b²⟩⟩, uncertified"""
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    return QuotientSpec(base=z5z7x, relators=rset)
