from fractions import Fraction

import pytest

from sc_engine.errors import BudgetExceeded, EmptySeed, InfiniteFactorInBall
from sc_engine.models import SCParams
from sc_engine.parsing import format_word, parse_group_spec, parse_word
from sc_engine.pieces import (
    PieceScanner,
    check_C,
    check_C1,
    find_epsilon_pieces,
    find_epsilon_prime_pieces,
    params_stronger,
    piece_scan_report,
    pruning_threshold,
    symmetrize,
    verify_piece,
)


def params(eps=0, mu="11/2", lam="1/3", c=2, rho=5):
    return SCParams(epsilon=eps, mu=Fraction(mu), lam=Fraction(lam), c=Fraction(c), rho=rho)


def test_symmetrize_counts(z5z7x):
    assert len(symmetrize([parse_word("x a b", z5z7x)], z5z7x)) == 6
    doubled = symmetrize([parse_word("a a", z5z7x)], z5z7x)
    assert len(doubled) == 2
    assert set(doubled.members) == {((0, 1), (0, 1)), ((0, 4), (0, 4))}


def test_symmetrize_absorbs_inverse_seed(z5z7x):
    w = parse_word("x a b a^2 b^2", z5z7x)
    one = symmetrize([w], z5z7x)
    both = symmetrize([w, z5z7x.word_inverse(w)], z5z7x)
    assert set(one.members) == set(both.members)
    assert len(one) == 10


def test_symmetrize_is_closed(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x), parse_word("a b^3", z5z7x)], z5z7x)
    members = set(rset.members)
    for m in rset.members:
        assert m[1:] + m[:1] in members
        assert z5z7x.word_inverse(m) in members


def test_symmetrize_rejects_empty(z5z7x):
    with pytest.raises(EmptySeed):
        symmetrize([], z5z7x)
    with pytest.raises(EmptySeed):
        symmetrize([()], z5z7x)


def test_epsilon_pieces_of_shared_prefix():
    spec = parse_group_spec("factors: [cyclic 5, cyclic 7]")
    rset = symmetrize([parse_word("a b", spec), parse_word("a b^2", spec)], spec)
    pieces = find_epsilon_pieces(rset, 0)
    assert len(pieces) == 4
    assert all(p.size == 1 for p in pieces)
    shared = {format_word(rset.members[p.member][:1], spec) for p in pieces}
    assert shared == {"a", "a^4"}
    assert all(verify_piece(p, rset, 0) for p in pieces)


def test_letter_unique_word_has_no_pieces(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    assert find_epsilon_pieces(rset, 0) == []
    assert find_epsilon_prime_pieces(rset, 0) == []


def test_pieces_longer_than_members_do_not_exist(z5z7x):
    rset = symmetrize([parse_word("a b", z5z7x), parse_word("a b^2", z5z7x)], z5z7x)
    assert find_epsilon_pieces(rset, 0, min_len=3) == []


def test_epsilon_pieces_are_closed_under_mirrors():
    spec = parse_group_spec("factors: [cyclic 5, cyclic 7]")
    rset = symmetrize([parse_word("a b", spec), parse_word("a^2 b^3", spec)], spec)
    pieces = find_epsilon_pieces(rset, 1)
    assert pieces
    spans = {(p.member, p.u_end, p.member_prime, p.up_end) for p in pieces}
    for r, l, r2, l2 in spans:
        assert (r2, l2, r, l) in spans
    assert all(verify_piece(p, rset, 1) for p in pieces)


def test_epsilon_prime_piece_inside_one_member(z5z7x):
    rset = symmetrize([parse_word("a b a b", z5z7x)], z5z7x)
    pieces = find_epsilon_prime_pieces(rset, 0)
    seed_member = rset.index[parse_word("a b a b", z5z7x)]
    assert any(
        p.member == seed_member and (p.u_start, p.u_end, p.up_start, p.up_end) == (0, 2, 2, 4) and p.orientation == 1
        for p in pieces
    )
    assert all(verify_piece(p, rset, 0) for p in pieces)


def test_epsilon_prime_piece_with_inverse_orientation(z5z7x):
    rset = symmetrize([parse_word("a b x b^6 a^4 x", z5z7x)], z5z7x)
    member = rset.index[parse_word("a b x b^6 a^4 x", z5z7x)]
    pieces = [p for p in find_epsilon_prime_pieces(rset, 0) if p.member == member]
    assert any((p.u_end, p.up_start, p.up_end, p.orientation) == (2, 3, 5, -1) for p in pieces)


def test_tampered_piece_fails_verification(z5z7x):
    rset = symmetrize([parse_word("a b", z5z7x), parse_word("a b^2", z5z7x)], z5z7x)
    piece = find_epsilon_pieces(rset, 0)[0]
    tampered = type(piece)(
        piece.kind, piece.member, piece.u_start, piece.u_end,
        piece.member_prime, piece.up_start, piece.up_end,
        ((2, 1),), piece.z, piece.orientation,
    )
    assert not verify_piece(tampered, rset, 0)


def test_infinite_factor_needs_epsilon_zero():
    spec = parse_group_spec("factors: [zcyclic, cyclic 3]")
    rset = symmetrize([parse_word("a b a^2 b", spec)], spec)
    assert isinstance(find_epsilon_pieces(rset, 0), list)
    with pytest.raises(InfiniteFactorInBall):
        find_epsilon_pieces(rset, 1)


def test_scan_budget(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    with pytest.raises(BudgetExceeded):
        PieceScanner(rset, 1, budget=10).epsilon_pieces()


def test_certificate_for_short_W(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    cert = check_C1(rset, params())
    assert cert.verdict == "pass"
    assert cert.vacuous
    assert cert.violations == [] and cert.clause_failures == []
    assert cert.params.mu == Fraction(11, 2)


def test_certificate_fails_clause_one(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    cert = check_C1(rset, params(rho=6))
    assert cert.verdict == "fail"
    assert {f.clause for f in cert.clause_failures} == {1}


def test_certificate_fails_clause_two(z5z7x):
    rset = symmetrize([parse_word("a a a", z5z7x)], z5z7x)
    cert = check_C(rset, params(lam=1, c=0, rho=1, mu="1/2"))
    assert cert.verdict == "fail"
    assert 2 in {f.clause for f in cert.clause_failures}


def test_shared_prefix_violates_small_mu():
    spec = parse_group_spec("factors: [cyclic 5, cyclic 7]")
    rset = symmetrize([parse_word("a b", spec), parse_word("a b^2", spec)], spec)
    cert = check_C(rset, params(mu="1/2", rho=2))
    assert cert.verdict == "fail"
    assert len(cert.violations) == 4
    assert pruning_threshold(rset, Fraction(1, 2)) == 1


def test_pruning_does_not_change_the_verdict(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x), parse_word("x a b^3", z5z7x)], z5z7x)
    p = params(mu="1/2", rho=3)
    pruned = check_C1(rset, p)
    full = check_C1(rset, p, prune=False)
    assert pruned.verdict == full.verdict
    assert pruned.violations == full.violations


def test_stronger_parameters_transfer_a_pass(z5z7x):
    rset = symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x)
    strong = params(mu="3", rho=5)
    weak = params(mu="6", lam="1/4", c=3, rho=4)
    assert params_stronger(strong, weak)
    assert not params_stronger(weak, strong)
    assert check_C1(rset, strong).verdict == "pass"
    assert check_C1(rset, weak).verdict == "pass"


def test_piece_scan_report(z5z7x):
    rset = symmetrize([parse_word("a b", z5z7x), parse_word("a b^2", z5z7x)], z5z7x)
    report = piece_scan_report(rset, 0, 1, prime=False)
    assert report.kind == "epsilon"
    assert len(report.pieces) == 4
    assert report.statistics.matches >= 2
