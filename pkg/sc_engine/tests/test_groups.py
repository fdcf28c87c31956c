import numpy as np
import pytest

from sc_engine.errors import (
    InfiniteFactorInBall,
    QuotientNotDecidable,
    RadiusCapExceeded,
    SpecMismatch,
)
from sc_engine.groups import (
    IDENTITY,
    ball,
    conjugate,
    element_order,
    invert,
    multiply,
    normal_form,
    relative_length,
)
from sc_engine.parsing import parse_element, parse_group_spec, parse_word


@pytest.mark.parametrize("literal, expected", [
    ("a^2 a^3", ""),
    ("x a^2 x^-1 x a^3 x^-1", ""),
    ("a^2 b^3", "a^2 b^3"),
    ("b^3 b^4 a", "a"),
    ("x x^-1 x", "x"),
])
def test_normal_form(z5z7x, literal, expected):
    assert normal_form(parse_word(literal, z5z7x), z5z7x) == (parse_element(expected, z5z7x) if expected else IDENTITY)


def test_multiply_invert_conjugate(z5z7x):
    a2, a3 = parse_element("a^2", z5z7x), parse_element("a^3", z5z7x)
    assert multiply(a2, a3, z5z7x) == IDENTITY
    assert invert(parse_element("x a^2", z5z7x), z5z7x) == parse_element("a^3 x^-1", z5z7x)
    conj = conjugate(parse_element("a", z5z7x), parse_element("x", z5z7x), z5z7x)
    assert conj == parse_element("x^-1 a x", z5z7x)
    assert relative_length(conj, z5z7x) == 3


@pytest.mark.parametrize("literal, length", [
    ("a^3", 1),
    ("x a^2 b^3 x^-1", 4),
    ("x^3", 3),
    ("1", 0),
])
def test_relative_length(z5z7x, literal, length):
    assert relative_length(parse_element(literal, z5z7x), z5z7x) == length


def test_malformed_elements_are_rejected(z5z7x):
    with pytest.raises(SpecMismatch):
        multiply(((0, 1), (0, 2)), IDENTITY, z5z7x)
    with pytest.raises(SpecMismatch):
        relative_length(((0, 9),), z5z7x)
    with pytest.raises(SpecMismatch):
        normal_form(((7, 1),), z5z7x)


def test_random_words_agree_with_stepwise_product(z5z7x):
    rng = np.random.default_rng(7)
    alphabet = z5z7x.alphabet()
    for _ in range(200):
        word = [alphabet[int(i)] for i in rng.integers(len(alphabet), size=12)]
        split = int(rng.integers(13))
        left = normal_form(word[:split], z5z7x)
        right = normal_form(word[split:], z5z7x)
        assert multiply(left, right, z5z7x) == normal_form(word, z5z7x)
        g = normal_form(word, z5z7x)
        assert multiply(g, invert(g, z5z7x), z5z7x) == IDENTITY


@pytest.mark.parametrize("literal, order", [
    ("1", 1),
    ("a", 5),
    ("x b^2 x^-1", 7),
    ("a b", None),
    ("x", None),
])
def test_element_order(z5z7x, literal, order):
    assert element_order(parse_element(literal, z5z7x), z5z7x) == order


def test_ball_sizes(z3z3):
    assert len(ball(z3z3, 0)) == 1
    b1 = ball(z3z3, 1)
    assert len(b1) == 5
    assert sorted(b1.sphere(1)) == sorted(parse_element(w, z3z3) for w in ("a", "a^2", "b", "b^2"))
    assert len(ball(z3z3, 2)) == 13


def test_ball_of_free_group():
    spec = parse_group_spec("free: [x]")
    assert len(ball(spec, 3)) == 7


def test_ball_parents_are_one_letter_closer(z5z7x):
    b = ball(z5z7x, 2)
    for g, parents in b.parents.items():
        for parent, letter in parents:
            assert b.distances[parent] == b.distances[g] - 1
            stack = list(parent)
            z5z7x.push(stack, letter)
            assert tuple(stack) == g


def test_ball_errors(z5z7x):
    with pytest.raises(RadiusCapExceeded):
        ball(z5z7x, 7)
    with pytest.raises(InfiniteFactorInBall):
        ball(parse_group_spec("factors: [zcyclic]"), 1)
    with pytest.raises(QuotientNotDecidable):
        ball(parse_group_spec('factors: [cyclic 5]; free: [x]; relators: ["x a"]'), 1)


def test_normal_form_is_a_fixed_point(z5z7x):
    rng = np.random.default_rng(3)
    alphabet = z5z7x.alphabet()
    for _ in range(200):
        word = [alphabet[int(i)] for i in rng.integers(len(alphabet), size=10)]
        g = normal_form(word, z5z7x)
        assert normal_form(g, z5z7x) == g


def test_relative_length_is_the_cayley_graph_distance():
    spec = parse_group_spec("factors: [cyclic 3, cyclic 4]; free: [x]")
    b = ball(spec, 4)
    for g, distance in b.distances.items():
        assert relative_length(g, spec) == distance


def test_arithmetic_needs_a_pure_free_product():
    spec = parse_group_spec('factors: [cyclic 5, cyclic 7]; free: [x]; relators: ["x a b"]')
    word = parse_word("x a b", spec)
    with pytest.raises(QuotientNotDecidable):
        normal_form(word, spec)
    with pytest.raises(QuotientNotDecidable):
        relative_length(spec.without_relators().reduce(word), spec)
    assert relative_length(normal_form(word, spec.without_relators()), spec.without_relators()) == 3


def test_ball_of_radius_zero_allows_infinite_factors():
    assert ball(parse_group_spec("factors: [zcyclic]"), 0).elements() == [IDENTITY]
