import pytest

from sc_engine.errors import (
    DuplicateFactorIndex,
    InvalidTable,
    SpecSyntaxError,
    UnknownGenerator,
    ZeroPower,
)
from sc_engine.groups import FactorKind
from sc_engine.parsing import (
    canonical_spec_text,
    format_word,
    parse_element,
    parse_group_spec,
    parse_word,
    parse_word_list,
)


def test_cyclic_factors_and_free_generators():
    spec = parse_group_spec("factors: [cyclic 5, cyclic 7]; free: [x]")
    assert [f.order for f in spec.factors] == [5, 7]
    assert [f.name for f in spec.factors] == ["a", "b"]
    assert [f.index for f in spec.factors] == [1, 2]
    assert spec.free_names == ("x",)


def test_cyclic_order_one_is_invalid():
    with pytest.raises(InvalidTable):
        parse_group_spec("factors: [cyclic 1]")


def test_two_element_table():
    spec = parse_group_spec("factors: [table [[0,1],[1,0]]]")
    factor = spec.factors[0]
    assert factor.kind is FactorKind.TABLE
    assert factor.order == 2
    assert factor.mul(1, 1) == 0


@pytest.mark.parametrize("rows", [
    "[[0,1],[0,1]]",
    "[[0,1,2],[1,2,0]]",
    "[[0,1],[1,2]]",
    "[[0]]",
])
def test_bad_tables(rows):
    with pytest.raises(InvalidTable):
        parse_group_spec(f"factors: [table {rows}]")


def test_non_associative_table():
    # a Latin square with identity 0 that is not a group
    rows = "[[0,1,2,3,4],[1,0,3,4,2],[2,4,0,1,3],[3,2,4,0,1],[4,3,1,2,0]]"
    with pytest.raises(InvalidTable, match="associative"):
        parse_group_spec(f"factors: [table {rows}]")


def test_table_identity_is_relabelled():
    spec = parse_group_spec("factors: [table [[1,0],[0,1]] as t]")
    assert parse_word("t.0", spec) == ((0, 1),)
    with pytest.raises(ZeroPower):
        parse_word("t.1", spec)
    assert format_word(parse_word("t.0", spec), spec) == "t.0"


def test_duplicate_factor_index():
    with pytest.raises(DuplicateFactorIndex):
        parse_group_spec("factors: [cyclic 5 index 1, cyclic 7 index 1]")


@pytest.mark.parametrize("text", [
    "factors: cyclic 5",
    "factors: [cyclic]",
    "factors: [cyclic 5",
    "colours: [red]",
    "",
])
def test_syntax_errors(text):
    with pytest.raises(SpecSyntaxError):
        parse_group_spec(text)


def test_named_factors_and_relators():
    spec = parse_group_spec('factors: [cyclic 5 as p, zcyclic as z index 4]\nfree: [x]\nrelators: ["x p z^3"]')
    assert spec.factors[1].kind is FactorKind.INFINITE_CYCLIC
    assert spec.factors[1].index == 4
    assert spec.extra_relators == (((2, 1), (0, 1), (1, 3)),)
    assert not spec.is_pure


def test_parse_word_letters(z5z7x):
    assert parse_word("x a^2 b^-3", z5z7x) == ((2, 1), (0, 2), (1, 4))
    assert parse_word("x^2", z5z7x) == ((2, 1), (2, 1))
    assert parse_word("1", z5z7x) == ()


@pytest.mark.parametrize("literal, error", [
    ("a^5", ZeroPower),
    ("x^0", ZeroPower),
    ("y", UnknownGenerator),
    ("a.9", UnknownGenerator),
    ("a^", SpecSyntaxError),
    ("x.2", SpecSyntaxError),
])
def test_parse_word_errors(z5z7x, literal, error):
    with pytest.raises(error):
        parse_word(literal, z5z7x)


def test_format_spells_one_token_per_letter(z5z7x):
    g = parse_element("x x a^3 x^-1", z5z7x)
    text = format_word(z5z7x.letters_of(g), z5z7x)
    assert text == "x x a^3 x^-1"
    assert parse_word(text, z5z7x) == z5z7x.letters_of(g)


def test_canonical_spec_text_reparses(z5z7x):
    text = canonical_spec_text(z5z7x)
    assert text == "factors: [cyclic 5 as a index 1, cyclic 7 as b index 2]\nfree: [x]"
    assert canonical_spec_text(parse_group_spec(text)) == text


def test_word_list_skips_comments(z5z7x):
    words = parse_word_list("# seeds\na b\n\na b^2  # second\n", z5z7x)
    assert words == [((0, 1), (1, 1)), ((0, 1), (1, 2))]
