"""
Group specification and word literal parsing

Grammar (sections separated by newlines or ';'):

    factors: [cyclic 5 as a index 1, table [[0,1],[1,0]] as t, zcyclic as z]
    free: [x, y]
    relators: ["x a b a^2 b^2"]

Word literals are whitespace-separated tokens NAME, NAME^p or NAME.k^p
where NAME.k picks element id k of a table factor. The literal "1" is
the identity.
"""

import json
import logging
import re
from typing import Dict, List, Optional, Sequence, Tuple

from sc_engine.errors import (
    DuplicateFactorIndex,
    InvalidTable,
    SpecSyntaxError,
    UnknownGenerator,
    ZeroPower,
)
from sc_engine.groups import FactorKind, FactorSpec, GroupSpec, Letter, NormalForm, Word, validate_table
from sc_engine.settings import settings

logger = logging.getLogger(__name__)

SECTION_PATTERN = re.compile(r"^\s*(factors|free|relators)\s*:\s*(\[.*\])\s*$", re.DOTALL)
FACTOR_PATTERN = re.compile(
    r"^(?P<kind>cyclic|table|zcyclic)"
    r"(?:\s+(?P<order>-?\d+))?"
    r"(?:\s+(?P<table>\[.*\]))?"
    r"(?:\s+as\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*))?"
    r"(?:\s+index\s+(?P<index>\d+))?$",
    re.DOTALL,
)
TOKEN_PATTERN = re.compile(r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?:\.(?P<elem>\d+))?(?:\^(?P<power>-?\d+))?$")
NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

DEFAULT_NAMES = "abcdefghijklmnopqrstuvw"


# =============================================================================
# HELPERS
# =============================================================================

def _split_top_level(text: str, separators: str) -> List[str]:
    """Split on separators outside brackets and quotes"""
    parts, depth, quote, current = [], 0, None, []
    for ch in text:
        if quote:
            current.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "\"'":
            quote = ch
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise SpecSyntaxError("unbalanced ']'")
        elif ch in separators and depth == 0:
            parts.append("".join(current))
            current = []
            continue
        current.append(ch)
    if depth != 0 or quote:
        raise SpecSyntaxError("unbalanced brackets or quotes")
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _list_items(body: str) -> List[str]:
    inner = body.strip()[1:-1]
    return _split_top_level(inner, ",")


def _unquote(item: str) -> str:
    if len(item) >= 2 and item[0] == item[-1] and item[0] in "\"'":
        return item[1:-1]
    raise SpecSyntaxError(f"relator {item!r} must be quoted")


# =============================================================================
# GROUP SPECS
# =============================================================================

def _parse_factor(item: str, position: int) -> Tuple[Optional[str], int, dict]:
    match = FACTOR_PATTERN.match(item.strip())
    if not match:
        raise SpecSyntaxError(f"cannot parse factor {item!r}")
    kind = FactorKind(match.group("kind"))
    fields: dict = {"kind": kind}

    if kind is FactorKind.CYCLIC:
        if match.group("order") is None or match.group("table"):
            raise SpecSyntaxError(f"cyclic factor needs exactly an order: {item!r}")
        order = int(match.group("order"))
        if order < 2:
            raise InvalidTable(f"order {order} < 2")
        if order > settings.CYCLIC_ORDER_CAP:
            raise InvalidTable(f"order {order} exceeds cyclic cap {settings.CYCLIC_ORDER_CAP}")
        fields["order"] = order
    elif kind is FactorKind.TABLE:
        if match.group("table") is None or match.group("order") is not None:
            raise SpecSyntaxError(f"table factor needs exactly a table: {item!r}")
        try:
            rows = json.loads(match.group("table"))
        except json.JSONDecodeError as e:
            raise SpecSyntaxError(f"table is not a JSON array: {e}")
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise InvalidTable("table must be a list of rows")
        fields["rows"] = tuple(tuple(r) for r in rows)
        fields["order"] = len(rows)
    elif match.group("order") is not None or match.group("table"):
        raise SpecSyntaxError(f"zcyclic takes no order: {item!r}")

    index = int(match.group("index")) if match.group("index") else position + 1
    return match.group("name"), index, fields


def parse_group_spec(text: str) -> GroupSpec:
    """
    Parse the group specification text.

    Raises:
        SpecSyntaxError, InvalidTable, DuplicateFactorIndex, UnknownGenerator
    """
    sections: Dict[str, str] = {}
    for chunk in _split_top_level(text, ";\n"):
        if chunk.startswith("#"):
            continue
        match = SECTION_PATTERN.match(chunk)
        if not match:
            raise SpecSyntaxError(f"cannot parse section {chunk!r}")
        key = match.group(1)
        if key in sections:
            raise SpecSyntaxError(f"section {key!r} given twice")
        sections[key] = match.group(2)

    if "factors" not in sections and "free" not in sections:
        raise SpecSyntaxError("spec names neither factors nor free generators")

    free_names = tuple(_list_items(sections.get("free", "[]")))
    for name in free_names:
        if not NAME_PATTERN.match(name):
            raise SpecSyntaxError(f"bad generator name {name!r}")

    parsed = [_parse_factor(item, i) for i, item in enumerate(_list_items(sections.get("factors", "[]")))]
    taken = set(free_names) | {name for name, _, _ in parsed if name}
    defaults = iter(c for c in DEFAULT_NAMES if c not in taken)

    factors: List[FactorSpec] = []
    seen_index: Dict[int, str] = {}
    for name, index, fields in parsed:
        name = name or next(defaults)
        if index in seen_index:
            raise DuplicateFactorIndex(f"index {index} used by {seen_index[index]} and {name}")
        seen_index[index] = name
        factor = FactorSpec(index=index, name=name, **fields)
        if factor.kind is FactorKind.TABLE:
            validate_table(factor.rows)
        factors.append(factor)

    names = [f.name for f in factors] + list(free_names)
    if len(set(names)) != len(names):
        raise SpecSyntaxError(f"generator names collide: {names}")

    base = GroupSpec(factors=tuple(factors), free_names=free_names)
    relators = tuple(parse_word(_unquote(item), base) for item in _list_items(sections.get("relators", "[]")))
    spec = GroupSpec(factors=base.factors, free_names=free_names, extra_relators=relators)
    logger.debug(f"parsed spec with {len(factors)} factors, {len(free_names)} free generators, {len(relators)} relators")
    return spec


# =============================================================================
# WORDS
# =============================================================================

def _slot_lookup(spec: GroupSpec) -> Dict[str, int]:
    lookup = {f.name: slot for slot, f in enumerate(spec.factors)}
    lookup.update({name: spec.k + j for j, name in enumerate(spec.free_names)})
    return lookup


def parse_word(text: str, spec: GroupSpec) -> Word:
    """Parse a word literal into letters over X ∪ H"""
    lookup = _slot_lookup(spec)
    letters: List[Letter] = []
    for token in text.split():
        if token == "1":
            continue
        match = TOKEN_PATTERN.match(token)
        if not match:
            raise SpecSyntaxError(f"cannot parse token {token!r}")
        name = match.group("name")
        if name not in lookup:
            raise UnknownGenerator(f"unknown generator {name!r}")
        slot = lookup[name]
        power = int(match.group("power")) if match.group("power") is not None else 1
        elem = match.group("elem")

        if slot >= spec.k:
            if elem is not None:
                raise SpecSyntaxError(f"free generator {name!r} takes no element id")
            if power == 0:
                raise ZeroPower(f"{token} is the identity")
            step = 1 if power > 0 else -1
            letters.extend([(slot, step)] * abs(power))
            continue

        factor = spec.factors[slot]
        if factor.kind is FactorKind.TABLE:
            label = int(elem) if elem is not None else 1
            if label not in factor.labels:
                raise UnknownGenerator(f"{name} has no element {label}")
            base = factor.labels.index(label)
        else:
            base = int(elem) if elem is not None else 1
            if factor.is_finite and base >= factor.order:
                raise UnknownGenerator(f"{name} has no element {base}")
        value = factor.power(base, power)
        if value == 0:
            raise ZeroPower(f"{token} is the identity of {name}")
        letters.append((slot, value))
    return tuple(letters)


def parse_element(text: str, spec: GroupSpec) -> NormalForm:
    return spec.reduce(parse_word(text, spec))


def _format_letter(slot: int, value: int, spec: GroupSpec) -> str:
    name = spec.slot_name(slot)
    if slot >= spec.k:
        return name if value == 1 else f"{name}^{value}"
    factor = spec.factors[slot]
    if factor.kind is FactorKind.TABLE:
        return f"{name}.{factor.labels[value]}"
    return name if value == 1 else f"{name}^{value}"


def format_word(word: Sequence[Letter], spec: GroupSpec) -> str:
    """One token per letter; free syllables are spelled out letter by letter"""
    tokens = []
    for slot, value in word:
        if slot >= spec.k and abs(value) != 1:
            step = 1 if value > 0 else -1
            tokens.extend([_format_letter(slot, step, spec)] * abs(value))
        else:
            tokens.append(_format_letter(slot, value, spec))
    return " ".join(tokens) if tokens else "1"


def format_element(g: NormalForm, spec: GroupSpec) -> str:
    return format_word(spec.letters_of(g), spec)


def canonical_spec_text(spec: GroupSpec) -> str:
    """Stable rendering used in reports and fingerprints"""
    items = []
    for f in spec.factors:
        if f.kind is FactorKind.CYCLIC:
            head = f"cyclic {f.order}"
        elif f.kind is FactorKind.TABLE:
            head = "table " + json.dumps([list(r) for r in f.rows], separators=(",", ":"))
        else:
            head = "zcyclic"
        items.append(f"{head} as {f.name} index {f.index}")
    lines = [f"factors: [{', '.join(items)}]", f"free: [{', '.join(spec.free_names)}]"]
    if spec.extra_relators:
        quoted = ", ".join(f'"{format_word(r, spec)}"' for r in spec.extra_relators)
        lines.append(f"relators: [{quoted}]")
    return "\n".join(lines)


def parse_word_list(text: str, spec: GroupSpec) -> List[Word]:
    """One word literal per non-empty line; '#' starts a comment"""
    words = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.append(parse_word(line, spec))
    return words
