import json

import pytest

from sc_engine.deps import cache_store
from sc_engine.integrity import (
    CacheStore,
    ContentHasher,
    decode_normal_form,
    encode_normal_form,
    spec_fingerprint,
)
from sc_engine.models import SCCertificate
from sc_engine.parsing import parse_element, parse_group_spec, parse_word
from sc_engine.pieces import check_C1, symmetrize
from sc_engine.words import theorem_params


@pytest.fixture
def certificate(z5z7x):
    return check_C1(symmetrize([parse_word("x a b a^2 b^2", z5z7x)], z5z7x), theorem_params(2, 0))


def test_content_hash_is_stable():
    h = ContentHasher.compute_content_hash("factors: [cyclic 5]")
    assert len(h) == 64
    assert ContentHasher.compute_content_hash(b"factors: [cyclic 5]") == h
    assert ContentHasher.compute_content_hash("factors: [cyclic 7]") != h


def test_record_fingerprint_ignores_key_order():
    a = ContentHasher.compute_record_fingerprint({"n": 20, "epsilon": 1})
    b = ContentHasher.compute_record_fingerprint({"epsilon": 1, "n": 20})
    assert a == b
    assert a != ContentHasher.compute_record_fingerprint({"n": 20, "epsilon": 0})


def test_spec_fingerprint_follows_canonical_text():
    one = parse_group_spec("factors: [cyclic 5, cyclic 7]; free: [x]")
    two = parse_group_spec("free: [x]\nfactors: [cyclic 5 as a index 1, cyclic 7 as b]")
    three = parse_group_spec("factors: [cyclic 5, cyclic 11]; free: [x]")
    assert spec_fingerprint(one) == spec_fingerprint(two)
    assert spec_fingerprint(one) != spec_fingerprint(three)


@pytest.mark.parametrize("literal", ["1", "a", "x^-3 a b^6", "x a b a^2 b^2 x^-1"])
def test_normal_form_encoding(z5z7x, literal):
    g = parse_element(literal, z5z7x)
    blob = encode_normal_form(g)
    assert len(blob) == 16 * len(g)
    assert decode_normal_form(blob) == g


def test_cache_miss_then_hit(tmp_path, z5z7x, certificate):
    store = CacheStore(tmp_path)
    params = {"n": 2, "epsilon": 0}
    assert store.check("thm_w", z5z7x, params, SCCertificate)["action"] == "miss"

    path = store.store("thm_w", z5z7x, params, certificate)
    assert path is not None and path.exists()
    hit = store.check("thm_w", z5z7x, params, SCCertificate)
    assert hit["action"] == "hit"
    assert hit["report"] == certificate

    assert store.check("thm_w", z5z7x, {"n": 2, "epsilon": 1}, SCCertificate)["action"] == "miss"


def test_stale_and_corrupt_entries_are_ignored(tmp_path, z5z7x, certificate):
    store = CacheStore(tmp_path)
    params = {"n": 2, "epsilon": 0}
    path = store.store("thm_w", z5z7x, params, certificate)

    envelope = json.loads(path.read_text(encoding="utf-8"))
    envelope["spec_fingerprint"] = "0" * 64
    path.write_text(json.dumps(envelope), encoding="utf-8")
    assert store.check("thm_w", z5z7x, params, SCCertificate)["action"] == "stale"

    path.write_text("{not json", encoding="utf-8")
    assert store.check("thm_w", z5z7x, params, SCCertificate)["action"] == "corrupt"


def test_cache_is_keyed_by_encoded_seeds(tmp_path, z5z7x, certificate):
    store = CacheStore(tmp_path)
    params = {"n": 2, "epsilon": 0}
    word = parse_word("x a b a^2 b^2", z5z7x)
    other = parse_word("x a b^2 a^2 b", z5z7x)
    path = store.store("thm_w", z5z7x, params, certificate, seeds=[word])

    envelope = json.loads(path.read_text(encoding="utf-8"))
    assert envelope["seeds"] == [encode_normal_form(word).hex()]
    assert store.check("thm_w", z5z7x, params, SCCertificate, seeds=[word])["action"] == "hit"
    assert store.check("thm_w", z5z7x, params, SCCertificate, seeds=[other])["action"] == "miss"
    assert store.check("thm_w", z5z7x, params, SCCertificate)["action"] == "miss"

    envelope["seeds"] = [encode_normal_form(other).hex()]
    path.write_text(json.dumps(envelope), encoding="utf-8")
    assert store.check("thm_w", z5z7x, params, SCCertificate, seeds=[word])["action"] == "stale"

    envelope["seeds"] = ["not hex"]
    path.write_text(json.dumps(envelope), encoding="utf-8")
    assert store.check("thm_w", z5z7x, params, SCCertificate, seeds=[word])["action"] == "corrupt"


def test_cache_store_follows_requested_root(tmp_path):
    first = cache_store(tmp_path / "one")
    assert cache_store(tmp_path / "one") is first
    assert cache_store(tmp_path / "two").root == tmp_path / "two"
