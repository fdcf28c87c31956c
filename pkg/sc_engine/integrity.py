"""
Content hashing, element encoding and the on-disk result cache

Implements:
- SHA-256 content hashes and record fingerprints
- Canonical little-endian encoding of normal forms
- A cache of reports keyed by spec hash, parameters and encoded seeds;
  stale or corrupt entries are never served
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Dict, Optional, Sequence, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from sc_engine.groups import GroupSpec, NormalForm, Word
from sc_engine.parsing import canonical_spec_text

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


# =============================================================================
# HASHING
# =============================================================================

class ContentHasher:
    """Stable hashes over spec text, records and normal forms"""

    @staticmethod
    def compute_content_hash(content: str | bytes) -> str:
        if isinstance(content, str):
            content = content.encode("utf-8")
        return hashlib.sha256(content).hexdigest()

    @staticmethod
    def compute_record_fingerprint(record: Dict) -> str:
        """Fingerprint of a parameter record; key order does not matter"""
        json_str = json.dumps(record, sort_keys=True, default=str)
        return ContentHasher.compute_content_hash(json_str)


def spec_fingerprint(spec: GroupSpec) -> str:
    return ContentHasher.compute_content_hash(canonical_spec_text(spec))


def encode_normal_form(g: NormalForm) -> bytes:
    """(slot, value) pairs as little-endian 64-bit integers"""
    return np.asarray(g, dtype="<i8").reshape(-1).tobytes()


def decode_normal_form(blob: bytes) -> NormalForm:
    flat = np.frombuffer(blob, dtype="<i8")
    return tuple((int(flat[i]), int(flat[i + 1])) for i in range(0, len(flat), 2))


# =============================================================================
# CACHE
# =============================================================================

class CacheStore:
    """
    Report cache on disk.

    Entries are keyed by the spec fingerprint, the parameters and the
    canonical encoding of the relator seeds. An entry whose recorded
    fingerprint or seeds no longer match is stale and never served.
    """

    def __init__(self, root: Path):
        self.root = Path(root)

    def _path(self, kind: str, key: str) -> Path:
        return self.root / kind / f"{key}.json"

    def key_for(self, spec: GroupSpec, params: Dict, seeds: Sequence[Word] = ()) -> str:
        return ContentHasher.compute_record_fingerprint({
            "spec": spec_fingerprint(spec),
            "seeds": [ContentHasher.compute_content_hash(encode_normal_form(s)) for s in seeds],
            **params,
        })

    def check(self, kind: str, spec: GroupSpec, params: Dict, model: Type[ModelT], seeds: Sequence[Word] = ()) -> Dict:
        """
        Look an entry up.

        Returns:
            {
                'action': 'hit' | 'stale' | 'corrupt' | 'miss',
                'key': str,
                'report': model instance | None
            }
        """
        key = self.key_for(spec, params, seeds)
        path = self._path(kind, key)
        if not path.exists():
            return {"action": "miss", "key": key, "report": None}

        try:
            envelope = json.loads(path.read_text(encoding="utf-8"))
            report = model.model_validate(envelope["report"])
            stored_seeds = [decode_normal_form(bytes.fromhex(blob)) for blob in envelope.get("seeds", [])]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
            logger.error(f"❌ corrupt cache entry {path}, recomputing: {e}")
            return {"action": "corrupt", "key": key, "report": None}

        if envelope.get("spec_fingerprint") != spec_fingerprint(spec):
            logger.warning(f"⚠️ ignoring stale cache entry {path}")
            return {"action": "stale", "key": key, "report": None}
        if stored_seeds != [tuple(tuple(letter) for letter in s) for s in seeds]:
            logger.warning(f"⚠️ ignoring cache entry {path} recorded for other relators")
            return {"action": "stale", "key": key, "report": None}

        logger.info(f"✅ cache hit {kind}/{key[:12]}")
        return {"action": "hit", "key": key, "report": report}

    def store(self, kind: str, spec: GroupSpec, params: Dict, report: BaseModel, seeds: Sequence[Word] = ()) -> Optional[Path]:
        key = self.key_for(spec, params, seeds)
        path = self._path(kind, key)
        envelope = {
            "spec_fingerprint": spec_fingerprint(spec),
            "params": params,
            "seeds": [encode_normal_form(s).hex() for s in seeds],
            "report": report.model_dump(mode="json", by_alias=True),
        }
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(envelope, sort_keys=True, default=str), encoding="utf-8")
        except OSError as e:
            logger.warning(f"⚠️ could not write cache entry {path}: {e}")
            return None
        return path
