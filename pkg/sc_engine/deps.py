from pathlib import Path
from typing import Optional

from sc_engine.integrity import CacheStore
from sc_engine.settings import settings

_cache_store: CacheStore | None = None


def cache_store(root: Optional[Path] = None) -> CacheStore:
    global _cache_store
    wanted = Path(root) if root is not None else settings.CACHE_DIR
    if _cache_store is None or _cache_store.root != wanted:
        _cache_store = CacheStore(wanted)
    return _cache_store
