from pathlib import Path
from typing import Literal, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="SCW_", extra="ignore")

    CACHE_DIR: Path = Path(".sc_cache")
    SEED: int = 0
    RADIUS_CAP: int = 6
    CYCLIC_ORDER_CAP: int = 65536
    TABLE_ORDER_CAP: int = 64
    BUDGET_NODES: int = 1_000_000
    BUDGET_SECS: Optional[float] = None
    SCAN_BUDGET: int = 50_000_000
    WORKERS: int = 1
    OUTPUT_FORMAT: Literal["json", "text"] = "text"
    SHOW_PROGRESS: bool = False
    LOG_LEVEL: str = "INFO"


settings = Settings()


def activate(session: Settings) -> None:
    """Install a run's session values on the shared singleton"""
    for name in Settings.model_fields:
        setattr(settings, name, getattr(session, name))
