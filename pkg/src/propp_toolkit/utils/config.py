"""
Settings management: YAML file, PROPP_* environment variables, CLI flags
"""

from typing import Any, Dict, Literal, Optional

import structlog
import yaml
from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from ..core.pc_engine import default_table_cap

logger = structlog.get_logger(__name__)


class ToolkitSettings(BaseSettings):
    """
    Runtime caps and logging options.

    Precedence: CLI flag > environment (PROPP_*) > YAML file > default.
    CLI flags are applied by the caller after loading (see ``with_overrides``).
    """

    model_config = SettingsConfigDict(
        env_prefix="PROPP_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    max_table: Optional[int] = Field(default=None, ge=1)
    brute_cap: int = Field(default=256, ge=1)
    tate_cap: int = Field(default=4096, ge=1)
    default_prime: int = Field(default=3, ge=3)
    jobs: int = Field(default=1, ge=1)
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"
    log_format: Literal["json", "text"] = "text"
    log_dir: Optional[str] = None

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        # init values come from the YAML file; the environment beats them
        return env_settings, dotenv_settings, init_settings, file_secret_settings

    def table_cap(self, p: int) -> int:
        """Full-table element cap for prime p (p^7 unless overridden)"""
        if self.max_table is not None:
            return self.max_table
        return default_table_cap(p)

    def with_overrides(self, **overrides: Any) -> "ToolkitSettings":
        """Apply CLI flags; None means the flag was not given"""
        updates = {key: value for key, value in overrides.items() if value is not None}
        return self.model_copy(update=updates)


def _load_yaml(config_path: str) -> Dict:
    """Load configuration from YAML file"""
    try:
        with open(config_path, 'r') as f:
            return yaml.safe_load(f) or {}
    except FileNotFoundError:
        logger.debug("config_file_not_found", config_path=config_path)
        return {}


def load_settings(config_path: Optional[str] = None) -> ToolkitSettings:
    """
    Build settings from an optional YAML file plus the environment

    Args:
        config_path: Path to a YAML file; a missing file means defaults

    Returns:
        ToolkitSettings instance
    """
    raw = _load_yaml(config_path) if config_path else {}
    # the YAML file nests everything under "toolkit"; flat files also work
    values = raw.get("toolkit", raw)
    return ToolkitSettings(**values)
