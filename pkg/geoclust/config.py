"""
geoclust configuration
"""

from typing import Any, Dict, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class GeoclustSettings(BaseSettings):
    """Environment-driven settings (GEOCLUST_* variables, optional .env file)"""

    model_config = SettingsConfigDict(
        env_prefix="GEOCLUST_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    debug: bool = False
    oracle_max_n: int = Field(default=12, ge=1, le=12)
    max_iterations: int = Field(default=10_000, ge=1)
    default_swap_cap: int = Field(default=3, ge=1)

    @property
    def effective_log_level(self) -> str:
        """DEBUG when debug is set, else log_level"""
        return "DEBUG" if self.debug else self.log_level


def get_settings() -> GeoclustSettings:
    return GeoclustSettings()


class GeoclustConfig:
    """Configuration management with dotted-key access"""

    def __init__(self, settings: Optional[GeoclustSettings] = None):
        self.settings = settings or get_settings()
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Assemble settings and the documented parameter defaults"""
        # Imported here: the parameter models live next to the code that uses them.
        from .partition import PartitionParams
        from .separator import SeparatorParams

        return {
            "runtime": {
                "threads": self.settings.threads,
                "log_level": self.settings.effective_log_level,
                "debug": self.settings.debug,
            },
            "limits": {
                "oracle_max_n": self.settings.oracle_max_n,
                "max_iterations": self.settings.max_iterations,
            },
            "local_search": {
                "swap_cap": self.settings.default_swap_cap,
            },
            "separator": SeparatorParams().model_dump(),
            "partition": PartitionParams().model_dump(exclude={"separator"}),
        }

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key"""
        keys = key.split(".")
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value
