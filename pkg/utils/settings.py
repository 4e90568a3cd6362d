"""
Process Settings

Environment-driven settings. Only log verbosity is read from the
environment; everything that changes results goes through flags or config.
"""

import logging

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class EngineSettings(BaseSettings):
    """Settings read from SCDEPTH_* environment variables."""
    model_config = SettingsConfigDict(env_prefix="SCDEPTH_", extra="ignore")

    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level '{value}'")
        return level


def get_settings() -> EngineSettings:
    """Read settings from the current environment."""
    return EngineSettings()
