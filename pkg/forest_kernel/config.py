"""
Configuration Management Module

Handles library and CLI settings using pydantic-settings.
Loads settings from FOREST_KERNEL_* environment variables and .env file.
"""

from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Settings loaded from environment variables or .env file.

    FOREST_KERNEL_MAX_POINTS, when set, overrides both size limits.
    """

    # Logging
    log_level: str = "WARNING"
    log_file: Optional[str] = None
    log_max_size: int = 10485760  # 10MB
    log_backup_count: int = 3

    # Size limits (total points m + n)
    enumeration_limit: int = Field(9, ge=1)
    kernel_limit: int = Field(14, ge=1)
    max_points: Optional[int] = Field(None, ge=1)

    # Numerics
    float_tolerance: float = Field(1e-9, gt=0)
    debug_memo: bool = False

    # Parallelism
    workers: int = Field(1, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="FOREST_KERNEL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @property
    def effective_enumeration_limit(self) -> int:
        """Point limit for brute-force and peeling enumeration."""
        return self.max_points if self.max_points is not None else self.enumeration_limit

    @property
    def effective_kernel_limit(self) -> int:
        """Point limit for the memoized Q recursion."""
        return self.max_points if self.max_points is not None else self.kernel_limit


# Global settings instance
settings = Settings()
