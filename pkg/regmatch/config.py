"""Global configuration and settings management for regmatch."""

import os
from threading import Lock
from typing import Any, Optional

from pydantic import BaseModel, Field

ENV_PREFIX = "REGMATCH_"


class Settings(BaseModel):
    """Tunable constants shared by the matchers and the decomposition."""

    zero_epsilon: float = Field(
        1e-12, ge=0, description="Entries at or below this are deleted"
    )
    sum_tolerance: float = Field(
        1e-9, gt=0, description="Row/column sum tolerance, scaled by n"
    )
    untruncated_cap_factor: int = Field(
        10_000, ge=1, description="Global step cap factor, untruncated mode"
    )
    simple_retry_factor: int = Field(
        100, ge=1, description="Per-row repair attempts in simple mode, x d"
    )
    rng_buffer_size: int = Field(
        4096, ge=1, description="Uniform doubles drawn per buffer refill"
    )
    rebuild_interval: int = Field(
        1, ge=1, description="Float sampler rebuild period, x size updates"
    )
    default_seed: int = Field(0, ge=0, description="Seed when none given")

    @classmethod
    def from_env(cls, **overrides: Any) -> "Settings":
        """
        Build settings from explicit overrides, then environment, then defaults.

        Args:
            **overrides: Field values taking precedence over the environment

        Returns:
            Validated Settings instance

        Example:
            >>> import os
            >>> os.environ["REGMATCH_DEFAULT_SEED"] = "7"
            >>> Settings.from_env().default_seed
            7
        """
        values = {}
        for name in cls.model_fields:
            env_value = os.getenv(ENV_PREFIX + name.upper())
            if env_value is not None:
                values[name] = env_value
        values.update(overrides)
        return cls(**values)


class _GlobalConfig:
    """
    Thread-safe global settings holder.

    Library functions that take an optional ``settings`` argument fall back
    to the instance held here.

    Example:
        >>> from regmatch import configure, get_settings
        >>>
        >>> configure(zero_epsilon=1e-14)
        >>> get_settings().zero_epsilon
        1e-14
    """

    def __init__(self) -> None:
        """Initialize global configuration."""
        self._settings: Optional[Settings] = None
        self._lock = Lock()

    def set_settings(self, settings: Settings) -> None:
        """
        Replace the global settings instance.

        Args:
            settings: Settings instance to use globally
        """
        with self._lock:
            self._settings = settings

    def get_settings(self) -> Settings:
        """
        Get the global settings, building them from the environment lazily.

        Returns:
            Global Settings instance
        """
        with self._lock:
            if self._settings is None:
                self._settings = Settings.from_env()
            return self._settings

    def configure(self, **overrides: Any) -> Settings:
        """
        Configure and install global settings.

        Args:
            **overrides: Settings fields to override

        Returns:
            The installed Settings instance
        """
        settings = Settings.from_env(**overrides)
        self.set_settings(settings)
        return settings

    def clear(self) -> None:
        """Drop the global settings so the next read rebuilds them."""
        with self._lock:
            self._settings = None


_config = _GlobalConfig()


def get_config() -> _GlobalConfig:
    """
    Get the global configuration instance.

    Returns:
        Global configuration instance
    """
    return _config


def configure(**overrides: Any) -> Settings:
    """
    Configure the global regmatch settings.

    Args:
        **overrides: Settings fields to override

    Returns:
        Installed Settings instance

    Example:
        >>> from regmatch import configure
        >>>
        >>> settings = configure(untruncated_cap_factor=500)
        >>> settings.untruncated_cap_factor
        500
    """
    return _config.configure(**overrides)


def get_settings() -> Settings:
    """Return the global settings."""
    return _config.get_settings()


def resolve_settings(settings: Optional[Settings]) -> Settings:
    """Return ``settings`` if given, else the global settings."""
    return settings if settings is not None else _config.get_settings()


def reset_settings() -> None:
    """
    Clear the global settings.

    Example:
        >>> from regmatch import reset_settings
        >>>
        >>> reset_settings()
    """
    _config.clear()
