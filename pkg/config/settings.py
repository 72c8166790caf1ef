"""
Centralized process settings for the NEPDF causal toolkit.

Settings are loaded from environment variables with sensible defaults.
Use a .env file for local development.
"""

import os
from dataclasses import dataclass, field

from dotenv import load_dotenv

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    try:
        return int(raw) if raw.strip() else default
    except ValueError:
        return default


@dataclass(frozen=True)
class ParallelSettings:
    """Worker parallelism settings."""

    # 0 means one worker per CPU.
    threads: int = field(default_factory=lambda: _env_int("NEPDF_THREADS", 0))

    @property
    def workers(self) -> int:
        """Effective worker count."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


@dataclass(frozen=True)
class AppSettings:
    """Root settings container."""

    parallel: ParallelSettings = field(default_factory=ParallelSettings)

    log_level: str = field(default_factory=lambda: os.getenv("NEPDF_LOG_LEVEL", "INFO"))
    output_dir: str = field(default_factory=lambda: os.getenv("NEPDF_OUTPUT_DIR", "runs"))

    def validate(self) -> list[str]:
        """Validate settings. Returns list of errors."""
        errors = []
        if self.parallel.threads < 0:
            errors.append("NEPDF_THREADS must be >= 0")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"NEPDF_LOG_LEVEL has unknown level {self.log_level!r}")
        return errors


# Singleton settings instance
settings = AppSettings()
