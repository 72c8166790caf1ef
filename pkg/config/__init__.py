"""Configuration module for the NEPDF causal toolkit."""

from config.settings import settings

__all__ = ["settings"]
