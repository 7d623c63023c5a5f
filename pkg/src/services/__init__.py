"""Service layer for shockdecomp."""

from src.services.config_manager import ConfigManager
from src.services.settings import RuntimeSettings

__all__ = [
    "ConfigManager",
    "RuntimeSettings",
]
