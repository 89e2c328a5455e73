"""Local inference shim: hosts embedding and chat models behind the small
HTTP wire contract that the transcreval providers speak."""

from .app import create_app
from .config import ShimConfig, load_config

__version__ = "0.1.0"

__all__ = ["ShimConfig", "create_app", "load_config", "__version__"]
