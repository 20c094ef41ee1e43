"""
Process configuration for the ghz_chain CLI
Read from the environment (and a local .env file, if present)
"""
import os
import logging
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


class RunConfig:
    """Centralized run configuration."""

    def __init__(self):
        self.workers = self._int_env("GHZ_WORKERS", os.cpu_count() or 1)
        self.log_level = os.getenv("GHZ_LOG_LEVEL", "INFO").upper()
        self.log_file: Optional[str] = os.getenv("GHZ_LOG_FILE") or None
        self.output_dir = os.getenv("GHZ_OUTPUT_DIR", "outputs")
        self.max_step = self._float_env("GHZ_MAX_STEP", 0.5)
        self.pool = self._choice_env("GHZ_POOL", ("process", "thread"), "process")

    @staticmethod
    def _int_env(name: str, default: int) -> int:
        raw = os.getenv(name)
        if not raw:
            return default
        try:
            return max(1, int(raw))
        except ValueError:
            logger.warning(f"{name}={raw!r} is not an integer; using {default}")
            return default

    @staticmethod
    def _choice_env(name: str, choices: Tuple[str, ...], default: str) -> str:
        raw = (os.getenv(name) or "").strip().lower()
        if not raw:
            return default
        if raw not in choices:
            logger.warning(f"{name}={raw!r} is not one of {choices}; using {default}")
            return default
        return raw

    @staticmethod
    def _float_env(name: str, default: float) -> float:
        raw = os.getenv(name)
        if not raw:
            return default
        try:
            value = float(raw)
        except ValueError:
            logger.warning(f"{name}={raw!r} is not a number; using {default}")
            return default
        if value <= 0:
            logger.warning(f"{name}={raw!r} must be positive; using {default}")
            return default
        return value

    def configure_logging(self) -> None:
        """Install the root handler; later calls are no-ops (logging.basicConfig semantics)."""
        logging.basicConfig(
            filename=self.log_file,
            level=getattr(logging, self.log_level, logging.INFO),
            format="%(asctime)s %(levelname)s %(message)s",
        )

    def get_info(self) -> Dict[str, Any]:
        """Current settings for logging/manifests."""
        return {
            "workers": self.workers,
            "log_level": self.log_level,
            "log_file": self.log_file,
            "output_dir": self.output_dir,
            "max_step": self.max_step,
            "pool": self.pool,
        }


# Global configuration instance
run_config = RunConfig()
