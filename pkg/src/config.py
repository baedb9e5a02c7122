"""
Settings
Environment driven defaults; a local .env file is honoured.
"""

import os
import logging

from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

DEFAULT_STATE_CAP = 5_000_000
DEFAULT_DEPTH = 24
DEFAULT_STEP_BOUND = 256
DEFAULT_CLOSURE_CAP = 20_000


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def state_cap() -> int:
    """Visited-state cap for exhaustive exploration (FLPE_CAP)."""
    return _int_env("FLPE_CAP", DEFAULT_STATE_CAP)


def depth_bound() -> int:
    """Default exploration depth (FLPE_DEPTH)."""
    return _int_env("FLPE_DEPTH", DEFAULT_DEPTH)


def step_bound() -> int:
    """Default step bound for single runs (FLPE_STEP_BOUND)."""
    return _int_env("FLPE_STEP_BOUND", DEFAULT_STEP_BOUND)


def closure_cap() -> int:
    """Largest closure set the logic engine will search (FLPE_CLOSURE_CAP)."""
    return _int_env("FLPE_CLOSURE_CAP", DEFAULT_CLOSURE_CAP)


def output_dir() -> str:
    """Where traces and reports go when --out is not given (FLPE_OUT)."""
    return os.getenv("FLPE_OUT", "out")


def log_level(default: str = "INFO") -> str:
    return os.getenv("LOG_LEVEL", default)
