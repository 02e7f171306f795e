"""BSDM Configuration Settings

This module automatically loads all variables from default.json file.
Variables are automatically imported as module attributes, then overridden
by matching ``BSDM_*`` variables from the environment (or a ``.env`` file).
"""

import json
import os
import sys
from datetime import datetime
from pathlib import Path

from dotenv import load_dotenv

# Get project root directory
SCRIPT_DIR = Path(__file__).parent.parent.parent.parent.resolve()
PROJECT_ROOT = SCRIPT_DIR

# Application information (hardcoded, not from default.json)
__version__ = "1.0.0"
__description__ = "BSDM: background suppression diffusion model for hyperspectral anomaly detection"
__license__ = "MIT"

ENV_PREFIX = "BSDM_"

_BOOL_TOKENS = {"DEBUG", "ENABLED", "ENABLE", "DETERMINISTIC"}
_LIST_TOKENS = {"RANGE", "WIDTHS"}
_FLOAT_TOKENS = {
    "LAMBDA", "LR", "BETA1", "BETA2", "EPS", "RIDGE", "FLOOR", "OFFSET", "FRACTION", "CORRELATION",
}
_INT_TOKENS = {
    "MAX", "COUNT", "SIZE", "STEPS", "EPOCHS", "EVERY", "HEIGHT", "WIDTH", "BANDS", "LAYERS",
    "FEATURES", "STEP", "POINTS", "TIMEOUT",
}
_PATH_TOKENS = {"DIRECTORY", "PATH"}


def _convert_value(key, value):
    """Convert string values to appropriate types based on variable name tokens."""
    if not isinstance(value, str):
        return value

    tokens = set(key.upper().split("_"))

    # Boolean conversion
    if tokens & _BOOL_TOKENS:
        return value.lower() in ("true", "1", "yes", "on")

    # List conversion (comma-separated); ranges are real, widths are integers
    if tokens & _LIST_TOKENS:
        items = [item.strip() for item in value.split(",") if item.strip()]
        if "WIDTHS" in tokens:
            return [int(item) for item in items]
        return [float(item) for item in items]

    if tokens & _FLOAT_TOKENS:
        try:
            return float(value)
        except ValueError:
            return value

    if tokens & _INT_TOKENS:
        try:
            return int(value)
        except ValueError:
            return value

    if tokens & _PATH_TOKENS:
        path = Path(value)
        if not path.is_absolute():
            path = PROJECT_ROOT / path
        return path

    return value


# AUTO-IMPORT ALL default.json VARIABLES
config_path = Path(__file__).parent / "default.json"
if config_path.exists():
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            config_vars = json.load(f)

        current_module = sys.modules[__name__]
        for k, v in config_vars.items():
            if v is not None:
                setattr(current_module, k, _convert_value(k, v))
    except (json.JSONDecodeError, IOError) as e:
        print(f"Warning: Could not load default.json: {e}", file=sys.stderr)
        config_vars = {}
else:
    config_vars = {}


def _apply_environment_overrides():
    """Override defaults with BSDM_* variables from the environment and .env."""
    load_dotenv(PROJECT_ROOT / ".env", override=False)
    current_module = sys.modules[__name__]
    for key in config_vars:
        if key.startswith(ENV_PREFIX) and key in os.environ:
            setattr(current_module, key, _convert_value(key, os.environ[key]))


def _initialize_computed_vars():
    """Initialize computed variables after default.json loading."""
    current_module = sys.modules[__name__]

    TIME = datetime.now().strftime(current_module.BSDM_LOG_TIME_FORMAT)
    setattr(current_module, "TIME", TIME)

    log_file = current_module.BSDM_LOG_DIRECTORY / f"bsdm-{TIME}.log"
    setattr(current_module, "LOG_FILE_OUTPUT", log_file)
    setattr(current_module, "LOG_FILE_ERRORS", log_file.with_name(f"bsdm-{TIME}-errors.log"))

    setattr(current_module, "BANNER_HELP", f"BSDM {__version__}\n{__description__}")


_apply_environment_overrides()
_initialize_computed_vars()
