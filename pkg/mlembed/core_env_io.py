from __future__ import annotations

import os
from typing import Dict, Optional

from common.config import (
    DEFAULT_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_METRIC,
    DEFAULT_NEGATIVES,
    DEFAULT_NUM_WALKS,
    DEFAULT_P,
    DEFAULT_Q,
    DEFAULT_R,
    DEFAULT_TEST_FRAC,
    DEFAULT_THREADS,
    DEFAULT_WALK_LENGTH,
    DEFAULT_WINDOW,
    ENV_FILE_NAME,
    ENV_PREFIX,
)
from common.paths import PROJECT_ROOT
from common.utils import parse_bool, parse_float, parse_int

ENV_PATH = os.environ.get("MLEMBED_ENV", str(PROJECT_ROOT / ENV_FILE_NAME))


def load_env(path: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    if not os.path.exists(path):
        return values
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _env_value(env: Dict[str, str], key: str) -> Optional[str]:
    full_key = ENV_PREFIX + key
    return os.environ.get(full_key) or env.get(full_key)


def _float_setting(env: Dict[str, str], key: str, default: float) -> float:
    value = parse_float(_env_value(env, key))
    return default if value is None else value


def _int_setting(env: Dict[str, str], key: str, default: int, minimum: int) -> int:
    value = parse_int(_env_value(env, key))
    if value is None:
        value = default
    return max(minimum, value)


def build_defaults(env: Dict[str, str]) -> Dict[str, object]:
    """CLI defaults after applying .env / environment overrides."""
    metric = (_env_value(env, "METRIC") or DEFAULT_METRIC).strip().lower()
    return {
        "p": _float_setting(env, "P", DEFAULT_P),
        "q": _float_setting(env, "Q", DEFAULT_Q),
        "r": _float_setting(env, "R", DEFAULT_R),
        "num_walks": _int_setting(env, "NUM_WALKS", DEFAULT_NUM_WALKS, 1),
        "walk_length": _int_setting(env, "WALK_LENGTH", DEFAULT_WALK_LENGTH, 1),
        "dim": _int_setting(env, "DIM", DEFAULT_DIM, 1),
        "window": _int_setting(env, "WINDOW", DEFAULT_WINDOW, 1),
        "negatives": _int_setting(env, "NEGATIVES", DEFAULT_NEGATIVES, 0),
        "epochs": _int_setting(env, "EPOCHS", DEFAULT_EPOCHS, 1),
        "test_frac": _float_setting(env, "TEST_FRAC", DEFAULT_TEST_FRAC),
        "metric": metric,
        "threads": _int_setting(env, "THREADS", DEFAULT_THREADS, 1),
        "verbose": parse_bool(_env_value(env, "VERBOSE"), default=True),
    }
