"""
Configuration loading for dtrecon

Reads the YAML files under config/ and resolves ${NAME:default}
placeholders against the environment (a .env file at the repository root is
loaded first).

Integration Contract:
    load_config("params")      -> dict from config/params.yaml
    load_config("experiments") -> dict from config/experiments.yaml
    limit("exact_max_n")       -> int scale limit
"""

import os
import re
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv


# ============================================================
# CONFIGURATION
# ============================================================

ROOT = Path(__file__).parent.parent.parent
CONFIG_DIR = ROOT / "config"

_PLACEHOLDER = re.compile(r"\$\{(?P<name>[A-Za-z_][A-Za-z0-9_]*):(?P<default>[^}]*)\}")


# ============================================================
# INTERPOLATION
# ============================================================

def _substitute(text: str) -> str:
    return _PLACEHOLDER.sub(
        lambda m: os.environ.get(m.group("name"), m.group("default")), text
    )


def interpolate(value: Any) -> Any:
    """
    Resolve ${NAME:default} placeholders recursively.

    A string that is exactly one placeholder is re-parsed as YAML after
    substitution so "${DTRECON_SEED:0}" becomes the int 0.
    """
    if isinstance(value, dict):
        return {key: interpolate(item) for key, item in value.items()}
    if isinstance(value, list):
        return [interpolate(item) for item in value]
    if isinstance(value, str) and _PLACEHOLDER.search(value):
        resolved = _substitute(value)
        if _PLACEHOLDER.fullmatch(value):
            if resolved == "":
                return None
            return yaml.safe_load(resolved)
        return resolved
    return value


# ============================================================
# LOADING
# ============================================================

@lru_cache(maxsize=None)
def _load_raw(name: str) -> dict:
    with open(CONFIG_DIR / f"{name}.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_config(name: str) -> dict:
    """Load config/<name>.yaml with environment placeholders resolved."""
    env_file = ROOT / ".env"
    if env_file.exists():
        load_dotenv(env_file, override=False)
    return interpolate(_load_raw(name))


@lru_cache(maxsize=None)
def limit(key: str) -> int:
    """Scale limit from config/params.yaml (section `limits`), read once per process."""
    return int(load_config("params")["limits"][key])


@lru_cache(maxsize=None)
def sampling(key: str) -> Any:
    """Sampling setting from config/params.yaml (section `sampling`), read once per process."""
    return load_config("params")["sampling"][key]
