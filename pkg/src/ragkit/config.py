"""Configuration loading with flags > environment > config file precedence.

The config file is a single TOML document:

    [providers]
    embed_url = "mock:0"
    rerank_url = "mock:0"
    gen_url = "mock:0"

    [paths]
    chunks = "chunks.jsonl"
    index = "index.bin"
    clean = "clean"
    dataset = "qa.jsonl"

    [retrieval]
    fetch_k = 10
    final_k = 5
    mmr_lambda = 0.5
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .providers import ENV_VARS

DEFAULT_CONFIG_FILE = "ragkit.toml"

_PROVIDER_KEYS = {
    "embedding": "embed_url",
    "rerank": "rerank_url",
    "generation": "gen_url",
}


def load_config(path: str | Path | None = None) -> dict:
    """Parse the TOML config file; a missing default file is just empty."""
    if path is None:
        candidate = Path(DEFAULT_CONFIG_FILE)
        if not candidate.exists():
            return {}
        path = candidate
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def resolve_endpoint(role: str, flag_value: str | None, config: dict) -> str:
    """Provider endpoint for a role: flag > RAG_*_URL env > config > mock."""
    if flag_value:
        return flag_value
    env_value = os.environ.get(ENV_VARS[role])
    if env_value:
        return env_value
    config_value = config.get("providers", {}).get(_PROVIDER_KEYS[role])
    if config_value:
        return str(config_value)
    return "mock:0"


def resolve_path(name: str, flag_value: str | None, config: dict, default: str) -> str:
    if flag_value:
        return flag_value
    config_value = config.get("paths", {}).get(name)
    return str(config_value) if config_value else default


def resolve_retrieval(name: str, flag_value, config: dict, default):
    if flag_value is not None:
        return flag_value
    config_value = config.get("retrieval", {}).get(name)
    return config_value if config_value is not None else default
