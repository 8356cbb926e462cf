"""Engine configuration: one JSON file, overridable via GRASP_* env vars.

Paths are used as given (relative paths resolve against the working
directory). Referenced files that must pre-exist (prompt directory, mock
script) are validated when the engine starts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import UsageError

CONFIG_ENV_VAR = "GRASP_CONFIG"
ENV_PREFIX = "GRASP_"


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # mock | http
    endpoint: str | None = None
    model: str | None = None
    embedding_model: str | None = None
    api_key_env: str | None = None
    dim: int = 256
    seed: int | None = None
    script_path: str | None = None


@dataclass(frozen=True)
class EngineConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    index_path: str = "grasp-index.bin"
    prompts_dir: str | None = None
    k: int = 6
    max_steps: int = 8
    max_chunk_chars: int = 4000
    max_expansion_years: int | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    session_ttl_seconds: float = 86400.0
    session_log_dir: str | None = None
    cors_origins: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.provider.kind not in ("mock", "http"):
            raise UsageError(f"provider.kind must be 'mock' or 'http', got {self.provider.kind!r}")
        if self.provider.kind == "http":
            for name in ("endpoint", "model", "embedding_model"):
                if not getattr(self.provider, name):
                    raise UsageError(f"http provider requires provider.{name}")
        for label, value in (
            ("k", self.k),
            ("max_steps", self.max_steps),
            ("max_chunk_chars", self.max_chunk_chars),
        ):
            if value < 1:
                raise UsageError(f"{label} must be at least 1")
        for label, path in (
            ("prompts_dir", self.prompts_dir),
            ("provider.script_path", self.provider.script_path),
        ):
            if path is not None and not Path(path).exists():
                raise UsageError(f"{label} does not exist: {path}")


def _provider_from_dict(raw: dict) -> ProviderConfig:
    known = {f for f in ProviderConfig.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown provider config keys: {', '.join(sorted(unknown))}")
    return ProviderConfig(**raw)


def config_from_dict(raw: dict) -> EngineConfig:
    raw = dict(raw)
    provider_raw = raw.pop("provider", {})
    if not isinstance(provider_raw, dict):
        raise UsageError("'provider' must be an object")
    known = {f for f in EngineConfig.__dataclass_fields__ if f != "provider"}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "cors_origins" in raw:
        raw["cors_origins"] = tuple(raw["cors_origins"])
    return EngineConfig(provider=_provider_from_dict(provider_raw), **raw)


# Environment overrides. Values parse like their JSON counterparts;
# GRASP_CORS_ORIGINS is a comma-separated list.
_ENV_TOP = {
    "INDEX_PATH": ("index_path", str),
    "PROMPTS_DIR": ("prompts_dir", str),
    "K": ("k", int),
    "MAX_STEPS": ("max_steps", int),
    "MAX_CHUNK_CHARS": ("max_chunk_chars", int),
    "MAX_EXPANSION_YEARS": ("max_expansion_years", int),
    "HOST": ("host", str),
    "PORT": ("port", int),
    "SESSION_TTL_SECONDS": ("session_ttl_seconds", float),
    "SESSION_LOG_DIR": ("session_log_dir", str),
}
_ENV_PROVIDER = {
    "PROVIDER_KIND": ("kind", str),
    "PROVIDER_ENDPOINT": ("endpoint", str),
    "PROVIDER_MODEL": ("model", str),
    "PROVIDER_EMBEDDING_MODEL": ("embedding_model", str),
    "PROVIDER_API_KEY_ENV": ("api_key_env", str),
    "PROVIDER_DIM": ("dim", int),
    "PROVIDER_SEED": ("seed", int),
    "PROVIDER_SCRIPT_PATH": ("script_path", str),
}


def apply_env_overrides(config: EngineConfig, environ: dict[str, str] | None = None) -> EngineConfig:
    env = os.environ if environ is None else environ
    top_updates: dict = {}
    provider_updates: dict = {}
    for suffix, (attr, cast) in _ENV_TOP.items():
        value = env.get(ENV_PREFIX + suffix)
        if value is not None:
            top_updates[attr] = cast(value)
    for suffix, (attr, cast) in _ENV_PROVIDER.items():
        value = env.get(ENV_PREFIX + suffix)
        if value is not None:
            provider_updates[attr] = cast(value)
    origins = env.get(ENV_PREFIX + "CORS_ORIGINS")
    if origins is not None:
        top_updates["cors_origins"] = tuple(o.strip() for o in origins.split(",") if o.strip())
    if provider_updates:
        top_updates["provider"] = replace(config.provider, **provider_updates)
    return replace(config, **top_updates) if top_updates else config


def load_config(path: str | Path | None, environ: dict[str, str] | None = None) -> EngineConfig:
    """Load a config file (JSON), apply env overrides, and validate.

    ``path=None`` starts from defaults, so a mock-provider engine runs with
    no config file at all.
    """
    if path is None:
        config = EngineConfig()
    else:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
        config = config_from_dict(raw)
    config = apply_env_overrides(config, environ)
    config.validate()
    return config
