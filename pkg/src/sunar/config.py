"""Configuration: YAML file with a key hierarchy, overridable by flags.

Relative paths inside a config file are resolved against the file's own
directory so suites stay relocatable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .nar import NarConfig


@dataclass(frozen=True)
class PathsConfig:
    corpus: str | None = None
    index: str | None = None
    embeddings: str | None = None
    graph: str | None = None
    fixtures_dir: str | None = None
    output_dir: str = "out"


@dataclass(frozen=True)
class PipelineSection:
    l: int = 10
    max_hops: int = 6
    asu_enabled: bool = True
    mer_enabled: bool = True
    m: int = 5
    temperature: float = 0.7
    exemplars: str = "wqa"


@dataclass(frozen=True)
class ClientsConfig:
    mode: str = "scripted"
    llm_base_url: str | None = None
    llm_model: str = "gpt-3.5-turbo"
    nli_base_url: str | None = None
    nli_model: str = ""
    nli_backend: str = "chat"
    scorer_base_url: str | None = None
    embedder: str = "hash"
    rate_limit_rps: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("scripted", "http"):
            raise ConfigError(f"clients.mode must be 'scripted' or 'http', got {self.mode!r}")
        if self.embedder not in ("hash", "scripted", "http"):
            raise ConfigError(f"clients.embedder must be hash, scripted, or http, got {self.embedder!r}")


@dataclass(frozen=True)
class SunarConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    nar: NarConfig = field(default_factory=NarConfig)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    clients: ClientsConfig = field(default_factory=ClientsConfig)
    first_stage_k: int = 100
    graph_k: int = 100
    embed_dim: int = 32
    workers: int = 1
    base_dir: str = "."


_SECTIONS = {
    "paths": PathsConfig,
    "nar": NarConfig,
    "pipeline": PipelineSection,
    "clients": ClientsConfig,
}


def _build_section(cls, data: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section}' section: {exc}") from exc


def load_config(path: str | Path) -> SunarConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, base_dir=str(path.parent))


def config_from_dict(data: dict, base_dir: str = ".") -> SunarConfig:
    kwargs: dict = {"base_dir": base_dir}
    top_known = {f.name for f in fields(SunarConfig)}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"section '{key}' must be a mapping")
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        elif key in top_known:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown top-level config key {key!r}")
    try:
        return SunarConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def resolve_path(config: SunarConfig, value: str | None) -> Path | None:
    if value is None:
        return None
    candidate = Path(value)
    if candidate.is_absolute():
        return candidate
    return Path(config.base_dir) / candidate


def override(config: SunarConfig, **top_level) -> SunarConfig:
    """Replace top-level fields; None values are ignored (flag not given)."""
    updates = {key: value for key, value in top_level.items() if value is not None}
    return replace(config, **updates) if updates else config


def override_section(config: SunarConfig, section: str, **values) -> SunarConfig:
    updates = {key: value for key, value in values.items() if value is not None}
    if not updates:
        return config
    current = getattr(config, section)
    return replace(config, **{section: replace(current, **updates)})
