"""
Run configuration.

Effective settings are merged from four layers, lowest first:

    defaults  <  environment  <  config file (YAML)  <  command-line flags

The API key is never part of the config; providers read it from LLM_API_KEY.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from src.adapters.chunker import ChunkConfig
from src.query.fine_grained_summarizer import SummarizerConfig
from src.search.entity_expansion import RetrievalConfig

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "fg_rag_config.yaml"

ENV_OVERRIDES = {
    "LLM_PROVIDER": ("backend", "provider"),
    "EMBEDDINGS_PROVIDER": ("backend", "embeddings_provider"),
    "LLM_ENDPOINT": ("backend", "endpoint"),
    "LLM_MODEL": ("backend", "model"),
    "EMBEDDING_ENDPOINT": ("backend", "embedding_endpoint"),
    "EMBEDDING_MODEL": ("backend", "embedding_model"),
}

SECRET_KEYS = {"api_key", "llm_api_key", "password", "token"}


def load_env_file() -> bool:
    """Load PROJECT_ROOT/.env when python-dotenv is installed. Returns True if a file was loaded."""
    try:
        from dotenv import load_dotenv
    except ImportError:
        return False
    env_path = PROJECT_ROOT / ".env"
    if env_path.exists():
        return bool(load_dotenv(env_path))
    return False


@dataclass(frozen=True)
class BackendConfig:
    """Completion and embedding backend selection."""

    provider: str = "mock"
    embeddings_provider: str = "mock"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    embedding_endpoint: Optional[str] = None
    embedding_model: Optional[str] = None
    embedding_dim: Optional[int] = None
    max_retries: int = 3
    backoff_seconds: float = 1.0
    token_budget: Optional[int] = None
    max_in_flight: int = 4
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    @property
    def is_mock(self) -> bool:
        return self.provider == "mock" and self.embeddings_provider == "mock"


@dataclass(frozen=True)
class ExtractionConfig:
    gleaning_passes: int = 1

    def __post_init__(self):
        if self.gleaning_passes < 0:
            raise ValueError(f"gleaning_passes must be >= 0, got {self.gleaning_passes}")


@dataclass(frozen=True)
class EvaluationConfig:
    """Query generation grid and judging settings."""

    num_users: int = 5
    num_tasks: int = 5
    num_queries: int = 5
    digest_chars: int = 20000
    system_name: str = "fg-rag"


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"


@dataclass(frozen=True)
class PathConfig:
    dir: Optional[str] = None


_SECTIONS = {
    "corpus": PathConfig,
    "index": PathConfig,
    "chunking": ChunkConfig,
    "extraction": ExtractionConfig,
    "retrieval": RetrievalConfig,
    "summarizer": SummarizerConfig,
    "backend": BackendConfig,
    "evaluation": EvaluationConfig,
    "logging": LoggingConfig,
}


@dataclass(frozen=True)
class RunConfig:
    """Effective configuration of one CLI run."""

    corpus: PathConfig = field(default_factory=PathConfig)
    index: PathConfig = field(default_factory=PathConfig)
    chunking: ChunkConfig = field(default_factory=ChunkConfig)
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    summarizer: SummarizerConfig = field(default_factory=SummarizerConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Build a RunConfig from a nested mapping.

        Raises:
            ValueError: Unknown section or key, a secret in the mapping, or an invalid value
        """
        unknown = set(data) - set(_SECTIONS) - {"seed"}
        if unknown:
            raise ValueError(f"Unknown config keys: {', '.join(sorted(unknown))}. Valid options: {', '.join([*_SECTIONS, 'seed'])}")

        kwargs: Dict[str, Any] = {}
        for section, section_cls in _SECTIONS.items():
            values = data.get(section) or {}
            if not isinstance(values, Mapping):
                raise ValueError(f"Config section '{section}' must be a mapping")
            secrets = SECRET_KEYS & {str(k).lower() for k in values}
            if secrets:
                raise ValueError(f"Config section '{section}' must not contain credentials ({', '.join(sorted(secrets))}); set LLM_API_KEY instead")
            allowed = {f.name for f in fields(section_cls)}
            bad = set(values) - allowed
            if bad:
                raise ValueError(f"Unknown keys in config section '{section}': {', '.join(sorted(bad))}. Valid options: {', '.join(sorted(allowed))}")
            kwargs[section] = section_cls(**values)
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        return cls(**kwargs)


def deep_merge(base: Dict[str, Any], overlay: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursively merge overlay into a copy of base; None values in overlay are ignored."""
    merged = dict(base)
    for key, value in overlay.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def env_layer(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    environ = os.environ if environ is None else environ
    layer: Dict[str, Any] = {}
    for var, (section, key) in ENV_OVERRIDES.items():
        value = environ.get(var)
        if value:
            layer.setdefault(section, {})[key] = value
    return layer


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a YAML config file.

    Raises:
        FileNotFoundError: The file does not exist
        ValueError: The file is not a YAML mapping
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Configuration file {path} must contain a YAML mapping")
    return data


def load_run_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Merge defaults, environment, config file and flag overrides.

    Args:
        config_path: YAML file; None means no file layer
        overrides: Nested mapping from command-line flags (None values skipped)
        environ: Environment to read (os.environ by default)

    Returns:
        The effective RunConfig
    """
    merged = RunConfig().to_dict()
    merged = deep_merge(merged, env_layer(environ))
    if config_path is not None:
        merged = deep_merge(merged, read_config_file(config_path))
        logger.debug(f"Loaded config file {config_path}")
    if overrides:
        merged = deep_merge(merged, overrides)
    return RunConfig.from_dict(merged)


def with_mock_seed(cfg: RunConfig, seed: int) -> RunConfig:
    """Select the mock LLM and mock embedder with the given seed."""
    return replace(
        cfg,
        seed=seed,
        backend=replace(cfg.backend, provider="mock", embeddings_provider="mock"),
    )
