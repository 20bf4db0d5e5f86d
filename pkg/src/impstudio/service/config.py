"""Service configuration: JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..optimizer import GAConfig


@dataclass
class ServiceConfig:
    data_dir: str = "./studio-data"
    host: str = "127.0.0.1"
    port: int = 8008
    workers: int = 2
    predictor: str = "reference"  # "reference" | "external"
    external_endpoint: str | None = None
    map_w: int = 256
    map_h: int = 256
    templates_dir: str | None = None  # None -> shipped templates
    ga_defaults: GAConfig = field(default_factory=GAConfig)

    def __post_init__(self) -> None:
        if self.predictor not in ("reference", "external"):
            raise ValueError(f"unknown predictor kind {self.predictor!r}")
        if self.predictor == "external" and not self.external_endpoint:
            raise ValueError("external predictor requires external_endpoint")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


_ENV_KEYS = {
    "STUDIO_DATA_DIR": "data_dir",
    "STUDIO_HOST": "host",
    "STUDIO_PORT": "port",
    "STUDIO_PREDICTOR": "predictor",
    "STUDIO_ENDPOINT": "external_endpoint",
}


def load_config(path: str | Path | None = None, env: dict[str, str] | None = None) -> ServiceConfig:
    """Read the config file (if given) and apply environment overrides."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
    kwargs = dict(raw)
    if "ga_defaults" in kwargs:
        kwargs["ga_defaults"] = GAConfig.from_dict(kwargs["ga_defaults"])
    for env_key, attr in _ENV_KEYS.items():
        if env_key in env:
            kwargs[attr] = int(env[env_key]) if attr == "port" else env[env_key]
    return ServiceConfig(**kwargs)
