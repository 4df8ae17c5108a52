"""Run configuration: documented schema, JSON file loading, defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .genclient import GenerationParams

__all__ = ["PipelineConfig", "load_config", "CONFIG_ENV"]

CONFIG_ENV = "NNGEN_CONFIG"


@dataclass
class PipelineConfig:
    """Everything a campaign needs beyond its CLI arguments.

    Serialized as a flat JSON object; generation-endpoint settings live
    under the nested ``generation`` key (see GenerationParams).
    """

    store_path: str = "models.db"
    output_dir: str = "runs"
    pool_size: int = 50
    hours_per_training: float = 2.5
    concurrency: int = 1
    epochs: int = 1
    strict_template: bool = False
    # duplicate-rejected slots consume their budget; raise to re-prompt
    slot_attempts: int = 1
    trainer_mode: str = "mock"  # mock | worker
    trainer_url: str = "http://127.0.0.1:8642"
    trainer_timeout: float = 900.0
    trainer_batch_size: int = 64
    trainer_subset_size: int = 5000
    trainer_device: str = "cpu"
    llm_mode: str = "http"  # http | mock
    mock_fixture: str | None = None
    replay_log: str | None = None
    datasets_path: str | None = None
    generation: GenerationParams = field(default_factory=GenerationParams)

    def __post_init__(self) -> None:
        if self.trainer_mode not in ("mock", "worker"):
            raise ValueError(f"trainer_mode must be 'mock' or 'worker', got {self.trainer_mode!r}")
        if self.llm_mode not in ("http", "mock"):
            raise ValueError(f"llm_mode must be 'http' or 'mock', got {self.llm_mode!r}")
        if self.pool_size < 2:
            raise ValueError(f"pool_size must be >= 2, got {self.pool_size}")
        if self.concurrency < 1:
            raise ValueError(f"concurrency must be >= 1, got {self.concurrency}")
        if self.slot_attempts < 1:
            raise ValueError(f"slot_attempts must be >= 1, got {self.slot_attempts}")
        if self.hours_per_training < 0:
            raise ValueError("hours_per_training must be >= 0")


def load_config(path: str | Path | None = None) -> PipelineConfig:
    """Load a config file; falls back to $NNGEN_CONFIG, then pure defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        return PipelineConfig()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")

    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {', '.join(sorted(unknown))}")
    if "generation" in raw:
        raw = dict(raw)
        raw["generation"] = GenerationParams(**raw["generation"])
    return PipelineConfig(**raw)
