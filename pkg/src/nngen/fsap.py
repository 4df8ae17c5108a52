"""Few-shot prompt construction: pick example models, render the prompt.

A prompt is built from one reference model (the architecture to improve)
plus up to six supporting models sampled from the best trained records for
the target dataset.  The reference is always excluded from the supporting
sample.  Rendering is template-driven and byte-stable for identical inputs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import EmptyPoolError
from .registry import ModelRecord

__all__ = [
    "SUPPORTING_HEADER",
    "DatasetSpec",
    "PromptBundle",
    "load_catalog",
    "select_models",
    "build_prompt",
    "make_bundle",
]

# Header prefix of each supporting-model block in the rendered prompt.
SUPPORTING_HEADER = "SUPPORTING MODEL "

MAX_SUPPORTING = 6


@dataclass(frozen=True)
class DatasetSpec:
    """Prompt-facing description of a classification dataset."""

    name: str
    num_classes: int
    input_shape: tuple[int, int, int]  # (channels, height, width)
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if len(self.input_shape) != 3 or any(d < 1 for d in self.input_shape):
            raise ValueError(f"input_shape must be 3 positive dims, got {self.input_shape}")


@dataclass(frozen=True)
class PromptBundle:
    """A fully assembled generation prompt and the models behind it."""

    dataset: str
    n_requested: int
    reference: ModelRecord
    supporting: tuple[ModelRecord, ...]
    prompt_text: str


@lru_cache(maxsize=None)
def _asset_text(name: str) -> str:
    return resources.files("nngen").joinpath("assets", name).read_text(encoding="utf-8")


def load_catalog(path: str | Path | None = None) -> dict[str, DatasetSpec]:
    """Dataset catalog keyed by name; bundled defaults unless *path* given."""
    if path is None:
        raw = _asset_text("datasets.json")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    entries = json.loads(raw)
    catalog = {}
    for entry in entries:
        spec = DatasetSpec(**entry)
        catalog[spec.name] = spec
    return catalog


def select_models(
    store,
    dataset: str,
    n: int,
    seed: int | random.Random,
    pool_size: int = 50,
) -> tuple[ModelRecord, list[ModelRecord]]:
    """Pick a reference plus min(n, pool-1) supporting models.

    The reference is drawn uniformly from the best-accuracy pool; supporting
    models are a uniform sample without replacement from the rest of the
    pool.  Deterministic for a given seed and store state.
    """
    if not 1 <= n <= MAX_SUPPORTING:
        raise ValueError(f"n must be in 1..{MAX_SUPPORTING}, got {n}")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    pool = store.query_best(dataset, limit=pool_size)
    if not pool:
        raise EmptyPoolError(
            f"no trained models stored for dataset {dataset!r}; seed the registry first"
        )
    reference = pool[rng.randrange(len(pool))]
    candidates = [r for r in pool if r.nn_id != reference.nn_id]
    supporting = rng.sample(candidates, min(n, len(candidates)))
    return reference, supporting


def _format_accuracy(value: float) -> str:
    return f"{value * 100:.1f}%"


def _image_line(spec: DatasetSpec, strict_template: bool) -> str:
    if strict_template:
        return "32x32 RGB images"
    channels, height, width = spec.input_shape
    if channels == 3:
        color = "RGB"
    elif channels == 1:
        color = "grayscale"
    else:
        color = f"{channels}-channel"
    return f"{height}x{width} {color} images"


def build_prompt(
    spec: DatasetSpec,
    reference: ModelRecord,
    supporting: Sequence[ModelRecord],
    strict_template: bool = False,
) -> str:
    """Render the generation prompt for one reference and its supports.

    All models must carry code and a trained accuracy.  ``strict_template``
    keeps the literal "32x32 RGB images" wording regardless of the dataset;
    by default the image line reflects the dataset's actual shape.
    """
    if len(supporting) > MAX_SUPPORTING:
        raise ValueError(f"at most {MAX_SUPPORTING} supporting models, got {len(supporting)}")
    for record in (reference, *supporting):
        if not record.code:
            raise ValueError(f"model {record.nn_id} has no code")
        if record.accuracy is None:
            raise ValueError(f"model {record.nn_id} has no trained accuracy")

    block_template = _asset_text("supporting_block.txt")
    blocks = "".join(
        block_template.format(
            index=i,
            accuracy=_format_accuracy(record.accuracy),
            code=record.code,
        )
        for i, record in enumerate(supporting, start=1)
    )
    return _asset_text("prompt_template.txt").format(
        reference_accuracy=_format_accuracy(reference.accuracy),
        reference_code=reference.code,
        supporting_blocks=blocks,
        image_line=_image_line(spec, strict_template),
        num_classes=spec.num_classes,
    )


def make_bundle(
    store,
    spec: DatasetSpec,
    n: int,
    seed: int | random.Random,
    pool_size: int = 50,
    strict_template: bool = False,
) -> PromptBundle:
    """Select models and render the prompt in one step."""
    reference, supporting = select_models(store, spec.name, n, seed, pool_size)
    prompt = build_prompt(spec, reference, supporting, strict_template=strict_template)
    return PromptBundle(
        dataset=spec.name,
        n_requested=n,
        reference=reference,
        supporting=tuple(supporting),
        prompt_text=prompt,
    )
