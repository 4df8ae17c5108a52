"""Campaign orchestration: prompt, generate, extract, validate, dedup, train.

Each requested slot walks the full gate sequence.  Structural validation
runs before the duplicate check, so formatting variants of invalid code
count as validation failures, not duplicates.  Rejected duplicates are
counted (they are the GPU-hours savings) but never stored, and no
duplicate ever reaches the trainer because the registry's atomic
check-and-insert sits in front of training dispatch.
"""

from __future__ import annotations

import json
import logging
import math
import random
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import requests

from . import codecheck, dedup, fsap
from .config import PipelineConfig
from .dedup import Decision
from .errors import (
    ExtractionError,
    GenerationUnavailableError,
    IngestionError,
    TrainerUnavailableError,
)
from .genclient import GenClient, MockTransport, extract_code
from .registry import InsertResult, ModelRecord, Registry, variant_for

__all__ = [
    "TrainOutcome",
    "MockTrainer",
    "HttpTrainer",
    "RunLog",
    "StageSummary",
    "PipelineReport",
    "run_campaign",
    "seed_registry",
    "make_client",
    "make_trainer",
]

log = logging.getLogger(__name__)

SEED_FIXTURE_ASSET = "seed_models.jsonl"


# ---------------------------------------------------------------------------
# Trainer clients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainOutcome:
    status: str  # ok | load-error | runtime-error | timeout
    accuracy: float | None = None
    error: str | None = None
    wall_time: float = 0.0


class MockTrainer:
    """Offline trainer: a stable pseudo-accuracy derived from the nn_id."""

    def train(self, nn_id: str, code: str, dataset: str) -> TrainOutcome:
        fraction = int(nn_id[:8], 16) / 0xFFFFFFFF
        return TrainOutcome(status="ok", accuracy=0.1 + 0.8 * fraction)


class HttpTrainer:
    """Talks to the training worker over its request/response interface."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 900.0,
        epochs: int = 1,
        batch_size: int = 64,
        subset_size: int = 5000,
        device: str = "cpu",
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.epochs = epochs
        self.batch_size = batch_size
        self.subset_size = subset_size
        self.device = device
        self._session = requests.Session()

    def train(self, nn_id: str, code: str, dataset: str) -> TrainOutcome:
        payload = {
            "nn_id": nn_id,
            "code": code,
            "dataset": dataset,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "device": self.device,
            "subset_size": self.subset_size,
        }
        try:
            resp = self._session.post(
                f"{self.base_url}/train", json=payload, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TrainerUnavailableError(f"worker unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TrainerUnavailableError(
                f"worker returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        body = resp.json()
        return TrainOutcome(
            status=body["status"],
            accuracy=body.get("accuracy"),
            error=body.get("error"),
            wall_time=body.get("wall_time", 0.0),
        )


# ---------------------------------------------------------------------------
# Run log: append-only, line-delimited slot events
# ---------------------------------------------------------------------------


class RunLog:
    def __init__(self, path: str | Path):
        self._fh = open(path, "a", encoding="utf-8")
        self._lock = threading.Lock()

    def event(
        self,
        slot: int,
        stage: str,
        outcome: str,
        latency_s: float | None = None,
        nn_id: str | None = None,
        detail: str | None = None,
    ) -> None:
        entry: dict = {"ts": time.time(), "slot": slot, "stage": stage, "outcome": outcome}
        if latency_s is not None:
            entry["latency_s"] = round(latency_s, 6)
        if nn_id is not None:
            entry["nn_id"] = nn_id
        if detail is not None:
            entry["detail"] = detail
        with self._lock:
            self._fh.write(json.dumps(entry) + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self) -> "RunLog":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StageSummary:
    count: int
    total_s: float
    mean_s: float
    median_s: float
    p99_s: float
    max_s: float

    @classmethod
    def from_times(cls, times: list[float]) -> "StageSummary":
        ordered = sorted(times)
        p99_idx = max(0, math.ceil(0.99 * len(ordered)) - 1)
        return cls(
            count=len(ordered),
            total_s=sum(ordered),
            mean_s=sum(ordered) / len(ordered),
            median_s=statistics.median(ordered),
            p99_s=ordered[p99_idx],
            max_s=ordered[-1],
        )


@dataclass
class PipelineReport:
    """Slot accounting for one campaign; the count identities hold exactly.

    requested == generated_ok + extraction_failures + generation_failures
    generated_ok == validation_failures + duplicates_rejected
                    + trained + training_failures + stored_untrained
    gpu_hours_saved == duplicates_rejected * hours_per_training
    """

    dataset: str
    variant: str
    requested: int
    generated_ok: int = 0
    generation_failures: int = 0
    extraction_failures: int = 0
    validation_failures: int = 0
    duplicates_rejected: int = 0
    trained: int = 0
    training_failures: int = 0
    stored_untrained: int = 0
    hours_per_training: float = 2.5
    gpu_hours_saved: float = 0.0
    stage_latencies: dict[str, StageSummary] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def identities_ok(self) -> bool:
        return (
            self.requested
            == self.generated_ok + self.extraction_failures + self.generation_failures
        ) and (
            self.generated_ok
            == self.validation_failures
            + self.duplicates_rejected
            + self.trained
            + self.training_failures
            + self.stored_untrained
        ) and self.gpu_hours_saved == self.duplicates_rejected * self.hours_per_training

    def to_dict(self) -> dict:
        out = asdict(self)
        out["stage_latencies"] = {
            stage: asdict(summary) for stage, summary in self.stage_latencies.items()
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Campaign
# ---------------------------------------------------------------------------


class _StageTimer:
    def __init__(self) -> None:
        self._times: dict[str, list[float]] = {}
        self._lock = threading.Lock()

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - t0
            with self._lock:
                self._times.setdefault(name, []).append(elapsed)

    def last(self, name: str) -> float:
        return self._times[name][-1]

    def summaries(self) -> dict[str, StageSummary]:
        return {name: StageSummary.from_times(ts) for name, ts in self._times.items()}


def make_client(config: PipelineConfig) -> GenClient:
    if config.llm_mode == "mock":
        transport = (
            MockTransport.from_fixture(config.mock_fixture)
            if config.mock_fixture
            else MockTransport()
        )
        return GenClient(config.generation, transport=transport)
    return GenClient(config.generation, replay_log=config.replay_log)


def make_trainer(config: PipelineConfig):
    if config.trainer_mode == "mock":
        return MockTrainer()
    return HttpTrainer(
        config.trainer_url,
        timeout=config.trainer_timeout,
        epochs=config.epochs,
        batch_size=config.trainer_batch_size,
        subset_size=config.trainer_subset_size,
        device=config.trainer_device,
    )


def run_campaign(
    dataset: str,
    n: int,
    count: int,
    seed: int,
    config: PipelineConfig | None = None,
    *,
    registry: Registry | None = None,
    client: GenClient | None = None,
    trainer=None,
    run_log: RunLog | None = None,
    catalog: dict[str, fsap.DatasetSpec] | None = None,
) -> PipelineReport:
    """Execute *count* generation slots for (dataset, n) and account for them.

    A slot that fails any gate consumes its budget and the campaign moves
    on (rejected duplicates feed back only as the next slot's fresh prompt).
    Trainer unavailability downgrades a slot to stored-untrained with a
    warning instead of failing the campaign.
    """
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    config = config or PipelineConfig()
    registry = registry if registry is not None else Registry(config.store_path)
    client = client if client is not None else make_client(config)
    trainer = trainer if trainer is not None else make_trainer(config)
    catalog = catalog or fsap.load_catalog(config.datasets_path)
    if dataset not in catalog:
        raise ValueError(f"dataset {dataset!r} not in catalog ({', '.join(sorted(catalog))})")
    spec = catalog[dataset]
    variant = variant_for(n)

    report = PipelineReport(
        dataset=dataset,
        variant=variant,
        requested=count,
        hours_per_training=config.hours_per_training,
    )
    timer = _StageTimer()
    rng = random.Random(seed)
    slot_seeds = [rng.randrange(2**63) for _ in range(count)]

    def run_slot(slot: int) -> str:
        slot_rng = random.Random(slot_seeds[slot])
        for attempt in range(config.slot_attempts):
            outcome = _run_slot_once(
                slot, slot_rng, spec, n, config, registry, client, trainer, timer, run_log
            )
            if outcome != "duplicate" or attempt == config.slot_attempts - 1:
                return outcome
        return "duplicate"

    t_start = time.perf_counter()
    outcomes: list[str] = []
    if config.concurrency > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            outcomes = list(pool.map(run_slot, range(count)))
    else:
        for slot in range(count):
            outcomes.append(run_slot(slot))
    report.wall_time_s = time.perf_counter() - t_start

    for outcome in outcomes:
        if outcome == "generation-failed":
            report.generation_failures += 1
            continue
        if outcome == "extraction-failed":
            report.extraction_failures += 1
            continue
        report.generated_ok += 1
        if outcome == "validation-failed":
            report.validation_failures += 1
        elif outcome == "duplicate":
            report.duplicates_rejected += 1
        elif outcome == "trained":
            report.trained += 1
        elif outcome == "training-failed":
            report.training_failures += 1
        elif outcome == "stored-untrained":
            report.stored_untrained += 1
        else:  # pragma: no cover - defensive
            raise AssertionError(f"unknown slot outcome {outcome!r}")

    report.gpu_hours_saved = report.duplicates_rejected * config.hours_per_training
    report.stage_latencies = timer.summaries()
    assert report.identities_ok(), "pipeline count identities violated"
    return report


def _run_slot_once(
    slot: int,
    slot_rng: random.Random,
    spec: fsap.DatasetSpec,
    n: int,
    config: PipelineConfig,
    registry: Registry,
    client: GenClient,
    trainer,
    timer: _StageTimer,
    run_log: RunLog | None,
) -> str:
    def emit(stage: str, outcome: str, latency: float | None = None, **kw) -> None:
        if run_log is not None:
            run_log.event(slot, stage, outcome, latency_s=latency, **kw)

    # EmptyPoolError intentionally propagates: an unseeded registry must
    # surface immediately rather than burn the whole budget.
    with timer.stage("prompt"):
        bundle = fsap.make_bundle(
            registry,
            spec,
            n,
            slot_rng,
            pool_size=config.pool_size,
            strict_template=config.strict_template,
        )
    emit("prompt", "ok", timer.last("prompt"))

    try:
        with timer.stage("generate"):
            completion = client.generate(bundle.prompt_text)
    except GenerationUnavailableError as exc:
        emit("generate", "failed", timer.last("generate"), detail=str(exc))
        return "generation-failed"
    emit("generate", "ok", timer.last("generate"))

    try:
        with timer.stage("extract"):
            code = extract_code(completion)
    except ExtractionError as exc:
        emit("extract", "failed", timer.last("extract"), detail=str(exc))
        return "extraction-failed"
    emit("extract", "ok", timer.last("extract"))

    with timer.stage("validate"):
        check = codecheck.validate(code)
    if not check.passed:
        rules = ",".join(sorted({v.rule for v in check.violations}))
        emit("validate", "failed", timer.last("validate"), detail=rules)
        return "validation-failed"
    emit("validate", "ok", timer.last("validate"))

    with timer.stage("dedup"):
        fp = dedup.fingerprint(code)
        decision = Decision.REJECT if registry.contains(fp.digest) else Decision.ACCEPT
    if decision is Decision.REJECT:
        emit("dedup", "rejected-duplicate", timer.last("dedup"), nn_id=fp.digest)
        return "duplicate"
    emit("dedup", "accepted", timer.last("dedup"), nn_id=fp.digest)

    record = ModelRecord(
        nn_id=fp.digest,
        variant=variant_for(n),
        dataset=spec.name,
        code=code,
        reference_id=bundle.reference.nn_id,
        supporting_ids=[s.nn_id for s in bundle.supporting],
    )
    with timer.stage("insert"):
        result = registry.insert(record)
    if result is InsertResult.REJECTED_DUPLICATE:
        # lost a check-and-insert race against a concurrent slot
        emit("insert", "rejected-duplicate", timer.last("insert"), nn_id=record.nn_id)
        return "duplicate"
    emit("insert", "inserted", timer.last("insert"), nn_id=record.nn_id)

    try:
        with timer.stage("train"):
            outcome = trainer.train(record.nn_id, code, spec.name)
    except TrainerUnavailableError as exc:
        log.warning("trainer unavailable, storing %s untrained: %s", record.nn_id, exc)
        emit("train", "stored-untrained", timer.last("train"), nn_id=record.nn_id)
        return "stored-untrained"
    if outcome.status == "ok":
        registry.update_accuracy(record.nn_id, outcome.accuracy)
        emit("train", "ok", timer.last("train"), nn_id=record.nn_id)
        return "trained"
    emit("train", outcome.status, timer.last("train"), nn_id=record.nn_id,
         detail=(outcome.error or "")[:200])
    return "training-failed"


# ---------------------------------------------------------------------------
# Registry seeding
# ---------------------------------------------------------------------------


def seed_registry(registry: Registry, fixture_path: str | Path | None = None) -> int:
    """Insert seed architectures from a line-delimited fixture.

    Each line is a JSON object with variant, dataset, code, accuracy and an
    optional created_at; the nn_id is derived from the code, so rerunning
    on a populated store inserts nothing.  Returns the number inserted.
    """
    if fixture_path is None:
        text = resources.files("nngen").joinpath("assets", SEED_FIXTURE_ASSET).read_text(
            encoding="utf-8"
        )
        source = SEED_FIXTURE_ASSET
    else:
        text = Path(fixture_path).read_text(encoding="utf-8")
        source = str(fixture_path)

    inserted = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            record = ModelRecord.from_code(
                obj["code"],
                obj["variant"],
                obj["dataset"],
                accuracy=obj["accuracy"],
                created_at=obj.get("created_at"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise IngestionError(f"{source}: line {lineno}: {exc}") from exc
        if registry.insert(record) is InsertResult.INSERTED:
            inserted += 1
    return inserted
