"""One training job: run the sandbox subprocess and interpret its outcome."""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

__all__ = ["TrainRequest", "TrainResult", "train_once", "reference_net_code"]

_VALID_STATUSES = {"ok", "load-error", "runtime-error", "timeout"}


@dataclass(frozen=True)
class TrainRequest:
    nn_id: str
    code: str
    dataset: str = "mnist"
    epochs: int = 1
    batch_size: int = 64
    device: str = "cpu"
    subset_size: int = 5000
    test_size: int = 1000
    timeout_s: float = 600.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.subset_size < self.batch_size:
            raise ValueError("subset_size must be >= batch_size")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")


@dataclass(frozen=True)
class TrainResult:
    nn_id: str
    status: str
    accuracy: float | None
    wall_time: float
    error: str | None = None

    def __post_init__(self) -> None:
        if self.status not in _VALID_STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.accuracy is not None) != (self.status == "ok"):
            raise ValueError("accuracy must be present exactly when status is ok")
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy out of range: {self.accuracy}")


def reference_net_code() -> str:
    """Source of the bundled known-good architecture."""
    return resources.files("nngen_worker").joinpath(
        "assets", "reference_net.py"
    ).read_text(encoding="utf-8")


def train_once(request: TrainRequest) -> TrainResult:
    """Train the candidate in an isolated subprocess and score it.

    Never raises for candidate failures: import or instantiation problems
    come back as load-error, exceptions during training as runtime-error,
    and exceeding the wall-time budget as timeout.
    """
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="nngen-train-") as tmp:
        request_path = Path(tmp) / "request.json"
        request_path.write_text(json.dumps(asdict(request)), encoding="utf-8")
        try:
            proc = subprocess.run(
                [sys.executable, "-m", "nngen_worker.sandbox", str(request_path)],
                capture_output=True,
                text=True,
                timeout=request.timeout_s,
            )
        except subprocess.TimeoutExpired:
            return TrainResult(
                nn_id=request.nn_id,
                status="timeout",
                accuracy=None,
                wall_time=time.perf_counter() - start,
                error=f"exceeded wall-time budget of {request.timeout_s}s",
            )

    wall = time.perf_counter() - start
    payload = _parse_result_line(proc.stdout)
    if payload is None:
        tail = (proc.stderr or proc.stdout or "").strip()[-2000:]
        return TrainResult(
            nn_id=request.nn_id,
            status="runtime-error",
            accuracy=None,
            wall_time=wall,
            error=f"sandbox exited with code {proc.returncode}: {tail}",
        )
    return TrainResult(
        nn_id=request.nn_id,
        status=payload["status"],
        accuracy=payload.get("accuracy"),
        wall_time=wall,
        error=payload.get("error"),
    )


def _parse_result_line(stdout: str) -> dict | None:
    # candidates may print arbitrary text; the result is the last JSON line
    for line in reversed((stdout or "").strip().splitlines()):
        line = line.strip()
        if not line.startswith("{"):
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError:
            continue
        if isinstance(payload, dict) and payload.get("status") in _VALID_STATUSES:
            return payload
    return None
