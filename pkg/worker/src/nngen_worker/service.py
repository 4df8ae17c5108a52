"""HTTP face of the worker: POST /train runs one job, GET /health probes it."""

from __future__ import annotations

import argparse
import logging
import threading
from dataclasses import dataclass

from fastapi import FastAPI
from pydantic import BaseModel, Field

from .trainer import TrainRequest, train_once

log = logging.getLogger(__name__)


@dataclass
class WorkerSettings:
    max_jobs: int = 2
    job_timeout_s: float = 600.0
    max_subset_size: int = 20000


class TrainRequestModel(BaseModel):
    nn_id: str
    code: str = Field(min_length=1)
    dataset: str = "mnist"
    epochs: int = Field(default=1, ge=1)
    batch_size: int = Field(default=64, ge=1)
    device: str = "cpu"
    subset_size: int = Field(default=5000, ge=10)
    test_size: int = Field(default=1000, ge=10)
    seed: int = 0


class TrainResultModel(BaseModel):
    nn_id: str
    status: str
    accuracy: float | None
    wall_time: float
    error: str | None


def create_app(settings: WorkerSettings | None = None) -> FastAPI:
    settings = settings or WorkerSettings()
    app = FastAPI(title="nngen training worker")
    # jobs run in FastAPI's threadpool; the semaphore caps live subprocesses
    slots = threading.BoundedSemaphore(settings.max_jobs)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ready", "max_jobs": settings.max_jobs}

    @app.post("/train", response_model=TrainResultModel)
    def train(request: TrainRequestModel) -> TrainResultModel:
        job = TrainRequest(
            nn_id=request.nn_id,
            code=request.code,
            dataset=request.dataset,
            epochs=request.epochs,
            batch_size=min(request.batch_size, request.subset_size),
            device=request.device,
            subset_size=min(request.subset_size, settings.max_subset_size),
            test_size=request.test_size,
            timeout_s=settings.job_timeout_s,
            seed=request.seed,
        )
        with slots:
            log.info("training %s on %s", job.nn_id, job.dataset)
            result = train_once(job)
        log.info("finished %s: %s", job.nn_id, result.status)
        return TrainResultModel(
            nn_id=result.nn_id,
            status=result.status,
            accuracy=result.accuracy,
            wall_time=result.wall_time,
            error=result.error,
        )

    return app


def serve(host: str = "127.0.0.1", port: int = 8642, settings: WorkerSettings | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(settings), host=host, port=port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nngen-worker", description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8642)
    parser.add_argument("--max-jobs", type=int, default=2)
    parser.add_argument("--job-timeout", type=float, default=600.0)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    serve(
        args.host,
        args.port,
        WorkerSettings(max_jobs=args.max_jobs, job_timeout_s=args.job_timeout),
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
