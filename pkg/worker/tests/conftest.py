import socket
import threading
import time

import pytest
import requests
import uvicorn

from nngen_worker.service import WorkerSettings, create_app


def _free_port() -> int:
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    return port


class LiveWorker:
    def __init__(self, settings: WorkerSettings):
        self.port = _free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        config = uvicorn.Config(
            create_app(settings), host="127.0.0.1", port=self.port, log_level="warning"
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> "LiveWorker":
        self._thread.start()
        deadline = time.time() + 20
        while time.time() < deadline:
            try:
                if requests.get(f"{self.url}/health", timeout=1).status_code == 200:
                    return self
            except requests.RequestException:
                time.sleep(0.1)
        raise RuntimeError("worker did not become ready")

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture(scope="module")
def live_worker():
    worker = LiveWorker(WorkerSettings(max_jobs=2, job_timeout_s=120.0)).start()
    yield worker
    worker.stop()
