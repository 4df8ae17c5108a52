"""Subprocess entry: load candidate code, train one epoch, print a result.

Runs fully inside its own interpreter so a broken or hostile candidate can
only kill this process, never the worker.  The parent enforces the
wall-time budget; a loose CPU rlimit is set here as a second line of
defense.  The single line of JSON on stdout is the whole interface.

Usage: python -m nngen_worker.sandbox <request.json>
"""

from __future__ import annotations

import importlib.util
import json
import random
import sys
import traceback
from pathlib import Path


def _result(status: str, accuracy: float | None = None, error: str | None = None) -> int:
    print(json.dumps({"status": status, "accuracy": accuracy, "error": error}))
    sys.stdout.flush()
    return 0


def _limit_cpu(budget_s: float) -> None:
    try:
        import resource

        cap = int(max(60.0, budget_s * 4))
        resource.setrlimit(resource.RLIMIT_CPU, (cap, cap))
    except (ImportError, ValueError, OSError):  # pragma: no cover - platform
        pass


def _load_candidate(code_path: Path):
    spec = importlib.util.spec_from_file_location("candidate", code_path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main(argv: list[str]) -> int:
    request = json.loads(Path(argv[1]).read_text(encoding="utf-8"))
    _limit_cpu(float(request.get("timeout_s", 600.0)))

    import torch

    torch.set_num_threads(2)
    seed = int(request.get("seed", 0))
    torch.manual_seed(seed)
    random.seed(seed)

    from . import data

    bundle = data.load_dataset(
        request["dataset"],
        train_size=int(request.get("subset_size", 5000)),
        test_size=int(request.get("test_size", 1000)),
        seed=seed,
    )
    device = torch.device(request.get("device", "cpu"))

    # --- load phase: import + instantiation failures are load errors
    code_path = Path(argv[1]).parent / "candidate.py"
    code_path.write_text(request["code"], encoding="utf-8")
    try:
        module = _load_candidate(code_path)
        net_cls = getattr(module, "Net")
        net = net_cls(bundle.in_shape, bundle.num_classes)
    except BaseException:
        return _result("load-error", error=traceback.format_exc()[-2000:])

    # --- train + evaluate: anything thrown here is a runtime error
    try:
        net.train_setup(device)
        batch = int(request.get("batch_size", 64))
        order = torch.randperm(len(bundle.train_y))
        for epoch in range(int(request.get("epochs", 1))):
            net.train()
            for start in range(0, len(order), batch):
                idx = order[start : start + batch]
                net.learn(bundle.train_x[idx], bundle.train_y[idx], device)

        net.eval()
        correct = 0
        with torch.no_grad():
            for start in range(0, len(bundle.test_y), 256):
                x = bundle.test_x[start : start + 256].to(device)
                y = bundle.test_y[start : start + 256].to(device)
                predicted = net(x).argmax(dim=1)
                correct += int((predicted == y).sum().item())
        accuracy = correct / len(bundle.test_y)
    except BaseException:
        return _result("runtime-error", error=traceback.format_exc()[-2000:])

    return _result("ok", accuracy=accuracy)


if __name__ == "__main__":
    sys.exit(main(sys.argv))
