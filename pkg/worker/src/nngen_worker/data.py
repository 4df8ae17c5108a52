"""Desk-scale datasets for one-epoch validation runs.

The ``mnist`` provider uses the real dataset when a local copy exists under
$NNGEN_DATA_DIR (downloading when the environment allows it) and otherwise
falls back to a deterministic synthetic digit set of the same shape:
28x28 grayscale, 10 classes, exactly balanced test split.  Training at
this scale is a correctness gate, not a benchmark, so the fallback keeps
the worker fully usable on machines without dataset access.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import torch

log = logging.getLogger(__name__)

DATA_DIR_ENV = "NNGEN_DATA_DIR"

# 7x5 bitmap glyphs for the synthetic digits.
_GLYPHS = {
    0: (" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "),
    1: ("  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "),
    2: (" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"),
    3: (" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "),
    4: ("   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "),
    5: ("#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "),
    6: (" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "),
    7: ("#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "),
    8: (" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "),
    9: (" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "),
}


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    train_x: torch.Tensor  # (N, C, H, W) float32
    train_y: torch.Tensor  # (N,) int64
    test_x: torch.Tensor
    test_y: torch.Tensor

    @property
    def in_shape(self) -> tuple[int, int, int]:
        return tuple(self.train_x.shape[1:])

    @property
    def num_classes(self) -> int:
        return int(self.test_y.max().item()) + 1


def _glyph_tensor(digit: int) -> torch.Tensor:
    rows = _GLYPHS[digit]
    bitmap = torch.tensor(
        [[1.0 if ch == "#" else 0.0 for ch in row] for row in rows]
    )
    # 7x5 -> 28x20, padded to 28x28
    scaled = bitmap.repeat_interleave(4, dim=0).repeat_interleave(4, dim=1)
    canvas = torch.zeros(28, 28)
    canvas[:, 4:24] = scaled
    return canvas


def _synthetic_split(
    per_class: int, generator: torch.Generator
) -> tuple[torch.Tensor, torch.Tensor]:
    glyphs = torch.stack([_glyph_tensor(d) for d in range(10)])
    images, labels = [], []
    for digit in range(10):
        base = glyphs[digit]
        for _ in range(per_class):
            shift_r = int(torch.randint(-3, 4, (1,), generator=generator))
            shift_c = int(torch.randint(-3, 4, (1,), generator=generator))
            img = torch.roll(base, shifts=(shift_r, shift_c), dims=(0, 1))
            intensity = 0.6 + 0.4 * torch.rand(1, generator=generator).item()
            img = img * intensity + 0.10 * torch.randn(28, 28, generator=generator)
            images.append(img.clamp(0.0, 1.0))
            labels.append(digit)
    x = torch.stack(images).unsqueeze(1).float()
    y = torch.tensor(labels, dtype=torch.int64)
    perm = torch.randperm(len(y), generator=generator)
    return x[perm], y[perm]


def synthetic_digits(
    train_size: int = 5000, test_size: int = 1000, seed: int = 0
) -> DatasetBundle:
    """Deterministic 10-class digit set; the test split is exactly balanced."""
    if train_size < 10 or test_size < 10:
        raise ValueError("need at least one sample per class in each split")
    gen_train = torch.Generator().manual_seed(seed)
    gen_test = torch.Generator().manual_seed(seed + 1_000_003)
    train_x, train_y = _synthetic_split(train_size // 10, gen_train)
    test_x, test_y = _synthetic_split(test_size // 10, gen_test)
    return DatasetBundle("synthetic-digits", train_x, train_y, test_x, test_y)


def _mnist_from_torchvision(
    train_size: int, test_size: int, seed: int
) -> DatasetBundle | None:
    root = os.environ.get(DATA_DIR_ENV, os.path.expanduser("~/.cache/nngen-data"))
    try:
        from torchvision import datasets  # local import: heavy, optional

        try:
            train = datasets.MNIST(root, train=True, download=False)
            test = datasets.MNIST(root, train=False, download=False)
        except RuntimeError:
            train = datasets.MNIST(root, train=True, download=True)
            test = datasets.MNIST(root, train=False, download=True)
    except Exception as exc:
        log.info("real MNIST unavailable (%s); using synthetic digits", exc)
        return None

    generator = torch.Generator().manual_seed(seed)

    def subset(ds, size):
        data = ds.data.float().unsqueeze(1) / 255.0
        targets = ds.targets.to(torch.int64)
        idx = torch.randperm(len(targets), generator=generator)[:size]
        return data[idx], targets[idx]

    train_x, train_y = subset(train, train_size)
    test_x, test_y = subset(test, test_size)
    return DatasetBundle("mnist", train_x, train_y, test_x, test_y)


def load_dataset(
    name: str, train_size: int = 5000, test_size: int = 1000, seed: int = 0
) -> DatasetBundle:
    """Fetch a desk-scale train/test split by dataset name."""
    if name == "synthetic-digits":
        return synthetic_digits(train_size, test_size, seed)
    if name == "mnist":
        bundle = _mnist_from_torchvision(train_size, test_size, seed)
        return bundle if bundle is not None else synthetic_digits(train_size, test_size, seed)
    raise ValueError(f"unknown dataset {name!r}; available: mnist, synthetic-digits")
