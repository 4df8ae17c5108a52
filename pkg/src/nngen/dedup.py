"""Whitespace-normalized MD5 fingerprinting and uniqueness decisions.

Two code strings are considered duplicates when they are identical after
every whitespace character is removed.  The MD5 digest of that canonical
form doubles as the primary key (``nn_id``) of the model registry, so a
uniqueness check is one hash plus one indexed lookup.
"""

from __future__ import annotations

import ast
import hashlib
import math
import statistics
import time
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

__all__ = [
    "Decision",
    "NormalizedFingerprint",
    "LatencyReport",
    "normalize",
    "fingerprint",
    "check_unique",
    "benchmark_latency",
]


class Decision(Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"


@dataclass(frozen=True)
class NormalizedFingerprint:
    """Canonical whitespace-free form of a code string and its MD5 digest."""

    normalized: str
    digest: str


def normalize(code: str) -> str:
    """Strip every whitespace character, preserving all others in order.

    ``str.split()`` with no separator splits on the full Unicode whitespace
    class (space, tab, LF, CR, VT, FF and the Unicode space characters), so
    joining the pieces removes exactly those characters.
    """
    return "".join(code.split())


def fingerprint(code: str) -> NormalizedFingerprint:
    """Return the normalized form of *code* and its 32-hex MD5 digest."""
    normalized = normalize(code)
    digest = hashlib.md5(normalized.encode("utf-8")).hexdigest()
    return NormalizedFingerprint(normalized=normalized, digest=digest)


def check_unique(code: str, store) -> Decision:
    """REJECT when a record with *code*'s fingerprint is already stored.

    Read-only: never mutates the store.  *store* is anything exposing
    ``contains(digest) -> bool`` (normally a ``registry.Registry``).
    """
    if store.contains(fingerprint(code).digest):
        return Decision.REJECT
    return Decision.ACCEPT


# ---------------------------------------------------------------------------
# Latency benchmark: hash path vs. a full-parse structural baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatencyReport:
    """Per-sample wall times of the hash path and the parse baseline."""

    samples: int
    hash_median_s: float
    hash_p99_s: float
    hash_mean_s: float
    baseline_samples: int
    baseline_skipped: int
    baseline_median_s: float | None
    baseline_p99_s: float | None
    speedup: float | None

    def to_text(self) -> str:
        lines = [
            "dedup latency benchmark",
            f"  samples:            {self.samples}",
            f"  hash median:        {self.hash_median_s * 1e3:.4f} ms",
            f"  hash p99:           {self.hash_p99_s * 1e3:.4f} ms",
            f"  hash mean:          {self.hash_mean_s * 1e3:.4f} ms",
        ]
        if self.baseline_samples:
            lines += [
                f"  baseline (parse) median: {self.baseline_median_s * 1e3:.4f} ms",
                f"  baseline (parse) p99:    {self.baseline_p99_s * 1e3:.4f} ms",
                f"  baseline skipped:        {self.baseline_skipped}",
                f"  speedup (baseline/hash): {self.speedup:.1f}x",
            ]
        else:
            lines.append(f"  baseline: no parseable samples ({self.baseline_skipped} skipped)")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        header = (
            "samples,hash_median_ms,hash_p99_ms,hash_mean_ms,"
            "baseline_samples,baseline_skipped,baseline_median_ms,baseline_p99_ms,speedup"
        )
        def fmt(v: float | None) -> str:
            return "" if v is None else f"{v * 1e3:.6f}"

        row = ",".join(
            [
                str(self.samples),
                fmt(self.hash_median_s),
                fmt(self.hash_p99_s),
                fmt(self.hash_mean_s),
                str(self.baseline_samples),
                str(self.baseline_skipped),
                fmt(self.baseline_median_s),
                fmt(self.baseline_p99_s),
                "" if self.speedup is None else f"{self.speedup:.3f}",
            ]
        )
        return header + "\n" + row + "\n"


def _percentile(sorted_values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile; for a single value every percentile is it."""
    idx = max(0, math.ceil(q / 100.0 * len(sorted_values)) - 1)
    return sorted_values[idx]


def benchmark_latency(corpus: Sequence[str], store=None) -> LatencyReport:
    """Time normalize+hash+lookup per sample against a full-parse baseline.

    The baseline is a complete syntactic parse of each sample, the cheapest
    structural-comparison primitive; samples it cannot parse are counted and
    excluded from baseline timing.  When *store* is omitted an in-memory
    registry pre-filled with the corpus is used so lookups are realistic.
    """
    if not corpus:
        raise ValueError("corpus must be non-empty")

    if store is None:
        from .registry import ModelRecord, Registry  # local import: avoids a cycle

        store = Registry(":memory:")
        for i, code in enumerate(corpus):
            digest = fingerprint(code).digest
            if not store.contains(digest):
                store.insert(
                    ModelRecord(
                        nn_id=digest,
                        variant="alt-nn1",
                        dataset="bench",
                        code=code,
                        created_at=float(i),
                    )
                )

    hash_times = []
    for code in corpus:
        t0 = time.perf_counter()
        store.contains(hashlib.md5(normalize(code).encode("utf-8")).hexdigest())
        hash_times.append(time.perf_counter() - t0)

    baseline_times = []
    skipped = 0
    for code in corpus:
        t0 = time.perf_counter()
        try:
            ast.parse(code)
        except (SyntaxError, ValueError):
            skipped += 1
            continue
        baseline_times.append(time.perf_counter() - t0)

    hash_times.sort()
    baseline_times.sort()
    hash_median = statistics.median(hash_times)
    baseline_median = statistics.median(baseline_times) if baseline_times else None
    return LatencyReport(
        samples=len(corpus),
        hash_median_s=hash_median,
        hash_p99_s=_percentile(hash_times, 99),
        hash_mean_s=sum(hash_times) / len(hash_times),
        baseline_samples=len(baseline_times),
        baseline_skipped=skipped,
        baseline_median_s=baseline_median,
        baseline_p99_s=_percentile(baseline_times, 99) if baseline_times else None,
        speedup=(baseline_median / hash_median) if baseline_median else None,
    )
