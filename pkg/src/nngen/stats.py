"""Dataset-balanced statistics, significance tests, and effect sizes.

Pooling accuracy samples across datasets of very different difficulty
biases any overall mean toward whichever dataset a variant was trained on
most.  The balanced mean avoids that: average within each (variant,
dataset) cell first, then average those per-dataset means so every dataset
carries equal weight.  Comparisons between variants use Welch's t-test
within each dataset plus Cohen's d as the effect size.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from scipy import stats as _scipy_stats

from .errors import DegenerateInputError, IngestionError, MissingDataError

__all__ = [
    "AccuracyTable",
    "BalancedMean",
    "TTestResult",
    "SignificanceResult",
    "SignificanceTable",
    "per_dataset_mean",
    "balanced_mean",
    "naive_mean",
    "t_test",
    "cohens_d",
    "significance_table",
    "variant_exclusion",
    "render_balanced_table",
    "render_per_dataset_table",
    "render_significance_table",
]

DEFAULT_ALPHA = 0.05
DEFAULT_MIN_SAMPLES = 30


class AccuracyTable:
    """Samples of top-1 accuracy (fractions) per (variant, dataset) cell."""

    def __init__(self) -> None:
        self._cells: dict[tuple[str, str], list[float]] = {}

    def add(self, variant: str, dataset: str, accuracy: float) -> None:
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {accuracy}")
        self._cells.setdefault((variant, dataset), []).append(accuracy)

    def add_many(self, rows: Iterable[tuple[str, str, float]]) -> None:
        for variant, dataset, accuracy in rows:
            self.add(variant, dataset, accuracy)

    def has_cell(self, variant: str, dataset: str) -> bool:
        return (variant, dataset) in self._cells

    def cell(self, variant: str, dataset: str) -> list[float]:
        try:
            return list(self._cells[(variant, dataset)])
        except KeyError:
            raise MissingDataError(f"no samples for ({variant!r}, {dataset!r})") from None

    def variants(self) -> list[str]:
        return sorted({v for v, _ in self._cells})

    def datasets(self, variant: str | None = None) -> list[str]:
        if variant is None:
            return sorted({d for _, d in self._cells})
        return sorted({d for v, d in self._cells if v == variant})

    def sample_count(self, variant: str) -> int:
        return sum(len(s) for (v, _), s in self._cells.items() if v == variant)

    def __len__(self) -> int:
        return len(self._cells)

    # -- comma-separated ingest/emit (variant, dataset, accuracy) -----------

    @classmethod
    def from_csv(cls, path: str | Path) -> "AccuracyTable":
        table = cls()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise IngestionError(f"{path}: empty records file") from None
            expected = ["variant", "dataset", "accuracy"]
            if [h.strip().lower() for h in header] != expected:
                raise IngestionError(
                    f"{path}: line 1: expected header {','.join(expected)}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row or not any(cell.strip() for cell in row):
                    continue
                if len(row) != 3:
                    raise IngestionError(f"{path}: line {lineno}: expected 3 fields")
                variant, dataset, raw = (cell.strip() for cell in row)
                try:
                    table.add(variant, dataset, float(raw))
                except ValueError as exc:
                    raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
        if not len(table):
            raise IngestionError(f"{path}: no data rows")
        return table

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "dataset", "accuracy"])
            for (variant, dataset), samples in sorted(self._cells.items()):
                for value in samples:
                    writer.writerow([variant, dataset, repr(value)])


# ---------------------------------------------------------------------------
# Means
# ---------------------------------------------------------------------------


def per_dataset_mean(table: AccuracyTable, variant: str, dataset: str) -> float:
    """Arithmetic mean of one (variant, dataset) cell."""
    samples = table.cell(variant, dataset)
    return sum(samples) / len(samples)


@dataclass(frozen=True)
class BalancedMean:
    """Average of per-dataset means, weighting every dataset equally.

    ``std`` is the sample (n-1) standard deviation of the per-dataset
    means, the usual convention behind reported "mean +/- std" columns;
    ``std_population`` is the n-denominator variant.
    """

    mean: float
    std: float
    std_population: float
    per_dataset: dict[str, float]

    @property
    def datasets(self) -> int:
        return len(self.per_dataset)


def balanced_mean(table: AccuracyTable, variant: str) -> BalancedMean:
    datasets = table.datasets(variant)
    if not datasets:
        raise MissingDataError(f"no samples for variant {variant!r}")
    means = {d: per_dataset_mean(table, variant, d) for d in datasets}
    values = list(means.values())
    k = len(values)
    center = sum(values) / k
    ss = sum((v - center) ** 2 for v in values)
    std_pop = math.sqrt(ss / k)
    std_sample = math.sqrt(ss / (k - 1)) if k > 1 else 0.0
    return BalancedMean(mean=center, std=std_sample, std_population=std_pop, per_dataset=means)


def naive_mean(table: AccuracyTable, variant: str) -> float:
    """Pooled mean over every sample for the variant, ignoring datasets."""
    samples: list[float] = []
    for dataset in table.datasets(variant):
        samples.extend(table.cell(variant, dataset))
    if not samples:
        raise MissingDataError(f"no samples for variant {variant!r}")
    return sum(samples) / len(samples)


# ---------------------------------------------------------------------------
# Significance testing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_value: float


def _mean_var(samples: Sequence[float]) -> tuple[float, float, int]:
    n = len(samples)
    mean = sum(samples) / n
    var = sum((x - mean) ** 2 for x in samples) / (n - 1)
    return mean, var, n


def t_test(
    samples_a: Sequence[float], samples_b: Sequence[float], welch: bool = True
) -> TTestResult:
    """Two-sided independent t-test; Welch by default, Student's optional.

    Swapping the groups negates t and leaves p unchanged.  Raises
    DegenerateInputError for fewer than two samples per group or when both
    groups have zero variance.
    """
    if len(samples_a) < 2 or len(samples_b) < 2:
        raise DegenerateInputError("each group needs at least 2 samples")
    mean_a, var_a, n_a = _mean_var(samples_a)
    mean_b, var_b, n_b = _mean_var(samples_b)
    if var_a == 0.0 and var_b == 0.0:
        raise DegenerateInputError("both groups have zero variance")

    if welch:
        se_a, se_b = var_a / n_a, var_b / n_b
        se = math.sqrt(se_a + se_b)
        t = (mean_a - mean_b) / se
        df = (se_a + se_b) ** 2 / (se_a**2 / (n_a - 1) + se_b**2 / (n_b - 1))
    else:
        pooled = ((n_a - 1) * var_a + (n_b - 1) * var_b) / (n_a + n_b - 2)
        t = (mean_a - mean_b) / math.sqrt(pooled * (1 / n_a + 1 / n_b))
        df = n_a + n_b - 2
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df))
    return TTestResult(t=t, df=df, p_value=min(p, 1.0))


def cohens_d(samples_a: Sequence[float], samples_b: Sequence[float]) -> float:
    """Standardized mean difference using the pooled standard deviation."""
    if len(samples_a) < 2 or len(samples_b) < 2:
        raise DegenerateInputError("each group needs at least 2 samples")
    mean_a, var_a, n_a = _mean_var(samples_a)
    mean_b, var_b, n_b = _mean_var(samples_b)
    pooled = ((n_a - 1) * var_a + (n_b - 1) * var_b) / (n_a + n_b - 2)
    if pooled == 0.0:
        raise DegenerateInputError("pooled variance is zero")
    return (mean_a - mean_b) / math.sqrt(pooled)


@dataclass(frozen=True)
class SignificanceResult:
    dataset: str
    comparison: str  # "<variant> vs <baseline>"
    delta: float  # mean difference in percentage points
    p_value: float
    cohens_d: float
    significant: bool

    def __post_init__(self) -> None:
        if self.significant != (self.p_value < DEFAULT_ALPHA):
            raise ValueError("significant flag inconsistent with p-value")


@dataclass(frozen=True)
class SkippedCell:
    dataset: str
    comparison: str
    reason: str


@dataclass(frozen=True)
class SignificanceTable:
    baseline: str
    rows: tuple[SignificanceResult, ...]
    skipped: tuple[SkippedCell, ...]


def significance_table(
    table: AccuracyTable,
    baseline: str,
    alpha: float = DEFAULT_ALPHA,
    welch: bool = True,
) -> SignificanceTable:
    """Per-dataset comparisons of every variant against *baseline*.

    Keeps only rows with p < alpha, sorted by ascending p.  Degenerate
    cells (too few samples, zero variance) become skipped entries rather
    than aborting the table.
    """
    if baseline not in table.variants():
        raise MissingDataError(f"baseline variant {baseline!r} has no samples")
    rows: list[SignificanceResult] = []
    skipped: list[SkippedCell] = []
    for variant in table.variants():
        if variant == baseline:
            continue
        for dataset in table.datasets(baseline):
            if not table.has_cell(variant, dataset):
                continue
            comparison = f"{variant} vs {baseline}"
            a = table.cell(variant, dataset)
            b = table.cell(baseline, dataset)
            try:
                result = t_test(a, b, welch=welch)
                d = cohens_d(a, b)
            except DegenerateInputError as exc:
                skipped.append(SkippedCell(dataset, comparison, str(exc)))
                continue
            if result.p_value < alpha:
                delta = (sum(a) / len(a) - sum(b) / len(b)) * 100.0
                rows.append(
                    SignificanceResult(
                        dataset=dataset,
                        comparison=comparison,
                        delta=delta,
                        p_value=result.p_value,
                        cohens_d=d,
                        significant=result.p_value < DEFAULT_ALPHA,
                    )
                )
    rows.sort(key=lambda r: (r.p_value, r.dataset, r.comparison))
    return SignificanceTable(baseline=baseline, rows=tuple(rows), skipped=tuple(skipped))


def variant_exclusion(table: AccuracyTable, min_samples: int = DEFAULT_MIN_SAMPLES) -> list[str]:
    """Variants with too few total samples for balanced-mean reporting."""
    if min_samples < 2:
        raise ValueError(f"min_samples must be >= 2, got {min_samples}")
    return [v for v in table.variants() if table.sample_count(v) < min_samples]


# ---------------------------------------------------------------------------
# Report rendering (percentages, one decimal, aligned summary tables)
# ---------------------------------------------------------------------------


def _pct(value: float) -> str:
    return f"{value * 100:.1f}"


def _render_aligned(header: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_balanced_table(
    table: AccuracyTable, min_samples: int = DEFAULT_MIN_SAMPLES
) -> tuple[str, list[list[str]]]:
    """Overall table: variant, models, balanced mean +/- std.

    Returns (aligned text, csv rows incl. header).  Variants below the
    sample threshold are listed as excluded instead of reported.
    """
    excluded = set(variant_exclusion(table, min_samples))
    header = ["variant", "models", "balanced_mean_pct", "std_pct"]
    text_rows, csv_rows = [], [header]
    notes = []
    for variant in table.variants():
        count = table.sample_count(variant)
        if variant in excluded:
            notes.append(f"{variant} excluded: insufficient sample size (n={count})")
            continue
        bm = balanced_mean(table, variant)
        text_rows.append([variant, str(count), f"{_pct(bm.mean)} +/- {_pct(bm.std)}"])
        csv_rows.append([variant, str(count), _pct(bm.mean), _pct(bm.std)])
    text = _render_aligned(["Variant", "Models", "Balanced Mean (%)"], text_rows)
    if notes:
        text += "".join(f"note: {n}\n" for n in notes)
    return text, csv_rows


def render_per_dataset_table(table: AccuracyTable) -> tuple[str, list[list[str]]]:
    """Dataset-by-variant grid of mean accuracy with a balanced-mean row."""
    variants = table.variants()
    datasets = table.datasets()
    header = ["Dataset"] + variants
    text_rows = []
    csv_rows = [["dataset"] + variants]
    for dataset in datasets:
        row = [dataset]
        for variant in variants:
            if table.has_cell(variant, dataset):
                row.append(_pct(per_dataset_mean(table, variant, dataset)))
            else:
                row.append("-")
        text_rows.append(row)
        csv_rows.append(row)
    bottom = ["Balanced Mean"]
    for variant in variants:
        bm = balanced_mean(table, variant)
        bottom.append(_pct(bm.mean))
    text_rows.append(bottom)
    csv_rows.append(["balanced_mean"] + bottom[1:])
    return _render_aligned(header, text_rows), csv_rows


def render_significance_table(result: SignificanceTable) -> tuple[str, list[list[str]]]:
    """Comparison rows vs. the baseline; only p < alpha rows are present."""
    header = ["Dataset", "Comparison", "Delta", "p", "d"]
    text_rows, csv_rows = [], [["dataset", "comparison", "delta_pct", "p_value", "cohens_d"]]
    for row in result.rows:
        rendered = [
            row.dataset,
            row.comparison,
            f"{row.delta:+.1f}%",
            f"{row.p_value:.3f}",
            f"{row.cohens_d:.2f}",
        ]
        text_rows.append(rendered)
        csv_rows.append(
            [row.dataset, row.comparison, f"{row.delta:.6f}", f"{row.p_value:.9f}", f"{row.cohens_d:.6f}"]
        )
    text = _render_aligned(header, text_rows)
    if result.skipped:
        for cell in result.skipped:
            text += f"skipped: {cell.dataset} {cell.comparison}: {cell.reason}\n"
    return text, csv_rows
