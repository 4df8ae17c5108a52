"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
The whole suite is offline: mock LLM transport and mock trainer only.
"""

import random
import time
from pathlib import Path

import pytest

from helpers_synth import build_prompt_scenario, mutate_whitespace, synth_corpus
from make_goldens import SCENARIOS
from nngen import dedup, fsap, stats
from nngen.dedup import Decision
from nngen.genclient import GenClient, GenerationParams, MockTransport
from nngen.pipeline import MockTrainer, run_campaign, seed_registry
from nngen.registry import ModelRecord, Registry
from test_pipeline import campaign_script
from test_stats import (
    REFERENCE_BALANCED,
    oracle_cohens_d,
    oracle_welch,
    reference_rows_as_single_samples,
)

GOLDEN_DIR = Path(__file__).parent / "golden"


def verdict(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


def test_criterion_dedup_correctness():
    """1,000 originals accepted, 1,000 whitespace variants rejected, <10s."""
    corpus = synth_corpus(1000, seed=42, target_bytes=3000)
    rng = random.Random(9)
    variants = [mutate_whitespace(code, rng) for code in corpus]
    assert all(v != o for v, o in zip(variants, corpus))

    store = Registry(":memory:")
    t0 = time.perf_counter()
    accepted = 0
    for code in corpus:
        if dedup.check_unique(code, store) is Decision.ACCEPT:
            accepted += 1
            store.insert(ModelRecord.from_code(code, "alt-nn1", "bench"))
    rejected = sum(
        1 for v in variants if dedup.check_unique(v, store) is Decision.REJECT
    )
    elapsed = time.perf_counter() - t0
    store.close()

    assert accepted == 1000, f"false positives: {1000 - accepted} originals rejected"
    assert rejected == 1000, f"missed variants: {1000 - rejected} duplicates accepted"
    assert elapsed < 10.0, f"dedup phase took {elapsed:.2f}s (budget 10s)"
    verdict(
        "dedup-correctness",
        f"1000/1000 variants rejected, 0 false positives, {elapsed:.2f}s",
    )


def test_criterion_dedup_latency(tmp_path):
    """Median hash-path < 1ms per ~3KB sample; full-parse baseline >= 10x slower."""
    corpus = synth_corpus(1000, seed=43, target_bytes=3000)
    report = dedup.benchmark_latency(corpus)

    (tmp_path / "bench.txt").write_text(report.to_text())
    (tmp_path / "bench.csv").write_text(report.to_csv())
    assert (tmp_path / "bench.txt").stat().st_size > 0

    assert report.hash_median_s < 1e-3, f"median {report.hash_median_s * 1e3:.3f}ms >= 1ms"
    assert report.speedup is not None and report.speedup >= 10.0, (
        f"baseline/hash ratio {report.speedup:.1f} < 10"
    )
    verdict(
        "dedup-latency",
        f"median {report.hash_median_s * 1e3:.4f}ms, "
        f"ratio {report.speedup:.1f}x (hardware-dependent, reported not asserted at 100x)",
    )


def test_criterion_balanced_mean_fidelity():
    """Reference per-dataset means reproduce their balanced means within 0.05."""
    table = reference_rows_as_single_samples()
    for variant, expected in sorted(REFERENCE_BALANCED.items()):
        got = stats.balanced_mean(table, variant).mean * 100
        assert abs(got - expected) <= 0.05, f"{variant}: {got:.2f} vs {expected}"
    verdict(
        "balanced-mean-fidelity",
        "alt-nn1..alt-nn5 -> 51.5 49.8 53.1 47.3 43.0 within 0.05",
    )


def test_criterion_statistical_oracle_equivalence():
    """t_test/cohens_d match independent oracles on 50 seeded instances at 1e-9;
    null false-positive rate within alpha +/- 2 binomial std over 1,000 reps."""
    rng = random.Random(314159)
    for _ in range(50):
        na, nb = rng.randint(3, 200), rng.randint(3, 200)
        a = [rng.gauss(rng.uniform(-5, 5), rng.uniform(0.2, 4.0)) for _ in range(na)]
        b = [rng.gauss(rng.uniform(-5, 5), rng.uniform(0.2, 4.0)) for _ in range(nb)]
        result = stats.t_test(a, b)
        t_o, df_o, p_o = oracle_welch(a, b)
        assert result.t == pytest.approx(t_o, rel=1e-9)
        assert result.df == pytest.approx(df_o, rel=1e-9)
        assert result.p_value == pytest.approx(p_o, rel=1e-9, abs=1e-300)
        assert stats.cohens_d(a, b) == pytest.approx(oracle_cohens_d(a, b), rel=1e-9)

    mc_rng = random.Random(2024)
    reps, rejections = 1000, 0
    for _ in range(reps):
        table = stats.AccuracyTable()
        for _ in range(30):
            table.add("alt-nn1", "ds", min(1.0, max(0.0, mc_rng.gauss(0.5, 0.1))))
            table.add("alt-nn2", "ds", min(1.0, max(0.0, mc_rng.gauss(0.5, 0.1))))
        if stats.significance_table(table, "alt-nn1").rows:
            rejections += 1
    rate = rejections / reps
    band = 2 * (0.05 * 0.95 / reps) ** 0.5
    assert abs(rate - 0.05) <= band, f"null rejection rate {rate} outside 0.05+/-{band:.4f}"
    verdict(
        "statistical-oracle-equivalence",
        f"50 instances at 1e-9; null rejection rate {rate:.3f} in 0.05+/-{band:.3f}",
    )


def test_criterion_fsap_law():
    """len(supporting) == min(n, pool-1), reference excluded, goldens byte-equal."""
    checked = 0
    for pool_size in range(2, 21):
        registry = Registry(":memory:")
        for i in range(pool_size):
            registry.insert(
                ModelRecord.from_code(
                    f"import torch\n\n\nclass Net:\n    width = {i}\n",
                    "alt-nn1",
                    "cifar-100",
                    accuracy=round(0.50 + 0.01 * i, 4),
                    created_at=float(i),
                )
            )
        for n in range(1, 7):
            reference, supporting = fsap.select_models(
                registry, "cifar-100", n, seed=1000 * pool_size + n
            )
            assert len(supporting) == min(n, pool_size - 1)
            assert reference.nn_id not in {s.nn_id for s in supporting}
            checked += 1
        registry.close()
    assert checked == 19 * 6

    for name, kwargs in sorted(SCENARIOS.items()):
        bundle = build_prompt_scenario(**kwargs)
        assert bundle.prompt_text.encode("utf-8") == (GOLDEN_DIR / name).read_bytes(), name
    verdict("fsap-law", f"{checked} (pool, n) pairs; {len(SCENARIOS)} goldens byte-equal")


def test_criterion_end_to_end_mock_campaign():
    """50 slots: 10 dup, 5 invalid -> 35 trained, 25.0 GPU-hours saved, <30s."""
    t0 = time.perf_counter()
    with Registry(":memory:") as registry:
        seed_registry(registry)
        before = registry.count()
        report = run_campaign(
            "cifar-10",
            3,
            50,
            seed=7,
            registry=registry,
            client=GenClient(
                GenerationParams(backoff_base=0.0, max_retries=0),
                transport=MockTransport(script=campaign_script()),
            ),
            trainer=MockTrainer(),
        )
        gained = registry.count() - before
    elapsed = time.perf_counter() - t0

    assert report.duplicates_rejected == 10
    assert report.validation_failures == 5
    assert report.trained == 35
    assert report.gpu_hours_saved == 25.0
    assert report.hours_per_training == 2.5
    assert report.identities_ok(), "report count identities must hold exactly"
    assert gained == 35
    assert elapsed < 30.0, f"campaign took {elapsed:.2f}s (budget 30s)"
    verdict(
        "end-to-end-mock-campaign",
        f"10 dup / 5 invalid / 35 trained, 25.0 GPU-hours, {elapsed:.2f}s",
    )


def test_criterion_accuracy_table_reproduction_caveat():
    """Table-cell accuracies and significance rows are NOT numerically
    reproducible without the upstream database and fine-tuned model; the
    methodology (balanced means, Welch/d, filtering) is what is checked."""
    table = reference_rows_as_single_samples()
    # single-sample cells: every comparison is degenerate and must be
    # skipped gracefully rather than faked into numbers
    result = stats.significance_table(table, "alt-nn1")
    assert result.rows == ()
    assert len(result.skipped) == 24  # 4 variants x 6 datasets
    verdict(
        "accuracy-table-caveat",
        "cell values not asserted; methodology covered by the two criteria above",
    )
