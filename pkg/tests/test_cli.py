import csv
import json
import subprocess
import sys

import pytest

from helpers_synth import make_net_code, mutate_whitespace_gentle, synth_corpus
from nngen.cli import main
from nngen.pipeline import seed_registry
from nngen.registry import Registry
from test_stats import REFERENCE_BALANCED, reference_rows_as_single_samples
import random


@pytest.fixture
def workdir(tmp_path):
    """A config file wired for fully offline runs plus its directories."""
    store = tmp_path / "store.db"
    out = tmp_path / "out"
    fixture = tmp_path / "mock.json"
    completions = [f"```python\n{make_net_code(300 + i)}\n```" for i in range(10)]
    fixture.write_text(json.dumps({"script": [{"content": c} for c in completions]}))
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "store_path": str(store),
                "output_dir": str(out),
                "llm_mode": "mock",
                "mock_fixture": str(fixture),
                "trainer_mode": "mock",
            }
        )
    )
    with Registry(store) as registry:
        seed_registry(registry)
    return {"config": str(config), "store": store, "out": out, "tmp": tmp_path}


def run_cli(*argv):
    return main(list(argv))


def test_generate_writes_report_and_log(workdir, capsys):
    rc = run_cli(
        "--config", workdir["config"],
        "generate", "--dataset", "cifar-100", "--n", "3", "--count", "10", "--seed", "7",
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "requested=10" in out
    report_path = workdir["out"] / "report-cifar-100-n3-seed7.json"
    report = json.loads(report_path.read_text())
    assert report["requested"] == 10
    assert report["trained"] == 10
    log_path = workdir["out"] / "run-cifar-100-n3-seed7.log.jsonl"
    assert log_path.exists()
    assert all(json.loads(l) for l in log_path.read_text().splitlines())


def test_generate_n_out_of_range_usage_error(workdir):
    with pytest.raises(SystemExit) as exc:
        run_cli("--config", workdir["config"],
                "generate", "--dataset", "cifar-10", "--n", "7", "--count", "1")
    assert exc.value.code == 2


def test_generate_count_zero_succeeds(workdir, capsys):
    rc = run_cli(
        "--config", workdir["config"],
        "generate", "--dataset", "cifar-10", "--n", "1", "--count", "0",
    )
    assert rc == 0
    assert "requested=0" in capsys.readouterr().out


def test_generate_empty_pool_fails_nonzero(workdir, capsys):
    rc = run_cli(
        "--config", workdir["config"],
        "generate", "--dataset", "places365", "--n", "1", "--count", "1",
    )
    assert rc == 1
    assert "seed the registry" in capsys.readouterr().err


def test_stats_reproduces_balanced_means(workdir, capsys):
    records = workdir["tmp"] / "records.csv"
    reference_rows_as_single_samples().to_csv(records)
    rc = run_cli(
        "--config", workdir["config"],
        "stats", "--input", str(records), "--baseline", "alt-nn1", "--min-samples", "2",
    )
    assert rc == 0
    with open(workdir["out"] / "balanced_mean.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["variant", "models", "balanced_mean_pct", "std_pct"]
    got = {row[0]: float(row[2]) for row in rows[1:]}
    for variant, expected in REFERENCE_BALANCED.items():
        assert abs(got[variant] - expected) <= 0.05
    assert (workdir["out"] / "per_dataset.txt").exists()
    assert (workdir["out"] / "significance.csv").exists()


def test_stats_missing_baseline_names_variant(workdir, capsys):
    records = workdir["tmp"] / "records.csv"
    records.write_text("variant,dataset,accuracy\nalt-nn2,mnist,0.5\n")
    rc = run_cli("--config", workdir["config"], "stats", "--input", str(records))
    assert rc == 1
    assert "alt-nn1" in capsys.readouterr().err


def test_stats_empty_input_fails(workdir, capsys):
    records = workdir["tmp"] / "empty.csv"
    records.write_text("")
    rc = run_cli("--config", workdir["config"], "stats", "--input", str(records))
    assert rc == 1


def test_check_accepts_compliant_unseen_file(workdir, capsys):
    target = workdir["tmp"] / "candidate.py"
    target.write_text(make_net_code(400))
    rc = run_cli("--config", workdir["config"], "check", str(target))
    assert rc == 0
    assert "ACCEPT unique" in capsys.readouterr().out


def test_check_rejects_reformatted_stored_file(workdir, capsys):
    with Registry(workdir["store"]) as registry:
        stored = registry.query_best("mnist", 1)[0]
    reformatted = mutate_whitespace_gentle(stored.code, random.Random(3))
    target = workdir["tmp"] / "dup.py"
    target.write_text(reformatted)
    rc = run_cli("--config", workdir["config"], "check", str(target))
    assert rc == 1
    out = capsys.readouterr().out
    assert f"REJECT duplicate of {stored.nn_id}" in out


def test_check_reports_torchvision_violation(workdir, capsys):
    target = workdir["tmp"] / "bad.py"
    target.write_text(make_net_code(401) + "import torchvision\n")
    rc = run_cli("--config", workdir["config"], "check", str(target))
    assert rc == 1
    assert "R4" in capsys.readouterr().out


def test_bench_single_file(workdir, capsys):
    target = workdir["tmp"] / "sample.py"
    target.write_text(synth_corpus(1, seed=5, target_bytes=2000)[0])
    rc = run_cli("--config", workdir["config"], "bench", str(target))
    assert rc == 0
    assert "hash median" in capsys.readouterr().out
    assert (workdir["out"] / "bench.csv").exists()
    assert (workdir["out"] / "bench.txt").exists()


def test_bench_directory(workdir, capsys):
    corpus_dir = workdir["tmp"] / "corpus"
    corpus_dir.mkdir()
    for i, code in enumerate(synth_corpus(5, seed=6, target_bytes=1000)):
        (corpus_dir / f"s{i}.py").write_text(code)
    rc = run_cli("--config", workdir["config"], "bench", str(corpus_dir))
    assert rc == 0
    assert "samples:            5" in capsys.readouterr().out


def test_bench_missing_corpus_usage_error(workdir, capsys):
    rc = run_cli("--config", workdir["config"], "bench", str(workdir["tmp"] / "nope"))
    assert rc == 2


def test_seed_command(workdir, capsys, tmp_path):
    fresh_store = tmp_path / "fresh.db"
    config = tmp_path / "fresh-config.json"
    config.write_text(json.dumps({"store_path": str(fresh_store)}))
    rc = run_cli("--config", str(config), "seed")
    assert rc == 0
    assert "inserted 12" in capsys.readouterr().out
    with Registry(fresh_store) as registry:
        assert registry.count() == 12


def test_unknown_config_key_rejected(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"store_path": "x.db", "frobnicate": 1}))
    rc = run_cli("--config", str(config), "seed")
    assert rc == 2
    assert "frobnicate" in capsys.readouterr().err


def test_console_script_entrypoint(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "nngen.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "generate" in result.stdout
    assert "bench" in result.stdout
