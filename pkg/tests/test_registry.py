import json
import threading

import pytest

from helpers_synth import make_net_code, mutate_whitespace
from nngen import dedup
from nngen.errors import IngestionError, IntegrityError, NotFoundError
from nngen.registry import (
    InsertResult,
    ModelRecord,
    Registry,
    VARIANTS,
    variant_for,
    variant_n,
)
import random


def record_for(code, dataset="cifar-10", accuracy=None, created_at=None, variant="alt-nn1"):
    return ModelRecord.from_code(
        code, variant, dataset, accuracy=accuracy, created_at=created_at
    )


def test_variant_helpers():
    assert VARIANTS == ("alt-nn1", "alt-nn2", "alt-nn3", "alt-nn4", "alt-nn5", "alt-nn6")
    assert variant_for(3) == "alt-nn3"
    assert variant_n("alt-nn6") == 6
    with pytest.raises(ValueError):
        variant_for(7)
    with pytest.raises(ValueError):
        variant_n("alt-nn0")


def test_insert_then_contains(registry):
    rec = record_for("def f():\n    return 1\n")
    assert registry.insert(rec) is InsertResult.INSERTED
    assert registry.contains(rec.nn_id)


def test_insert_identical_code_rejected(registry):
    code = make_net_code(0)
    assert registry.insert(record_for(code)) is InsertResult.INSERTED
    assert registry.insert(record_for(code)) is InsertResult.REJECTED_DUPLICATE
    assert registry.count() == 1


def test_insert_whitespace_variant_rejected(registry):
    code = make_net_code(1)
    registry.insert(record_for(code))
    variant = mutate_whitespace(code, random.Random(99))
    assert variant != code
    assert registry.insert(record_for(variant)) is InsertResult.REJECTED_DUPLICATE
    assert registry.count() == 1


def test_insert_nn_id_mismatch_is_integrity_error(registry):
    rec = record_for("def f():\n    return 1\n")
    bad = ModelRecord(
        nn_id=dedup.fingerprint("something else").digest,
        variant=rec.variant,
        dataset=rec.dataset,
        code=rec.code,
    )
    with pytest.raises(IntegrityError):
        registry.insert(bad)


def test_insert_empty_code_rejected(registry):
    rec = ModelRecord(
        nn_id=dedup.fingerprint("").digest, variant="alt-nn1", dataset="x", code=""
    )
    with pytest.raises(ValueError):
        registry.insert(rec)


def test_record_validation():
    with pytest.raises(ValueError):
        ModelRecord(nn_id="xyz", variant="alt-nn1", dataset="d", code="c")
    with pytest.raises(ValueError):
        record_for("code", accuracy=1.5)
    with pytest.raises(ValueError):
        record_for("code", variant="alt-nn9")
    ref = dedup.fingerprint("other").digest
    with pytest.raises(ValueError):
        ModelRecord(
            nn_id=dedup.fingerprint("c").digest,
            variant="alt-nn1",
            dataset="d",
            code="c",
            reference_id=ref,
            supporting_ids=[ref],
        )


def test_contains_validates_digest(registry):
    with pytest.raises(ValueError):
        registry.contains("not-a-digest")
    with pytest.raises(ValueError):
        registry.contains("A" * 32)  # uppercase
    assert not registry.contains("0" * 32)


def test_query_best_sorting_and_limit(registry):
    for i, acc in enumerate([0.3, 0.9, 0.5]):
        registry.insert(record_for(make_net_code(i), accuracy=acc, created_at=float(i)))
    best = registry.query_best("cifar-10", 2)
    assert [r.accuracy for r in best] == [0.9, 0.5]


def test_query_best_unknown_dataset_empty(registry):
    assert registry.query_best("unknown-ds", 5) == []


def test_query_best_tie_breaks_on_created_at_then_id(registry):
    a = record_for(make_net_code(10), accuracy=0.9, created_at=100.0)
    b = record_for(make_net_code(11), accuracy=0.9, created_at=50.0)
    c = record_for(make_net_code(12), accuracy=0.9, created_at=100.0)
    for rec in (a, b, c):
        registry.insert(rec)
    ordered = registry.query_best("cifar-10", 10)
    assert ordered[0].nn_id == b.nn_id
    assert [r.nn_id for r in ordered[1:]] == sorted([a.nn_id, c.nn_id])


def test_query_best_excludes_untrained(registry):
    registry.insert(record_for(make_net_code(20), accuracy=None))
    registry.insert(record_for(make_net_code(21), accuracy=0.4))
    assert len(registry.query_best("cifar-10", 10)) == 1


def test_query_best_deterministic(registry):
    for i in range(6):
        registry.insert(record_for(make_net_code(30 + i), accuracy=0.1 * i + 0.05))
    first = [r.nn_id for r in registry.query_best("cifar-10", 10)]
    second = [r.nn_id for r in registry.query_best("cifar-10", 10)]
    assert first == second


def test_query_best_limit_validation(registry):
    with pytest.raises(ValueError):
        registry.query_best("cifar-10", 0)


def test_update_accuracy(registry):
    rec = record_for(make_net_code(40))
    registry.insert(rec)
    registry.update_accuracy(rec.nn_id, 0.971)
    stored = registry.get(rec.nn_id)
    assert stored.accuracy == 0.971
    assert stored.code == rec.code  # other fields untouched


def test_update_accuracy_unknown_id(registry):
    with pytest.raises(NotFoundError):
        registry.update_accuracy("0" * 32, 0.5)


def test_update_accuracy_out_of_range(registry):
    rec = record_for(make_net_code(41))
    registry.insert(rec)
    with pytest.raises(ValueError):
        registry.update_accuracy(rec.nn_id, 1.2)


def test_concurrent_inserts_of_same_code_once(registry):
    code = make_net_code(50)
    results = []
    barrier = threading.Barrier(8)

    def worker():
        barrier.wait()
        results.append(registry.insert(record_for(code)))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results.count(InsertResult.INSERTED) == 1
    assert results.count(InsertResult.REJECTED_DUPLICATE) == 7
    assert registry.count() == 1


def test_key_integrity_invariant(registry):
    for i in range(5):
        registry.insert(record_for(make_net_code(60 + i), accuracy=0.2))
    for rec in registry.query_best("cifar-10", 10):
        assert dedup.fingerprint(rec.code).digest == rec.nn_id


def test_export_import_roundtrip(tmp_path, registry):
    recs = [
        record_for(make_net_code(70), accuracy=0.5, created_at=1.0),
        record_for(make_net_code(71), accuracy=None, created_at=2.0),
    ]
    recs[1].supporting_ids = [recs[0].nn_id]
    for rec in recs:
        registry.insert(rec)
    out = tmp_path / "export.jsonl"
    assert registry.export_jsonl(out) == 2

    # field order is part of the format
    first = out.read_text().splitlines()[0]
    assert list(json.loads(first).keys()) == [
        "nn_id", "variant", "dataset", "code", "accuracy",
        "reference_id", "supporting_ids", "created_at",
    ]

    with Registry(":memory:") as other:
        assert other.import_jsonl(out) == 2
        assert other.import_jsonl(out) == 0  # idempotent
        for rec in recs:
            loaded = other.get(rec.nn_id)
            assert loaded == rec


def test_import_reports_bad_line_number(tmp_path):
    out = tmp_path / "bad.jsonl"
    out.write_text('{"nn_id": "zz"}\n', encoding="utf-8")
    with Registry(":memory:") as reg:
        with pytest.raises(IngestionError, match="line 1"):
            reg.import_jsonl(out)


def test_file_backed_persistence(tmp_path):
    path = tmp_path / "store.db"
    rec = record_for(make_net_code(80), accuracy=0.3)
    with Registry(path) as reg:
        reg.insert(rec)
    with Registry(path) as reg:
        assert reg.contains(rec.nn_id)
        assert reg.get(rec.nn_id).accuracy == 0.3
