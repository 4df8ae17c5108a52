"""Hash-indexed persistent store of generated architectures.

Records are keyed by the whitespace-normalized MD5 digest of their code
(``nn_id``), so the store itself enforces deduplication: inserting code
that normalizes to an existing record is rejected atomically.  Backed by
an embedded SQLite file; the primary key gives the B-tree index the
duplicate lookup relies on.
"""

from __future__ import annotations

import json
import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import dedup
from .errors import IngestionError, IntegrityError, NotFoundError, StorageError

__all__ = [
    "VARIANTS",
    "variant_for",
    "variant_n",
    "InsertResult",
    "ModelRecord",
    "Registry",
]

VARIANTS = tuple(f"alt-nn{n}" for n in range(1, 7))

_HEX32 = re.compile(r"^[0-9a-f]{32}$")

# Export field order; one JSON object per line, keys in this order.
_EXPORT_FIELDS = (
    "nn_id",
    "variant",
    "dataset",
    "code",
    "accuracy",
    "reference_id",
    "supporting_ids",
    "created_at",
)


def variant_for(n: int) -> str:
    """Variant name for a supporting-example count, e.g. 3 -> 'alt-nn3'."""
    if not 1 <= n <= 6:
        raise ValueError(f"n must be in 1..6, got {n}")
    return f"alt-nn{n}"


def variant_n(variant: str) -> int:
    """Supporting-example count carried by a variant name."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return int(variant[-1])


def _check_nn_id(nn_id: str) -> str:
    if not isinstance(nn_id, str) or not _HEX32.match(nn_id):
        raise ValueError(f"nn_id must be 32 lowercase hex characters, got {nn_id!r}")
    return nn_id


class InsertResult(Enum):
    INSERTED = "inserted"
    REJECTED_DUPLICATE = "rejected-duplicate"


@dataclass
class ModelRecord:
    """One generated architecture and its training outcome.

    ``accuracy`` is a fraction in [0, 1] and absent until the model has
    been trained.  ``reference_id``/``supporting_ids`` record the prompt
    lineage: which stored models the generating prompt was built from.
    """

    nn_id: str
    variant: str
    dataset: str
    code: str
    accuracy: float | None = None
    reference_id: str | None = None
    supporting_ids: list[str] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        _check_nn_id(self.nn_id)
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if self.reference_id is not None and self.reference_id in self.supporting_ids:
            raise ValueError("reference_id must not appear among supporting_ids")

    @classmethod
    def from_code(
        cls,
        code: str,
        variant: str,
        dataset: str,
        *,
        accuracy: float | None = None,
        reference_id: str | None = None,
        supporting_ids: list[str] | None = None,
        created_at: float | None = None,
    ) -> "ModelRecord":
        """Build a record whose nn_id is derived from *code*."""
        return cls(
            nn_id=dedup.fingerprint(code).digest,
            variant=variant,
            dataset=dataset,
            code=code,
            accuracy=accuracy,
            reference_id=reference_id,
            supporting_ids=list(supporting_ids or []),
            created_at=time.time() if created_at is None else created_at,
        )


_SCHEMA = """
CREATE TABLE IF NOT EXISTS models (
    nn_id TEXT PRIMARY KEY,
    variant TEXT NOT NULL,
    dataset TEXT NOT NULL,
    code TEXT NOT NULL,
    accuracy REAL,
    reference_id TEXT,
    supporting_ids TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_models_dataset_accuracy
    ON models(dataset, accuracy DESC);
"""


class Registry:
    """SQLite-backed model store; safe for concurrent use within a process.

    All statements run under one lock, so check-and-insert is atomic and
    concurrent inserts of the same code resolve to exactly one INSERTED.
    """

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.row_factory = sqlite3.Row
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StorageError(f"cannot open model store at {self.path}: {exc}") from exc
        self._lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "Registry":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # -- core operations ----------------------------------------------------

    def insert(self, record: ModelRecord) -> InsertResult:
        """Persist *record* unless its nn_id already exists.

        Raises IntegrityError when nn_id does not match the code's
        fingerprint (the id is re-derivable, so a mismatch is a caller bug).
        """
        if not record.code:
            raise ValueError("record.code must be non-empty")
        derived = dedup.fingerprint(record.code).digest
        if derived != record.nn_id:
            raise IntegrityError(
                f"nn_id {record.nn_id} does not match code fingerprint {derived}"
            )
        row = (
            record.nn_id,
            record.variant,
            record.dataset,
            record.code,
            record.accuracy,
            record.reference_id,
            json.dumps(record.supporting_ids),
            record.created_at,
        )
        try:
            with self._lock:
                cur = self._conn.execute(
                    "INSERT OR IGNORE INTO models"
                    " (nn_id, variant, dataset, code, accuracy, reference_id,"
                    "  supporting_ids, created_at)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    row,
                )
                self._conn.commit()
        except sqlite3.Error as exc:
            raise StorageError(f"insert failed: {exc}") from exc
        return InsertResult.INSERTED if cur.rowcount == 1 else InsertResult.REJECTED_DUPLICATE

    def contains(self, nn_id: str) -> bool:
        """True iff a record with this key is persisted (indexed lookup)."""
        _check_nn_id(nn_id)
        with self._lock:
            cur = self._conn.execute("SELECT 1 FROM models WHERE nn_id = ?", (nn_id,))
            return cur.fetchone() is not None

    def get(self, nn_id: str) -> ModelRecord | None:
        _check_nn_id(nn_id)
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM models WHERE nn_id = ?", (nn_id,)
            ).fetchone()
        return self._to_record(row) if row else None

    def query_best(self, dataset: str, limit: int = 50) -> list[ModelRecord]:
        """Up to *limit* trained records for *dataset*, best accuracy first.

        Ties break on earlier created_at, then nn_id, so repeated calls on
        an unchanged store return identical sequences.
        """
        if limit < 1:
            raise ValueError(f"limit must be >= 1, got {limit}")
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM models"
                " WHERE dataset = ? AND accuracy IS NOT NULL"
                " ORDER BY accuracy DESC, created_at ASC, nn_id ASC LIMIT ?",
                (dataset, limit),
            ).fetchall()
        return [self._to_record(r) for r in rows]

    def update_accuracy(self, nn_id: str, accuracy: float) -> None:
        """Set a stored record's accuracy; all other fields are immutable."""
        _check_nn_id(nn_id)
        if not 0.0 <= accuracy <= 1.0:
            raise ValueError(f"accuracy must be in [0, 1], got {accuracy}")
        with self._lock:
            cur = self._conn.execute(
                "UPDATE models SET accuracy = ? WHERE nn_id = ?", (accuracy, nn_id)
            )
            self._conn.commit()
        if cur.rowcount == 0:
            raise NotFoundError(f"no record with nn_id {nn_id}")

    def count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM models").fetchone()[0]

    # -- line-delimited export/import ---------------------------------------

    def export_jsonl(self, path: str | Path) -> int:
        """Write one JSON object per record, fields in declaration order."""
        written = 0
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM models ORDER BY created_at ASC, nn_id ASC"
            ).fetchall()
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                rec = self._to_record(row)
                obj = {name: getattr(rec, name) for name in _EXPORT_FIELDS}
                fh.write(json.dumps(obj) + "\n")
                written += 1
        return written

    def import_jsonl(self, path: str | Path) -> int:
        """Insert records from an export file; returns how many were new."""
        inserted = 0
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    record = ModelRecord(**obj)
                except (json.JSONDecodeError, TypeError, ValueError) as exc:
                    raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
                if self.insert(record) is InsertResult.INSERTED:
                    inserted += 1
        return inserted

    # -- helpers -------------------------------------------------------------

    @staticmethod
    def _to_record(row: sqlite3.Row) -> ModelRecord:
        return ModelRecord(
            nn_id=row["nn_id"],
            variant=row["variant"],
            dataset=row["dataset"],
            code=row["code"],
            accuracy=row["accuracy"],
            reference_id=row["reference_id"],
            supporting_ids=json.loads(row["supporting_ids"]),
            created_at=row["created_at"],
        )
