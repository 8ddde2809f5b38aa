"""Encrypted single-file store for the 17-table hearing test schema.

The whole payload (all tables as canonical JSON) is encrypted with
AES-256-GCM under a caller-supplied 32-byte key. Every write re-encrypts
and atomically replaces the file, so a crash leaves either the previous or
the new state, never a torn one. A wrong key fails GCM authentication and
is indistinguishable from file corruption by design.

Writes are serialized by an internal lock; reads of immutable snapshots may
proceed concurrently.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import model
from .errors import (
    AlreadyExistsError,
    AuthenticationFailure,
    NotFoundError,
    RecordInvalidError,
    SchemaVersionError,
    StoreStateError,
    OtokitError,
)
from .model import (
    CATEGORY_SLUGS,
    EARS,
    EAR_MERGED_SLUGS,
    SLUG_TO_TABLE,
    TABLE_TO_SLUG,
    TABLES,
    ExamAggregate,
    ExamKey,
    record_from_dict,
    record_slug,
    validate,
)

SCHEMA_VERSION = 1

_MAGIC = b"OTKS"
_FORMAT_VERSION = 1
_NONCE_LEN = 12


@dataclass(frozen=True)
class SearchCriteria:
    """Conjunctive exam search over patient rows; at least one field set."""

    patient_id: str | None = None
    name_substring: str | None = None
    date_from: str | None = None  # inclusive ISO dates
    date_to: str | None = None

    def is_empty(self) -> bool:
        return (
            self.patient_id is None
            and self.name_substring is None
            and self.date_from is None
            and self.date_to is None
        )

    def matches(self, patient: model.PatientRecord) -> bool:
        key = patient.key
        if self.patient_id is not None and key.patient_id != self.patient_id:
            return False
        if (
            self.name_substring is not None
            and self.name_substring.lower() not in patient.name.lower()
        ):
            return False
        if self.date_from is not None and key.exam_date < self.date_from:
            return False
        if self.date_to is not None and key.exam_date > self.date_to:
            return False
        return True


@dataclass(frozen=True)
class SearchResult:
    key: ExamKey
    name: str
    diagnosis: str

    def to_dict(self) -> dict:
        return {
            "patient_id": self.key.patient_id,
            "exam_date": self.key.exam_date,
            "name": self.name,
            "diagnosis": self.diagnosis,
        }


def _encrypt(key: bytes, payload: dict) -> bytes:
    header = _MAGIC + bytes([_FORMAT_VERSION])
    nonce = os.urandom(_NONCE_LEN)
    plaintext = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, header)
    return header + nonce + ciphertext


def _decrypt(key: bytes, blob: bytes) -> dict:
    header = blob[: len(_MAGIC) + 1]
    if header[: len(_MAGIC)] != _MAGIC:
        raise AuthenticationFailure("not a recognizable store file, or corrupted")
    if header[len(_MAGIC)] > _FORMAT_VERSION:
        raise SchemaVersionError(
            f"store file format {header[len(_MAGIC)]} is newer than supported"
        )
    nonce = blob[len(header) : len(header) + _NONCE_LEN]
    ciphertext = blob[len(header) + _NONCE_LEN :]
    try:
        plaintext = AESGCM(key).decrypt(nonce, ciphertext, header)
    except InvalidTag:
        raise AuthenticationFailure("wrong key, or store file corrupted") from None
    return json.loads(plaintext)


class Store:
    """Handle over one encrypted store file.

    Use :meth:`create` for a fresh file and :meth:`open` for an existing one.
    All record operations require the handle to be open.
    """

    def __init__(self, path: str, key: bytes, tables: dict):
        self._path = path
        self._key = key
        self._tables = tables  # table name -> {patient_id: {exam_date: value dict}}
        self._lock = threading.RLock()
        self._open = True

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def create(cls, path: str, key: bytes) -> "Store":
        if len(key) != 32:
            raise ValueError("store key must be 32 bytes")
        if os.path.exists(path):
            raise AlreadyExistsError(f"store file already exists: {path}")
        store = cls(path, key, {name: {} for name in TABLES})
        store._flush()
        return store

    @classmethod
    def open(cls, path: str, key: bytes) -> "Store":
        if len(key) != 32:
            raise ValueError("store key must be 32 bytes")
        if not os.path.exists(path):
            raise NotFoundError(f"store file not found: {path}")
        with open(path, "rb") as fp:
            payload = _decrypt(key, fp.read())
        if payload.get("schema_version", 0) > SCHEMA_VERSION:
            raise SchemaVersionError(
                f"store schema {payload.get('schema_version')} is newer than supported"
            )
        tables = {name: payload["tables"].get(name, {}) for name in TABLES}
        return cls(path, key, tables)

    @property
    def path(self) -> str:
        return self._path

    @property
    def is_open(self) -> bool:
        return self._open

    @property
    def schema_version(self) -> int:
        return SCHEMA_VERSION

    def close(self) -> None:
        with self._lock:
            self._open = False

    def _require_open(self) -> None:
        if not self._open:
            raise StoreStateError("store handle is closed")

    def _flush(self) -> None:
        payload = {"schema_version": SCHEMA_VERSION, "tables": self._tables}
        blob = _encrypt(self._key, payload)
        tmp = self._path + ".tmp"
        with open(tmp, "wb") as fp:
            fp.write(blob)
            fp.flush()
            os.fsync(fp.fileno())
        os.replace(tmp, self._path)

    # -- record operations ----------------------------------------------------

    def upsert(self, record) -> None:
        """Validate and store a record, replacing any prior value for its key."""
        violations = validate(record)
        if violations:
            raise RecordInvalidError(violations)
        slug = record_slug(record)
        table = SLUG_TO_TABLE[slug]
        key = record.key
        with self._lock:
            self._require_open()
            rows = self._tables[table].setdefault(key.patient_id, {})
            if slug in EAR_MERGED_SLUGS:
                row = rows.get(key.exam_date) or {"right": None, "left": None}
                row = dict(row)
                row[record.ear] = record.to_dict()
                rows[key.exam_date] = row
            else:
                rows[key.exam_date] = record.to_dict()
            self._flush()

    def _row(self, table: str, key: ExamKey):
        return self._tables[table].get(key.patient_id, {}).get(key.exam_date)

    def get_exam(self, key: ExamKey) -> ExamAggregate:
        """Aggregate of every stored row for the exam; missing rows stay None."""
        with self._lock:
            self._require_open()
            slots = {}
            for slug, table in zip(CATEGORY_SLUGS, TABLES):
                row = self._row(table, key)
                if row is None:
                    slots[slug] = None
                elif slug in EAR_MERGED_SLUGS:
                    slots[slug] = {
                        ear: record_from_dict(slug, row[ear]) if row.get(ear) else None
                        for ear in EARS
                    }
                else:
                    slots[slug] = record_from_dict(slug, row)
            if all(v is None for v in slots.values()):
                raise NotFoundError(
                    f"no records for patient {key.patient_id!r} on {key.exam_date}"
                )
            return ExamAggregate(key=key, **slots)

    def delete_exam(self, key: ExamKey) -> int:
        """Remove the exam's rows from all 17 tables; returns rows removed."""
        with self._lock:
            self._require_open()
            removed = 0
            for table in TABLES:
                rows = self._tables[table].get(key.patient_id)
                if rows and key.exam_date in rows:
                    del rows[key.exam_date]
                    removed += 1
                    if not rows:
                        del self._tables[table][key.patient_id]
            if removed:
                self._flush()
            return removed

    def search(self, criteria: SearchCriteria) -> list[SearchResult]:
        """Exams matching all set criteria, newest first then by patient id."""
        if criteria.is_empty():
            raise RecordInvalidError(["search criteria are empty"])
        with self._lock:
            self._require_open()
            results = []
            for rows in self._tables["PatientInfo"].values():
                for value in rows.values():
                    patient = model.PatientRecord.from_dict(value)
                    if criteria.matches(patient):
                        results.append(
                            SearchResult(patient.key, patient.name, patient.diagnosis)
                        )
        results.sort(key=lambda r: (r.key.exam_date, _Desc(r.key.patient_id)), reverse=True)
        return results

    # -- bulk transfer ----------------------------------------------------------

    def export_jsonl(self) -> str:
        """All rows as JSON lines of (table, patient_id, exam_date, record)."""
        with self._lock:
            self._require_open()
            lines = []
            for table in TABLES:
                for patient_id in sorted(self._tables[table]):
                    for exam_date in sorted(self._tables[table][patient_id]):
                        lines.append(
                            json.dumps(
                                {
                                    "table": table,
                                    "patient_id": patient_id,
                                    "exam_date": exam_date,
                                    "record": self._tables[table][patient_id][exam_date],
                                },
                                sort_keys=True,
                                separators=(",", ":"),
                            )
                        )
        return "\n".join(lines) + ("\n" if lines else "")

    def import_jsonl(self, text: str, on_collision: str = "skip") -> dict:
        """Merge exported rows into this store.

        ``on_collision`` is ``skip`` (keep existing rows) or ``overwrite``.
        Returns counts plus the list of colliding (table, key) triples.
        """
        if on_collision not in ("skip", "overwrite"):
            raise ValueError(f"on_collision must be skip or overwrite, got {on_collision!r}")
        imported = 0
        collisions = []
        with self._lock:
            self._require_open()
            for line in text.splitlines():
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                table = entry.get("table")
                if table not in TABLE_TO_SLUG or not (
                    entry.get("patient_id") and entry.get("exam_date")
                ):
                    raise RecordInvalidError(
                        [f"malformed import line for table {table!r}"]
                    )
                rows = self._tables[table].setdefault(entry["patient_id"], {})
                exists = entry["exam_date"] in rows
                if exists:
                    collisions.append(
                        {
                            "table": table,
                            "patient_id": entry["patient_id"],
                            "exam_date": entry["exam_date"],
                        }
                    )
                    if on_collision == "skip":
                        continue
                rows[entry["exam_date"]] = entry["record"]
                imported += 1
            self._flush()
        return {"imported": imported, "collisions": collisions}


class _Desc:
    """Inverts comparison so one sort key can descend while others ascend."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __lt__(self, other):
        return other.value < self.value

    def __eq__(self, other):
        return self.value == other.value
