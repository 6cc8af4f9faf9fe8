"""Dataset manifests and the evaluation-only sidecar.

A manifest is UTF-8 JSON-lines, one record per line, with exactly the
``ManifestRecord`` fields. Loading a manifest produces a *training view*
whose unlabeled records carry no label and no record carries origin or
generator tags; those fields are moved into an ``EvaluationSidecar`` that
logs every read, so tests can prove training code never peeked.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestError

SPLITS = ("labeled", "unlabeled", "test")
ORIGINS = ("real", "synthetic")

_RECORD_FIELDS = ("id", "path", "split", "label", "origin", "generator")


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    path: str
    split: str
    label: int | None = None
    origin: str | None = None
    generator: str | None = None

    def to_json(self) -> str:
        obj = {"id": self.id, "path": self.path, "split": self.split}
        if self.label is not None:
            obj["label"] = self.label
        if self.origin is not None:
            obj["origin"] = self.origin
        if self.generator is not None:
            obj["generator"] = self.generator
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class SidecarEntry:
    origin: str | None = None
    label: int | None = None
    generator: str | None = None


class EvaluationSidecar:
    """Hidden ground truth (origin, true unlabeled labels) with a read audit.

    Every accessor requires a ``reader`` tag and records it; ``readers()``
    exposes the set of tags that ever read hidden fields.
    """

    def __init__(self, entries: dict[str, SidecarEntry] | None = None):
        self._entries: dict[str, SidecarEntry] = dict(entries or {})
        self._access_log: list[tuple[str, str, str]] = []  # (reader, field, id)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._entries

    def ids(self):
        return self._entries.keys()

    def add(self, record_id: str, entry: SidecarEntry) -> None:
        if record_id in self._entries:
            existing = self._entries[record_id]
            merged = SidecarEntry(
                origin=entry.origin if entry.origin is not None else existing.origin,
                label=entry.label if entry.label is not None else existing.label,
                generator=entry.generator if entry.generator is not None else existing.generator,
            )
            self._entries[record_id] = merged
        else:
            self._entries[record_id] = entry

    def _entry(self, record_id: str) -> SidecarEntry:
        try:
            return self._entries[record_id]
        except KeyError:
            raise ManifestError(f"sidecar has no entry for id {record_id!r}") from None

    def origin_of(self, record_id: str, reader: str) -> str | None:
        self._access_log.append((reader, "origin", record_id))
        return self._entry(record_id).origin

    def true_label_of(self, record_id: str, reader: str) -> int | None:
        self._access_log.append((reader, "label", record_id))
        return self._entry(record_id).label

    def generator_of(self, record_id: str, reader: str) -> str | None:
        self._access_log.append((reader, "generator", record_id))
        return self._entry(record_id).generator

    def merge(self, other: "EvaluationSidecar") -> None:
        for record_id, entry in other._entries.items():
            self.add(record_id, entry)

    def readers(self) -> set[str]:
        return {reader for reader, _, _ in self._access_log}

    def access_log(self) -> list[tuple[str, str, str]]:
        return list(self._access_log)

    def write(self, path) -> None:
        lines = []
        for record_id in sorted(self._entries):
            e = self._entries[record_id]
            obj = {"id": record_id}
            if e.origin is not None:
                obj["origin"] = e.origin
            if e.label is not None:
                obj["label"] = e.label
            if e.generator is not None:
                obj["generator"] = e.generator
            lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path) -> "EvaluationSidecar":
        sidecar = cls()
        for lineno, obj in _iter_jsonl(path):
            if "id" not in obj:
                raise ManifestError(f"{path}:{lineno}: sidecar entry missing 'id'")
            unknown = set(obj) - {"id", "origin", "label", "generator"}
            if unknown:
                raise ManifestError(f"{path}:{lineno}: unknown sidecar field {sorted(unknown)[0]!r}")
            sidecar.add(obj["id"], SidecarEntry(
                origin=obj.get("origin"), label=obj.get("label"), generator=obj.get("generator")))
        return sidecar


def _iter_jsonl(path):
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _validate_raw(obj: dict, where: str) -> ManifestRecord:
    unknown = set(obj) - set(_RECORD_FIELDS)
    if unknown:
        raise ManifestError(f"{where}: unknown field {sorted(unknown)[0]!r}")
    for required in ("id", "path", "split"):
        if required not in obj:
            raise ManifestError(f"{where}: missing required field {required!r}")
    if obj["split"] not in SPLITS:
        raise ManifestError(f"{where}: unknown split {obj['split']!r}, expected one of {SPLITS}")
    label = obj.get("label")
    if label is not None and (isinstance(label, bool) or not isinstance(label, int) or label < 0):
        raise ManifestError(f"{where}: label must be a nonnegative class index, got {label!r}")
    origin = obj.get("origin")
    if origin is not None and origin not in ORIGINS:
        raise ManifestError(f"{where}: unknown origin {origin!r}, expected one of {ORIGINS}")
    record = ManifestRecord(
        id=obj["id"], path=obj["path"], split=obj["split"],
        label=label, origin=origin, generator=obj.get("generator"),
    )
    if record.split == "labeled":
        if record.label is None:
            raise ManifestError(f"{where}: labeled record {record.id!r} is missing a label")
        if record.origin is not None and record.origin != "real":
            raise ManifestError(f"{where}: labeled record {record.id!r} must have origin 'real'")
    if record.split == "test" and record.label is None:
        raise ManifestError(f"{where}: test record {record.id!r} is missing a label")
    return record


def load_manifest(path) -> tuple[list[ManifestRecord], EvaluationSidecar]:
    """Load and validate a manifest, splitting hidden fields into a sidecar.

    The returned records are the training view: unlabeled labels, origins,
    and generator tags are stripped and kept only in the sidecar.
    """
    records = []
    sidecar = EvaluationSidecar()
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        record = _validate_raw(obj, f"{path}:{lineno}")
        if record.id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate id {record.id!r}")
        seen.add(record.id)
        hidden_label = record.label if record.split == "unlabeled" else None
        if record.origin is not None or hidden_label is not None or record.generator is not None:
            sidecar.add(record.id, SidecarEntry(
                origin=record.origin, label=hidden_label, generator=record.generator))
        records.append(ManifestRecord(
            id=record.id, path=record.path, split=record.split,
            label=None if record.split == "unlabeled" else record.label,
            origin=None, generator=None,
        ))
    return records, sidecar


def write_manifest(records, path) -> None:
    """Write records as JSON-lines with deterministic bytes."""
    text = "\n".join(r.to_json() for r in records)
    Path(path).write_text(text + "\n" if text else "", encoding="utf-8")
