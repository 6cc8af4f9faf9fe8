import json

import pytest

from rsmatch.errors import ManifestError
from rsmatch.manifest import (EvaluationSidecar, ManifestRecord, SidecarEntry,
                              load_manifest, write_manifest)


def _write_lines(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def _valid_rows():
    return [
        {"id": "a", "path": "images/a.png", "split": "labeled", "label": 0, "origin": "real"},
        {"id": "b", "path": "images/b.png", "split": "unlabeled"},
        {"id": "c", "path": "images/c.png", "split": "unlabeled", "origin": "synthetic",
         "label": 1, "generator": "proc-a"},
        {"id": "d", "path": "images/d.png", "split": "test", "label": 1},
    ]


def test_load_strips_hidden_fields_into_sidecar(tmp_path):
    path = tmp_path / "m.jsonl"
    _write_lines(path, _valid_rows())
    records, sidecar = load_manifest(path)
    by_id = {r.id: r for r in records}
    assert by_id["c"].origin is None
    assert by_id["c"].label is None
    assert by_id["c"].generator is None
    assert by_id["a"].label == 0  # labeled records keep labels
    assert by_id["d"].label == 1  # test records keep labels
    assert sidecar.origin_of("c", reader="test") == "synthetic"
    assert sidecar.true_label_of("c", reader="test") == 1
    assert sidecar.generator_of("c", reader="test") == "proc-a"


def test_duplicate_id_rejected(tmp_path):
    rows = _valid_rows()
    rows.append(dict(rows[0]))
    path = tmp_path / "m.jsonl"
    _write_lines(path, rows)
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert "a" in str(err.value)


@pytest.mark.parametrize("mutate,needle", [
    (lambda r: r.update(split="val"), "split"),
    (lambda r: r.update(extra=1), "extra"),
    (lambda r: r.pop("path"), "path"),
    (lambda r: r.update(label=-3), "label"),
    (lambda r: r.update(origin="fake"), "origin"),
])
def test_bad_records_rejected_with_line_numbers(tmp_path, mutate, needle):
    rows = _valid_rows()
    mutate(rows[2])
    path = tmp_path / "m.jsonl"
    _write_lines(path, rows)
    with pytest.raises(ManifestError) as err:
        load_manifest(path)
    assert needle in str(err.value)
    assert ":3" in str(err.value)  # 1-based line of the mutated row


def test_labeled_record_requires_label(tmp_path):
    rows = [{"id": "a", "path": "p.png", "split": "labeled"}]
    path = tmp_path / "m.jsonl"
    _write_lines(path, rows)
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_test_record_requires_label(tmp_path):
    rows = [{"id": "a", "path": "p.png", "split": "test"}]
    path = tmp_path / "m.jsonl"
    _write_lines(path, rows)
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_write_manifest_bytes_deterministic(tmp_path):
    records = [
        ManifestRecord(id="x", path="images/x.png", split="labeled", label=2, origin="real"),
        ManifestRecord(id="y", path="images/y.png", split="unlabeled"),
    ]
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_manifest(records, p1)
    write_manifest(records, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "m.jsonl"
    _write_lines(path, _valid_rows())
    records, sidecar = load_manifest(path)
    out = tmp_path / "copy.jsonl"
    write_manifest(records, out)
    again, _ = load_manifest(out)
    assert [r.id for r in again] == [r.id for r in records]


def test_sidecar_audit_log_tracks_readers():
    sc = EvaluationSidecar()
    sc.add("u1", SidecarEntry(origin="synthetic", label=3, generator="g"))
    assert sc.readers() == set()
    sc.origin_of("u1", reader="eval.detector")
    sc.true_label_of("u1", reader="eval.embeddings")
    assert sc.readers() == {"eval.detector", "eval.embeddings"}
    assert ("eval.detector", "origin", "u1") in sc.access_log()


def test_sidecar_unknown_id_errors():
    sc = EvaluationSidecar()
    with pytest.raises(ManifestError):
        sc.origin_of("nope", reader="t")


def test_sidecar_file_roundtrip(tmp_path):
    sc = EvaluationSidecar()
    sc.add("u1", SidecarEntry(origin="real", label=0))
    sc.add("u2", SidecarEntry(origin="synthetic", label=2, generator="proc-b"))
    path = tmp_path / "side.jsonl"
    sc.write(path)
    loaded = EvaluationSidecar.read(path)
    assert loaded.origin_of("u2", reader="t") == "synthetic"
    assert loaded.true_label_of("u1", reader="t") == 0
    assert len(loaded) == 2


def test_sidecar_merge_combines_fields():
    a = EvaluationSidecar()
    a.add("u1", SidecarEntry(origin="synthetic"))
    b = EvaluationSidecar()
    b.add("u1", SidecarEntry(label=4))
    a.merge(b)
    assert a.origin_of("u1", reader="t") == "synthetic"
    assert a.true_label_of("u1", reader="t") == 4
