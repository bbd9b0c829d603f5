from __future__ import annotations

import json
import struct
import warnings

import numpy as np
import pytest

from evalkit.core import (
    AttributeSet,
    RepresentationTensor,
    ValidationError,
    load_hypotheses,
    load_manifest,
    load_tensor,
    normalize_text,
    write_manifest,
    write_tensor,
)

from conftest import BAD, TOY


@pytest.mark.parametrize(
    "raw, tokens",
    [
        ("It's  fine, OK", ["IT'S", "FINE", "OK"]),
        ("hello-world", ["HELLO", "WORLD"]),
        ("don’t stop", ["DON'T", "STOP"]),
        ("  ", []),
        ("", []),
        ("'quoted' words", ["QUOTED", "WORDS"]),
        ("a_b 42", ["A", "B", "42"]),
    ],
)
def test_normalize_text(raw, tokens):
    assert normalize_text(raw) == tokens


def test_attribute_validation():
    assert AttributeSet.from_dict({"accent": "native"}).gender == "unknown"
    assert AttributeSet.from_dict(None) == AttributeSet()
    with pytest.raises(ValidationError):
        AttributeSet.from_dict({"accent": "martian"})
    with pytest.raises(ValidationError):
        AttributeSet.from_dict({"height": "tall"})


def test_manifest_round_trip(tmp_path, toy_manifest):
    assert len(toy_manifest) == 12
    assert toy_manifest[0].tokens == ["THE", "CAT", "SAT", "ON", "THE", "MAT"]
    out = tmp_path / "m.jsonl"
    write_manifest(out, toy_manifest)
    assert load_manifest(out) == toy_manifest


def test_manifest_duplicate_reports_second_line():
    with pytest.raises(ValidationError) as exc:
        load_manifest(BAD / "manifest_duplicate.jsonl")
    assert exc.value.line == 4
    assert "u01" in str(exc.value)


def test_manifest_broken_json_line():
    with pytest.raises(ValidationError) as exc:
        load_manifest(BAD / "manifest_broken.jsonl")
    assert exc.value.line == 2


def test_manifest_rejects_empty_reference(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text(json.dumps({"id": "a", "ref": " ,, "}) + "\n")
    with pytest.raises(ValidationError, match="empty reference"):
        load_manifest(p)


def test_manifest_empty_file(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text("\n")
    with pytest.raises(ValidationError, match="empty"):
        load_manifest(p)


def test_manifest_frame_mismatch_warns(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text(json.dumps({"id": "a", "ref": "x", "duration_s": 2.0, "num_frames": 80}) + "\n")
    with pytest.warns(UserWarning, match="frames"):
        load_manifest(p)


def test_manifest_frame_within_slack_is_quiet(tmp_path):
    p = tmp_path / "m.jsonl"
    p.write_text(json.dumps({"id": "a", "ref": "x", "duration_s": 2.0, "num_frames": 52}) + "\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        load_manifest(p)


def test_hypotheses_order_and_model_id(toy_manifest):
    hyps = load_hypotheses(TOY / "model_b.jsonl", toy_manifest)
    assert hyps.model_id == "model_b"
    assert list(hyps.entries) == [u.id for u in toy_manifest]
    assert hyps["u06"] == ""


def test_hypotheses_unknown_id(toy_manifest):
    with pytest.raises(ValidationError, match="zzz"):
        load_hypotheses(BAD / "hyp_unknown_id.jsonl", toy_manifest)


def test_hypotheses_missing(tmp_path, toy_manifest):
    p = tmp_path / "h.jsonl"
    p.write_text(json.dumps({"id": "u01", "hyp": "the cat"}) + "\n")
    with pytest.raises(ValidationError, match="11 manifest id"):
        load_hypotheses(p, toy_manifest)
    hyps = load_hypotheses(p, toy_manifest, allow_missing=True, model_id="m")
    assert len(hyps) == 12 and hyps["u02"] == "" and hyps.model_id == "m"


def test_hypotheses_duplicate(tmp_path, toy_manifest):
    p = tmp_path / "h.jsonl"
    p.write_text((json.dumps({"id": "u01", "hyp": "x"}) + "\n") * 2)
    with pytest.raises(ValidationError, match="duplicate"):
        load_hypotheses(p, toy_manifest, allow_missing=True)


@pytest.mark.parametrize("dtype", ["float32", "float64"])
def test_tensor_round_trip(tmp_path, dtype):
    data = np.random.default_rng(0).standard_normal((3, 4, 5)).astype(dtype)
    write_tensor(tmp_path / "t.vtf", data, dtype)
    back = load_tensor(tmp_path / "t.vtf")
    assert back.data.dtype == np.dtype(dtype)
    np.testing.assert_array_equal(back.data, data)
    assert back.benchmark_tag == "t"


def test_tensor_header_layout(tmp_path):
    write_tensor(tmp_path / "t.vtf", np.zeros((2, 3, 4)), "float32")
    raw = (tmp_path / "t.vtf").read_bytes()
    assert raw[:4] == b"VTF1"
    assert struct.unpack_from("<BB3I", raw, 4) == (0, 3, 2, 3, 4)
    assert len(raw) == 18 + 2 * 3 * 4 * 4


def test_tensor_matrix_stored_as_single_slice(tmp_path):
    write_tensor(tmp_path / "f.vtf", np.eye(3))
    assert load_tensor(tmp_path / "f.vtf").shape == (1, 3, 3)


def test_tensor_truncated():
    with pytest.raises(ValidationError, match="payload"):
        load_tensor(BAD / "tensor_truncated.vtf")


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda b: b"XXXX" + b[4:], "magic"),
        (lambda b: b[:4] + bytes([7]) + b[5:], "dtype tag"),
        (lambda b: b[:5] + bytes([2]) + b[6:], "ndim"),
        (lambda b: b[:10], "header"),
    ],
)
def test_tensor_header_errors(tmp_path, mutate, message):
    write_tensor(tmp_path / "ok.vtf", np.ones((2, 2, 2)))
    bad = tmp_path / "bad.vtf"
    bad.write_bytes(mutate((tmp_path / "ok.vtf").read_bytes()))
    with pytest.raises(ValidationError, match=message):
        load_tensor(bad)


def test_tensor_non_finite(tmp_path):
    data = np.ones((2, 2, 2))
    data[1, 1, 1] = np.nan
    write_tensor(tmp_path / "n.vtf", data)
    with pytest.raises(ValidationError, match="non-finite"):
        load_tensor(tmp_path / "n.vtf")
    with pytest.raises(ValidationError):
        RepresentationTensor(data)


def test_tensor_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="cannot open"):
        load_tensor(tmp_path / "nope.vtf")
