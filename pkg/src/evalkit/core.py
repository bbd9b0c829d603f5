"""Domain types, transcript normalization and file ingestion."""
from __future__ import annotations

import json
import re
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FPS = 25

ATTRIBUTE_VALUES: dict[str, tuple[str, ...]] = {
    "accent": ("native", "non_native", "unknown"),
    "gender": ("male", "female", "unknown"),
    "age": ("young", "adult", "old", "unknown"),
    "ethnicity": ("white", "black", "other", "unknown"),
    "pose": ("frontal", "extreme", "unknown"),
}
UNKNOWN = "unknown"


class ValidationError(ValueError):
    """Malformed or inconsistent input. The CLI maps it to exit code 2."""

    def __init__(self, message, path=None, line=None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where += ": "
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# text


_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})


def normalize_text(raw: str) -> list[str]:
    """Uppercase, keep intra-word apostrophes, treat other punctuation as space.

    >>> normalize_text("It's  fine, OK")
    ["IT'S", 'FINE', 'OK']
    """
    if not raw:
        return []
    return _TOKEN_RE.findall(raw.translate(_APOSTROPHES).upper())


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class AttributeSet:
    accent: str = UNKNOWN
    gender: str = UNKNOWN
    age: str = UNKNOWN
    ethnicity: str = UNKNOWN
    pose: str = UNKNOWN

    def __post_init__(self):
        for name, allowed in ATTRIBUTE_VALUES.items():
            value = getattr(self, name)
            if value not in allowed:
                raise ValidationError(f"attribute {name}={value!r} not in {allowed}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "AttributeSet":
        d = d or {}
        unknown_keys = set(d) - set(ATTRIBUTE_VALUES)
        if unknown_keys:
            raise ValidationError(f"unknown attribute field(s): {sorted(unknown_keys)}")
        return cls(**{k: (UNKNOWN if v is None else str(v)) for k, v in d.items()})

    def to_dict(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in ATTRIBUTE_VALUES}


@dataclass(frozen=True)
class Utterance:
    id: str
    reference: str
    duration_s: float = 0.0
    num_frames: int = 0
    attributes: AttributeSet = field(default_factory=AttributeSet)
    source_video: str | None = None

    @property
    def tokens(self) -> list[str]:
        return normalize_text(self.reference)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "ref": self.reference,
            "duration_s": self.duration_s,
            "num_frames": self.num_frames,
            "attrs": self.attributes.to_dict(),
            "source_video": self.source_video,
        }


@dataclass(frozen=True)
class HypothesisSet:
    model_id: str
    entries: dict[str, str]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, utt_id: str) -> str:
        return self.entries[utt_id]


@dataclass(frozen=True)
class RepresentationTensor:
    data: np.ndarray
    benchmark_tag: str = ""

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValidationError(f"representation tensor must be 3-way, got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise ValidationError(f"empty tensor dimension in shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("tensor contains non-finite values")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


# ---------------------------------------------------------------------------
# JSONL helpers


def iter_jsonl(path):
    path = Path(path)
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid JSON ({exc.msg})", path, lineno) from exc
            if not isinstance(obj, dict):
                raise ValidationError("expected a JSON object", path, lineno)
            yield lineno, obj


def _utterance_from_json(obj: dict, path, lineno: int) -> Utterance:
    uid = obj.get("id")
    if not isinstance(uid, str) or not uid:
        raise ValidationError("missing or empty 'id'", path, lineno)
    ref = obj.get("ref")
    if not isinstance(ref, str):
        raise ValidationError(f"utterance {uid!r}: 'ref' must be a string", path, lineno)
    if not normalize_text(ref):
        raise ValidationError(f"utterance {uid!r}: empty reference", path, lineno)
    try:
        duration = float(obj.get("duration_s") or 0.0)
        frames = int(obj.get("num_frames") or 0)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"utterance {uid!r}: bad duration/frames ({exc})", path, lineno) from exc
    if duration < 0 or frames < 0 or not np.isfinite(duration):
        raise ValidationError(f"utterance {uid!r}: negative or non-finite duration/frames", path, lineno)
    try:
        attrs = AttributeSet.from_dict(obj.get("attrs"))
    except ValidationError as exc:
        raise ValidationError(f"utterance {uid!r}: {exc}", path, lineno) from None
    if duration > 0 and frames > 0 and abs(frames - round(duration * FPS)) > 2:
        warnings.warn(
            f"{path}:{lineno}: utterance {uid!r} has {frames} frames but {duration}s "
            f"implies {round(duration * FPS)} at {FPS} fps",
            stacklevel=3,
        )
    source = obj.get("source_video")
    return Utterance(uid, ref, duration, frames, attrs, None if source is None else str(source))


def load_manifest(path) -> list[Utterance]:
    utts: list[Utterance] = []
    seen: dict[str, int] = {}
    for lineno, obj in iter_jsonl(path):
        u = _utterance_from_json(obj, path, lineno)
        if u.id in seen:
            raise ValidationError(f"duplicate id {u.id!r} (first seen on line {seen[u.id]})", path, lineno)
        seen[u.id] = lineno
        utts.append(u)
    if not utts:
        raise ValidationError("manifest is empty", path)
    return utts


def write_manifest(path, utterances) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for u in utterances:
            fh.write(json.dumps(u.to_json(), ensure_ascii=False) + "\n")


def load_hypotheses(path, manifest, *, allow_missing=False, model_id=None) -> HypothesisSet:
    """Read ``{"id", "hyp"}`` lines and check coverage against the manifest.

    Ids absent from the file are an error unless ``allow_missing``, in which
    case they are scored as empty hypotheses.
    """
    known = {u.id for u in manifest}
    entries: dict[str, str] = {}
    for lineno, obj in iter_jsonl(path):
        uid = obj.get("id")
        hyp = obj.get("hyp", "")
        if not isinstance(uid, str) or not uid:
            raise ValidationError("missing or empty 'id'", path, lineno)
        if hyp is None:
            hyp = ""
        if not isinstance(hyp, str):
            raise ValidationError(f"hypothesis for {uid!r} must be a string", path, lineno)
        if uid not in known:
            raise ValidationError(f"unknown id {uid!r} (not in manifest)", path, lineno)
        if uid in entries:
            raise ValidationError(f"duplicate hypothesis for id {uid!r}", path, lineno)
        entries[uid] = hyp
    missing = [u.id for u in manifest if u.id not in entries]
    if missing:
        if not allow_missing:
            shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
            raise ValidationError(f"{len(missing)} manifest id(s) without hypothesis: {shown}", path)
        for uid in missing:
            entries[uid] = ""
    # manifest order, so downstream output does not depend on file order
    ordered = {u.id: entries[u.id] for u in manifest}
    return HypothesisSet(model_id or Path(path).stem, ordered)


# ---------------------------------------------------------------------------
# VTF1 tensor container

VTF_MAGIC = b"VTF1"
_VTF_HEADER = struct.Struct("<4sBB3I")
_VTF_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def load_tensor(path, benchmark_tag: str | None = None) -> RepresentationTensor:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot open: {exc.strerror}", path) from exc
    if len(raw) < _VTF_HEADER.size:
        raise ValidationError("truncated VTF1 header", path)
    magic, tag, ndim, b, t, d = _VTF_HEADER.unpack_from(raw)
    if magic != VTF_MAGIC:
        raise ValidationError(f"bad magic {magic!r}, expected {VTF_MAGIC!r}", path)
    if tag not in _VTF_DTYPES:
        raise ValidationError(f"unknown dtype tag {tag}", path)
    if ndim != 3:
        raise ValidationError(f"ndim must be 3, got {ndim}", path)
    dtype = _VTF_DTYPES[tag]
    payload = raw[_VTF_HEADER.size:]
    expected = b * t * d * dtype.itemsize
    if len(payload) != expected:
        raise ValidationError(
            f"payload is {len(payload)} bytes, dims ({b},{t},{d}) need {expected}", path
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(b, t, d).astype(dtype.newbyteorder("="))
    if not np.all(np.isfinite(data)):
        raise ValidationError("tensor contains non-finite values", path)
    return RepresentationTensor(data, benchmark_tag if benchmark_tag is not None else Path(path).stem)


def write_tensor(path, data, dtype="float64") -> None:
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[np.newaxis]
    if data.ndim != 3:
        raise ValidationError(f"VTF1 stores 3-way arrays, got shape {data.shape}")
    tag = {"float32": 0, "float64": 1}[np.dtype(dtype).name]
    header = _VTF_HEADER.pack(VTF_MAGIC, tag, 3, *data.shape)
    body = np.ascontiguousarray(data, dtype=_VTF_DTYPES[tag]).tobytes()
    Path(path).write_bytes(header + body)
