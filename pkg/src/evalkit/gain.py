"""Cross-benchmark linear gain: wer_b ~ m * wer_a + b over a model population."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .core import ValidationError

FIT_MODES = ("abs_deviation", "signed_ols")
_MODE_ALIASES = {"abs": "abs_deviation", "ols": "signed_ols"}


@dataclass(frozen=True)
class WerPair:
    model_id: str
    wer_a: float
    wer_b: float
    group: str = ""

    def __post_init__(self):
        if not (self.wer_a >= 0 and self.wer_b >= 0):
            raise ValidationError(f"{self.model_id}: WER values must be >= 0")


@dataclass(frozen=True)
class LinearGain:
    m: float
    b: float
    mu_a: float
    mu_b: float
    sigma_num: float
    gamma_den: float
    mode: str
    n_models: int

    def predict(self, wer_a: float) -> float:
        return self.m * wer_a + self.b


def _mode(mode: str) -> str:
    mode = _MODE_ALIASES.get(mode, mode)
    if mode not in FIT_MODES:
        raise ValueError(f"unknown fit mode {mode!r}; expected one of {FIT_MODES}")
    return mode


def fit(pairs, mode: str = "abs_deviation") -> LinearGain:
    """Slope from deviation products over squared deviations, intercept via the means.

    ``abs_deviation`` takes absolute deviations from the population means;
    ``signed_ols`` keeps their signs, which is ordinary least squares.
    """
    mode = _mode(mode)
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValidationError(f"need at least 2 WER pairs, got {len(pairs)}")
    n = len(pairs)
    mu_a = math.fsum(p.wer_a for p in pairs) / n
    mu_b = math.fsum(p.wer_b for p in pairs) / n
    da = [p.wer_a - mu_a for p in pairs]
    db = [p.wer_b - mu_b for p in pairs]
    if mode == "abs_deviation":
        da = [abs(x) for x in da]
        db = [abs(x) for x in db]
    num = math.fsum(x * y for x, y in zip(da, db))
    den = math.fsum(x * x for x in da)
    if den == 0.0:
        raise ValidationError("degenerate population: all wer_a values are equal")
    m = num / den
    return LinearGain(m, mu_b - m * mu_a, mu_a, mu_b, num, den, mode, n)


def predict(g: LinearGain, wer_a: float) -> float:
    return g.predict(wer_a)


def residuals(g: LinearGain, pairs) -> list[tuple[str, float]]:
    return [(p.model_id, p.wer_b - g.predict(p.wer_a)) for p in pairs]


def load_pairs(path, groups=None) -> list[WerPair]:
    """Read ``model_id,wer_a,wer_b[,group]`` CSV; optionally keep only some groups."""
    path = Path(path)
    pairs = []
    seen = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"model_id", "wer_a", "wer_b"} - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"missing CSV column(s): {sorted(missing)}", path)
        for lineno, row in enumerate(reader, start=2):
            try:
                pair = WerPair(row["model_id"], float(row["wer_a"]), float(row["wer_b"]), row.get("group") or "")
            except (TypeError, ValueError) as exc:
                raise ValidationError(str(exc), path, lineno) from None
            if pair.model_id in seen:
                raise ValidationError(f"duplicate model_id {pair.model_id!r}", path, lineno)
            seen.add(pair.model_id)
            if groups is None or any(pair.group.startswith(g) for g in groups):
                pairs.append(pair)
    return pairs


def fit_report(g: LinearGain, pairs) -> dict:
    return {
        "m": g.m,
        "b": g.b,
        "mode": g.mode,
        "n": g.n_models,
        "mu_a": g.mu_a,
        "mu_b": g.mu_b,
        "rows": [p.model_id for p in pairs],
        "residuals": [{"model_id": mid, "residual": r} for mid, r in residuals(g, pairs)],
    }
