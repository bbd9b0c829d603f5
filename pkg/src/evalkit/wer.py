"""Per-utterance WER, length-weighted aggregates and Rank_wer."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import HypothesisSet, Utterance, ValidationError, iter_jsonl, normalize_text

SIGMA_MODES = ("moment", "sqrt")


@dataclass(frozen=True)
class Alignment:
    hits: int
    substitutions: int
    deletions: int
    insertions: int
    ops: tuple[str, ...] = ()

    @property
    def cost(self) -> int:
        return self.substitutions + self.deletions + self.insertions


@dataclass(frozen=True)
class ScoredUtterance:
    id: str
    w: float
    alpha: int
    alignment: Alignment

    def to_json(self) -> dict:
        a = self.alignment
        return {"id": self.id, "w": self.w, "alpha": self.alpha,
                "S": a.substitutions, "D": a.deletions, "I": a.insertions}

    @classmethod
    def from_json(cls, obj: dict) -> "ScoredUtterance":
        alpha = int(obj["alpha"])
        s, d, i = int(obj["S"]), int(obj["D"]), int(obj["I"])
        if alpha < 1 or min(s, d, i) < 0 or s + d > alpha:
            raise ValidationError(f"inconsistent scored row for {obj.get('id')!r}")
        al = Alignment(alpha - s - d, s, d, i)
        return cls(str(obj["id"]), (s + d + i) / alpha, alpha, al)


@dataclass(frozen=True)
class BenchmarkSummary:
    mu: float
    sigma: float
    rank: float
    n_utterances: int
    total_words: int
    sigma_mode: str = "moment"
    p: tuple[float, ...] = field(default=(), repr=False)

    @property
    def mu_percent(self) -> float:
        return 100.0 * self.mu

    def to_json(self, model_id: str) -> dict:
        return {
            "model_id": model_id,
            "mu_percent": self.mu_percent,
            "sigma": self.sigma,
            "rank_wer": self.rank,
            "sigma_mode": self.sigma_mode,
            "n": self.n_utterances,
            "total_words": self.total_words,
        }


def align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Minimum-cost word alignment with unit S/D/I costs.

    Ties in the backtrace resolve MATCH > SUB > DEL > INS, so the split
    between error types is deterministic; the total cost never depends on it.
    """
    if len(ref) == 0:
        raise ValidationError("cannot align against an empty reference")
    r, h = kernels.encode_pair(ref, hyp)
    ops, counts = kernels.align_ids(r, h)
    return Alignment(
        int(counts[kernels.MATCH]),
        int(counts[kernels.SUB]),
        int(counts[kernels.DEL]),
        int(counts[kernels.INS]),
        tuple(kernels.OP_NAMES[o] for o in ops),
    )


def score_tokens(utt_id: str, ref: Sequence[str], hyp: Sequence[str]) -> ScoredUtterance:
    al = align(ref, hyp)
    alpha = len(ref)
    return ScoredUtterance(utt_id, al.cost / alpha, alpha, al)


def score_utterance(u: Utterance, hyp: str) -> ScoredUtterance:
    return score_tokens(u.id, normalize_text(u.reference), normalize_text(hyp))


def score_set(manifest: Sequence[Utterance], hyps: HypothesisSet) -> list[ScoredUtterance]:
    return [score_utterance(u, hyps[u.id]) for u in manifest]


def summarize(scored: Sequence[ScoredUtterance], sigma_mode: str = "moment") -> BenchmarkSummary:
    """Weighted mean, weighted second central moment and Rank_wer.

    Weights are reference lengths.  ``sigma`` is the second moment itself
    unless ``sigma_mode="sqrt"``.  Sums use ``math.fsum`` so the result does
    not depend on input order or chunking.
    """
    if sigma_mode not in SIGMA_MODES:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")
    if len(scored) == 0:
        raise ValidationError("cannot summarize an empty scored set")
    alpha = [s.alpha for s in scored]
    total = sum(alpha)
    p = [a / total for a in alpha]
    mu = math.fsum(s.w * s.alpha for s in scored) / total
    moment = math.fsum(s.alpha * (s.w - mu) ** 2 for s in scored) / total
    sigma = math.sqrt(moment) if sigma_mode == "sqrt" else moment
    mu_percent = 100.0 * mu
    return BenchmarkSummary(mu, sigma, mu_percent * (1.0 + sigma), len(scored), total, sigma_mode, tuple(p))


def rank_wer(mu_percent: float, sigma: float) -> float:
    return mu_percent * (1.0 + sigma)


def classification_accuracy(predictions: Sequence, labels: Sequence) -> float:
    if len(predictions) != len(labels):
        raise ValidationError(f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels")
    if len(labels) == 0:
        raise ValidationError("no labels")
    hits = sum(1 for a, b in zip(predictions, labels) if a == b)
    return hits / len(labels)


def corpus_costs(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> np.ndarray:
    """Edit costs for many (ref, hyp) token pairs through the batch kernel."""
    vocab: dict[str, int] = {}
    refs, hyps = [], []
    for ref, hyp in pairs:
        refs.append([vocab.setdefault(t, len(vocab)) for t in ref])
        hyps.append([vocab.setdefault(t, len(vocab)) for t in hyp])
    rf, ro = kernels.pack(refs)
    hf, ho = kernels.pack(hyps)
    return kernels.batch_edit_costs(rf, ro, hf, ho)


def write_scored(path, scored: Sequence[ScoredUtterance]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scored:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def load_scored(path) -> list[ScoredUtterance]:
    rows = []
    for lineno, obj in iter_jsonl(path):
        try:
            rows.append(ScoredUtterance.from_json(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad scored row: {exc}", path, lineno) from None
    if not rows:
        raise ValidationError("no scored rows", path)
    return rows
