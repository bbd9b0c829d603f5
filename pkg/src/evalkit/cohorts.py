"""Slicing scored results into folds and summarising each fold per model."""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import ATTRIBUTE_VALUES, UNKNOWN, Utterance, ValidationError
from .wer import BenchmarkSummary, ScoredUtterance, summarize

DEFAULT_SEED = 42


@dataclass(frozen=True)
class Fold:
    label: str
    ids: tuple[str, ...]
    per_model: dict[str, BenchmarkSummary]

    @property
    def empty(self) -> bool:
        return not self.ids

    @property
    def ids_sha256(self) -> str:
        return hashlib.sha256("\n".join(self.ids).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CohortReport:
    kind: str
    folds: tuple[Fold, ...]
    unknown_count: int = 0
    seed: int | None = None
    hard_fraction: float | None = None
    n_total: int = 0
    params: dict = field(default_factory=dict)

    def fold(self, label: str) -> Fold:
        for f in self.folds:
            if f.label == label:
                return f
        raise KeyError(label)

    def to_json(self, emit_ids: bool = False) -> dict:
        folds = []
        for f in self.folds:
            entry = {"label": f.label, "n": len(f.ids), "ids_sha256": f.ids_sha256}
            if f.empty:
                entry["empty"] = True
            entry["per_model"] = [
                {"model_id": mid, "mu_percent": s.mu_percent, "sigma": s.sigma, "rank_wer": s.rank}
                for mid, s in f.per_model.items()
            ]
            if emit_ids:
                entry["ids"] = list(f.ids)
            folds.append(entry)
        out = {"kind": self.kind, "folds": folds, "unknown_count": self.unknown_count, "seed": self.seed}
        if self.hard_fraction is not None:
            out["hard_fraction"] = self.hard_fraction
        if self.params:
            out["params"] = self.params
        return out

    def csv_rows(self):
        yield ["fold", "model_id", "n", "mu_percent", "sigma", "rank_wer"]
        for f in self.folds:
            for mid, s in f.per_model.items():
                yield [f.label, mid, len(f.ids), repr(s.mu_percent), repr(s.sigma), repr(s.rank)]


def _index(scored_by_model: Mapping[str, Sequence[ScoredUtterance]]) -> tuple[dict, list[str]]:
    if not scored_by_model:
        raise ValidationError("no scored models")
    indexed = {}
    universe = None
    for mid in sorted(scored_by_model):
        rows = {s.id: s for s in scored_by_model[mid]}
        if len(rows) != len(scored_by_model[mid]):
            raise ValidationError(f"model {mid!r}: duplicate utterance ids in scores")
        if universe is None:
            universe = set(rows)
        elif set(rows) != universe:
            diff = sorted(universe.symmetric_difference(rows))[:5]
            raise ValidationError(f"model {mid!r} was scored on a different id set (e.g. {diff})")
        indexed[mid] = rows
    return indexed, sorted(universe)


def _make_fold(label, ids, indexed, sigma_mode) -> Fold:
    ids = tuple(sorted(ids))
    per_model = {}
    if ids:
        for mid, rows in indexed.items():
            per_model[mid] = summarize([rows[i] for i in ids], sigma_mode)
    return Fold(label, ids, per_model)


def _percent(s: ScoredUtterance) -> Fraction:
    # exact: utterance WER is a ratio of integers
    return Fraction(100 * s.alignment.cost, s.alpha)


def threshold_folds(scored_by_model, low: float = 30.0, high: float = 50.0, sigma_mode="moment") -> CohortReport:
    """Utterances where every model is strictly below ``low`` (top) or above ``high`` (bottom) percent WER."""
    lo, hi = Fraction(str(low)), Fraction(str(high))
    if not lo < hi:
        raise ValidationError(f"threshold low={low} must be below high={high}")
    indexed, universe = _index(scored_by_model)
    top = [i for i in universe if all(_percent(rows[i]) < lo for rows in indexed.values())]
    bottom = [i for i in universe if all(_percent(rows[i]) > hi for rows in indexed.values())]
    folds = (
        _make_fold("top-k", top, indexed, sigma_mode),
        _make_fold("bottom-k", bottom, indexed, sigma_mode),
    )
    return CohortReport("threshold", folds, 0, None, len(bottom) / len(universe), len(universe),
                        {"low": low, "high": high})


def _manifest_map(manifest, universe) -> dict[str, Utterance]:
    by_id = {u.id: u for u in manifest}
    missing = [i for i in universe if i not in by_id]
    if missing:
        raise ValidationError(f"{len(missing)} scored id(s) not in manifest, e.g. {missing[:5]}")
    return by_id


def _edge_label(x: float) -> str:
    return f"{x:g}"


def duration_folds(scored_by_model, manifest, edges=(0, 2, 4, 6, 8, 16), sigma_mode="moment") -> CohortReport:
    """Half-open duration buckets ``[e_j, e_j+1)`` in seconds.

    Utterances without a positive duration or outside the outer edges are
    counted in ``unknown_count``.
    """
    edges = [float(e) for e in edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"bucket edges must be strictly increasing, got {edges}")
    indexed, universe = _index(scored_by_model)
    by_id = _manifest_map(manifest, universe)
    buckets: list[list[str]] = [[] for _ in range(len(edges) - 1)]
    unknown = 0
    for uid in universe:
        d = by_id[uid].duration_s
        j = int(np.searchsorted(edges, d, side="right")) - 1
        if d <= 0 or j < 0 or j >= len(buckets):
            unknown += 1
            continue
        buckets[j].append(uid)
    folds = tuple(
        _make_fold(f"[{_edge_label(a)},{_edge_label(b)})", ids, indexed, sigma_mode)
        for a, b, ids in zip(edges, edges[1:], buckets)
    )
    return CohortReport("duration", folds, unknown, None, None, len(universe), {"edges": edges})


def attribute_folds(scored_by_model, manifest, attribute: str, sigma_mode="moment") -> CohortReport:
    if attribute not in ATTRIBUTE_VALUES:
        raise ValidationError(f"unknown attribute {attribute!r}; expected one of {sorted(ATTRIBUTE_VALUES)}")
    indexed, universe = _index(scored_by_model)
    by_id = _manifest_map(manifest, universe)
    groups: dict[str, list[str]] = {v: [] for v in ATTRIBUTE_VALUES[attribute] if v != UNKNOWN}
    unknown = 0
    for uid in universe:
        value = getattr(by_id[uid].attributes, attribute)
        if value == UNKNOWN:
            unknown += 1
        else:
            groups[value].append(uid)
    folds = tuple(_make_fold(v, ids, indexed, sigma_mode) for v, ids in groups.items() if ids)
    if not folds:
        warnings.warn(f"attribute {attribute!r} is unknown for every utterance; no folds produced", stacklevel=2)
    return CohortReport("attribute", folds, unknown, None, None, len(universe), {"attribute": attribute})


def progressive_folds(scored_by_model, seed_fold, n_steps: int = 5, seed: int = DEFAULT_SEED,
                      sigma_mode="moment") -> CohortReport:
    """Fold 1 is ``seed_fold``; each later fold adds an equal share of the rest.

    The remaining ids are sorted, then shuffled with ``seed``, so membership
    depends only on the id sets and the seed.
    """
    indexed, universe = _index(scored_by_model)
    seed_ids = set(seed_fold)
    if not seed_ids:
        raise ValidationError("seed fold is empty")
    outside = sorted(seed_ids - set(universe))
    if outside:
        raise ValidationError(f"seed fold is not a subset of the scored ids, e.g. {outside[:5]}")
    if n_steps < 2:
        raise ValidationError("progressive folds need n_steps >= 2")
    remaining = sorted(set(universe) - seed_ids)
    order = np.random.default_rng(seed).permutation(len(remaining))
    members = sorted(seed_ids)
    folds = [_make_fold("fold 1", members, indexed, sigma_mode)]
    for step, chunk in enumerate(np.array_split(order, n_steps - 1), start=2):
        members = members + [remaining[k] for k in chunk]
        folds.append(_make_fold(f"fold {step}", members, indexed, sigma_mode))
    return CohortReport("progressive", tuple(folds), 0, seed, None, len(universe), {"n_steps": n_steps})


def recombined_mu(report: CohortReport, model_id: str) -> float:
    """Word-weighted mean of fold means; equals the overall mean for partitions."""
    parts = [f.per_model[model_id] for f in report.folds if model_id in f.per_model]
    return math.fsum(s.total_words * s.mu for s in parts) / sum(s.total_words for s in parts)
