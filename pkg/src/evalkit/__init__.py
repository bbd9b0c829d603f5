"""Evaluation toolkit for visual speech recognition benchmarks."""
from .core import (
    AttributeSet,
    HypothesisSet,
    RepresentationTensor,
    Utterance,
    ValidationError,
    load_hypotheses,
    load_manifest,
    load_tensor,
    normalize_text,
    write_tensor,
)
from .wer import BenchmarkSummary, ScoredUtterance, align, score_utterance, summarize

__version__ = "0.1.0"

__all__ = [
    "AttributeSet",
    "BenchmarkSummary",
    "HypothesisSet",
    "RepresentationTensor",
    "ScoredUtterance",
    "Utterance",
    "ValidationError",
    "align",
    "load_hypotheses",
    "load_manifest",
    "load_tensor",
    "normalize_text",
    "score_utterance",
    "summarize",
    "write_tensor",
]
