"""Report assembly: deterministic JSON payloads plus markdown and CSV renderings."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import os
from pathlib import Path

from . import __version__
from .cohorts import DEFAULT_SEED, CohortReport


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def payload_digest(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def envelope(payload: dict, inputs) -> dict:
    """Wrap a payload with version, input digests and a timestamp.

    Only ``generated_at`` varies between identical runs.
    """
    return {
        "tool_version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "payload": payload,
        "payload_sha256": payload_digest(payload),
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("EVALKIT_SEED")
    return int(env) if env else DEFAULT_SEED


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n", encoding="utf-8")


def write_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


# ---------------------------------------------------------------------------
# text tables


def leaderboard_rows(summaries: list[dict]) -> list[dict]:
    """Ascending by Rank_wer; ties by mean WER, then model id."""
    return sorted(summaries, key=lambda s: (s["rank_wer"], s["mu_percent"], s["model_id"]))


def format_table(header, rows, align=None) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows else len(str(h)) for i, h in enumerate(header)]
    align = align or ["<"] + [">"] * (len(header) - 1)
    def line(cells):
        return "  ".join(f"{c:{a}{w}}" for c, a, w in zip(cells, align, widths))
    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in rows]
    return "\n".join(out)


def format_leaderboard(summaries: list[dict]) -> str:
    rows = [
        [s["model_id"], f"{s['mu_percent']:.1f}", f"{s['sigma']:.4f}", f"{s['rank_wer']:.1f}", s["n"]]
        for s in leaderboard_rows(summaries)
    ]
    return format_table(["model", "WER", "sigma", "Rank_wer", "n"], rows)


def markdown_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in r) + " |" for r in rows]
    return "\n".join(lines)


def cohort_markdown(report: CohortReport) -> str:
    models = sorted({m for f in report.folds for m in f.per_model})
    rows = []
    for f in report.folds:
        cells = [f.label, len(f.ids)]
        for m in models:
            s = f.per_model.get(m)
            cells.append("empty" if s is None else f"{s.mu_percent:.1f}")
        rows.append(cells)
    text = markdown_table(["fold", "n"] + models, rows)
    extra = [f"unknown/excluded: {report.unknown_count}"]
    if report.hard_fraction is not None:
        extra.append(f"hard fraction: {report.hard_fraction:.3f}")
    if report.seed is not None:
        extra.append(f"seed: {report.seed}")
    return text + "\n\n" + "; ".join(extra)


def render_markdown(payload: dict, cohort_reports: dict[str, CohortReport]) -> str:
    parts = [f"# Evaluation report (evalkit {__version__})"]
    if "leaderboard" in payload:
        parts.append("## Leaderboard")
        rows = [
            [s["model_id"], f"{s['mu_percent']:.1f}", f"{s['sigma']:.4f}", f"{s['rank_wer']:.1f}", s["n"], s["total_words"]]
            for s in payload["leaderboard"]
        ]
        parts.append(markdown_table(["model", "WER", "sigma (" + payload["sigma_mode"] + ")", "Rank_wer", "n", "words"], rows))
    for name, rep in cohort_reports.items():
        parts.append(f"## Cohorts: {name}")
        parts.append(cohort_markdown(rep))
    if "gain_fit" in payload:
        g = payload["gain_fit"]
        parts.append("## Cross-benchmark gain")
        parts.append(f"wer_b = {g['m']:.3f} * wer_a + {g['b']:.2f}  (mode {g['mode']}, {g['n']} models)")
        parts.append(markdown_table(["model", "residual"], [[r["model_id"], f"{r['residual']:+.2f}"] for r in g["residuals"]]))
    if "compute" in payload:
        parts.append("## Training compute")
        rows = []
        for b in payload["compute"]:
            phases = ", ".join(f"{p} {v['flops'] / 1e18:.2f}" for p, v in b["phases"].items())
            rows.append([b["name"], phases, f"{b['total_exaflops']:.1f}"])
        parts.append(markdown_table(["recipe", "phases (EF)", "total (EF)"], rows))
    if "tensors" in payload:
        parts.append("## Representation tensors")
        rows = [[t["name"], "x".join(map(str, t["shape"])), t["rank"], t["sweeps"], f"{t['fit_residual']:.3e}",
                 f"{t['dominant_eigenvalue']:.4g}"] for t in payload["tensors"]]
        parts.append(markdown_table(["tensor", "shape", "rank", "sweeps", "fit residual", "dominant eigenvalue"], rows))
    return "\n\n".join(parts) + "\n"
