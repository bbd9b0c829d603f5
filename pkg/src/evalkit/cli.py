"""``evalkit`` command line.

Exit codes: 0 success, 1 internal error, 2 input validation error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, cohorts, compute, gain, tensor
from .core import ATTRIBUTE_VALUES, ValidationError, load_hypotheses, load_manifest, load_tensor, write_tensor
from .report import (
    envelope,
    format_leaderboard,
    leaderboard_rows,
    render_markdown,
    resolve_seed,
    write_csv,
    write_json,
)
from .wer import SIGMA_MODES, load_scored, score_set, summarize, write_scored

BUILTIN_PAIRS = Path(__file__).parent / "data" / "lrs3_wildvsr_pairs.csv"
SCORED_SUFFIX = ".scored.jsonl"
SUMMARY_SUFFIX = ".summary.json"


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# score / rank


def _score_models(manifest, hyp_paths, model_ids, allow_missing, sigma_mode):
    if model_ids and len(model_ids) != len(hyp_paths):
        raise ValidationError(f"{len(model_ids)} --model-id values for {len(hyp_paths)} --hyp files")
    results = {}
    for k, path in enumerate(hyp_paths):
        mid = model_ids[k] if model_ids else None
        hyps = load_hypotheses(path, manifest, allow_missing=allow_missing, model_id=mid)
        if hyps.model_id in results:
            raise ValidationError(f"duplicate model id {hyps.model_id!r}; use --model-id")
        scored = score_set(manifest, hyps)
        results[hyps.model_id] = (scored, summarize(scored, sigma_mode))
    return results


def cmd_score(args) -> int:
    manifest = load_manifest(args.manifest)
    results = _score_models(manifest, args.hyp, args.model_id, args.allow_missing, args.sigma_mode)
    out = _outdir(args.out)
    summaries = []
    for mid, (scored, summary) in results.items():
        write_scored(out / f"{mid}{SCORED_SUFFIX}", scored)
        js = summary.to_json(mid)
        write_json(out / f"{mid}{SUMMARY_SUFFIX}", js)
        summaries.append(js)
    print(format_leaderboard(summaries))
    return 0


def _load_summaries(paths) -> list[dict]:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob(f"*{SUMMARY_SUFFIX}")) if p.is_dir() else [p])
    out = []
    for f in files:
        try:
            obj = json.loads(f.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot read summary: {exc}", f) from None
        missing = {"model_id", "mu_percent", "sigma", "rank_wer"} - set(obj)
        if missing:
            raise ValidationError(f"summary lacks {sorted(missing)}", f)
        obj.setdefault("n", 0)
        out.append(obj)
    return out


def cmd_rank(args) -> int:
    summaries = _load_summaries(args.summaries)
    if len(summaries) < 2:
        raise ValidationError(f"ranking needs at least 2 summaries, got {len(summaries)}")
    table = format_leaderboard(summaries)
    print(table)
    if args.out:
        out = _outdir(args.out)
        write_json(out / "leaderboard.json", leaderboard_rows(summaries))
        (out / "leaderboard.txt").write_text(table + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# fit / compute


def _fit_payload(pairs_path, groups, mode) -> dict:
    if groups is None and Path(pairs_path) == BUILTIN_PAIRS:
        groups = ["vsr"]
    pairs = gain.load_pairs(pairs_path, groups)
    g = gain.fit(pairs, mode)
    payload = gain.fit_report(g, pairs)
    payload["groups"] = groups
    return payload


def cmd_fit(args) -> int:
    groups = [g for g in args.groups.split(",") if g] if args.groups else None
    payload = _fit_payload(args.pairs, groups, args.mode)
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def _budgets(recipe_paths):
    paths = recipe_paths or compute.builtin_recipe_paths()
    budgets = []
    for p in paths:
        for model, stages in compute.load_recipes(p):
            budgets.append(compute.estimate_recipe(model, stages))
    return budgets


def cmd_compute(args) -> int:
    budgets = _budgets(args.recipe)
    ledger = [b.to_json() for b in budgets]
    table = compute.format_table(budgets)
    print(json.dumps(ledger, indent=2) if args.json else table)
    if args.out:
        out = _outdir(args.out)
        write_json(out / "compute.json", ledger)
        (out / "compute.txt").write_text(table + "\n", encoding="utf-8")
    return 0


# ---------------------------------------------------------------------------
# tucker


def analyse_tensor(path, rank, axis, method, tol, max_iters, max_sweeps):
    rep = load_tensor(path)
    norm = tensor.power_iteration_normalize(rep.data, tol=tol, max_iters=max_iters, axis=axis, method=method)
    model = tensor.tucker(norm.data, rank, max_sweeps=max_sweeps, tol=tol)
    modes = tensor.dominant_mode_over_time(model, norm.data)
    info = {
        "name": rep.benchmark_tag,
        "shape": list(rep.shape),
        "rank": model.rank,
        "sweeps": model.sweeps,
        "fit_residual": model.fit_residual,
        "dominant_eigenvalue": norm.dominant_eigenvalue,
        "power_iterations": norm.iterations,
        "power_converged": norm.converged,
        "normalization": method,
        "mode_axis": axis,
    }
    return model, modes, info


def _modes_csv_rows(modes: np.ndarray):
    yield ["time"] + [f"mode_{k}" for k in range(modes.shape[1])]
    for t, row in enumerate(modes):
        yield [t] + [repr(float(v)) for v in row]


def _write_tucker_outputs(out: Path, name: str, model, modes, info) -> None:
    write_tensor(out / f"{name}.core.vtf", model.core)
    for k, f in enumerate(model.factors, start=1):
        write_tensor(out / f"{name}.factor{k}.vtf", f)
    write_csv(out / f"{name}.modes.csv", _modes_csv_rows(modes))
    write_json(out / f"{name}.tucker.json", info)


def cmd_tucker(args) -> int:
    out = _outdir(args.out)
    axis = tensor.AXIS_NAMES[args.mode_axis]
    for path in args.tensor:
        model, modes, info = analyse_tensor(path, args.rank, axis, args.normalize, args.tol,
                                            args.max_iters, args.max_sweeps)
        _write_tucker_outputs(out, info["name"], model, modes, info)
        print(f"{info['name']}: shape {info['shape']} rank {info['rank']} sweeps {info['sweeps']} "
              f"fit_residual {info['fit_residual']:.3e} dominant_eigenvalue {info['dominant_eigenvalue']:.6g}")
    return 0


# ---------------------------------------------------------------------------
# cohorts


def _load_scored_models(paths) -> dict:
    files = []
    for p in map(Path, paths):
        files.extend(sorted(p.glob(f"*{SCORED_SUFFIX}")) if p.is_dir() else [p])
    if not files:
        raise ValidationError(f"no *{SCORED_SUFFIX} files under {list(paths)}")
    scored = {}
    for f in files:
        mid = f.name[: -len(SCORED_SUFFIX)] if f.name.endswith(SCORED_SUFFIX) else f.stem
        scored[mid] = load_scored(f)
    return scored


def build_cohort(kind, scored, manifest, args, seed):
    if kind in ("duration", "attribute") and manifest is None:
        raise ValidationError(f"--kind {kind} needs --manifest")
    if kind == "threshold":
        return cohorts.threshold_folds(scored, args.low, args.high, args.sigma_mode)
    if kind == "duration":
        return cohorts.duration_folds(scored, manifest, args.edges, args.sigma_mode)
    if kind == "attribute":
        return cohorts.attribute_folds(scored, manifest, args.attribute, args.sigma_mode)
    if args.seed_ids:
        seed_fold = [line.strip() for line in Path(args.seed_ids).read_text(encoding="utf-8").splitlines() if line.strip()]
    else:
        seed_fold = cohorts.threshold_folds(scored, args.low, args.high).fold("bottom-k").ids
    return cohorts.progressive_folds(scored, seed_fold, args.steps, seed, args.sigma_mode)


def cmd_cohorts(args) -> int:
    scored = _load_scored_models(args.scored)
    manifest = load_manifest(args.manifest) if args.manifest else None
    rep = build_cohort(args.kind, scored, manifest, args, resolve_seed(args.seed))
    out = _outdir(args.out)
    stem = f"cohorts_{args.kind}" + (f"_{args.attribute}" if args.kind == "attribute" else "")
    write_json(out / f"{stem}.json", rep.to_json(emit_ids=args.emit_ids))
    write_csv(out / f"{stem}.csv", rep.csv_rows())
    print(json.dumps(rep.to_json(), indent=2))
    return 0


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    out = _outdir(args.out)
    payload: dict = {}
    inputs: list = []
    cohort_reports = {}
    seed = resolve_seed(args.seed)

    if args.manifest and args.hyp:
        manifest = load_manifest(args.manifest)
        inputs += [args.manifest, *args.hyp]
        results = _score_models(manifest, args.hyp, args.model_id, args.allow_missing, args.sigma_mode)
        summaries = [s.to_json(mid) for mid, (_, s) in results.items()]
        payload["sigma_mode"] = args.sigma_mode
        payload["scores"] = {mid: [r.to_json() for r in scored] for mid, (scored, _) in results.items()}
        payload["summaries"] = summaries
        payload["leaderboard"] = leaderboard_rows(summaries)
        scored = {mid: scored for mid, (scored, _) in results.items()}

        cohort_reports["threshold"] = cohorts.threshold_folds(scored, args.low, args.high, args.sigma_mode)
        cohort_reports["duration"] = cohorts.duration_folds(scored, manifest, args.edges, args.sigma_mode)
        for attr in ATTRIBUTE_VALUES:
            if any(getattr(u.attributes, attr) != "unknown" for u in manifest):
                cohort_reports[f"attribute:{attr}"] = cohorts.attribute_folds(scored, manifest, attr, args.sigma_mode)
        bottom = cohort_reports["threshold"].fold("bottom-k").ids
        if bottom:
            cohort_reports["progressive"] = cohorts.progressive_folds(scored, bottom, args.steps, seed, args.sigma_mode)
        payload["cohorts"] = {k: r.to_json() for k, r in cohort_reports.items()}
        write_csv(out / "duration_folds.csv", cohort_reports["duration"].csv_rows())
        if "progressive" in cohort_reports:
            write_csv(out / "progressive_folds.csv", cohort_reports["progressive"].csv_rows())
    elif args.manifest or args.hyp:
        raise ValidationError("scoring sections need both --manifest and --hyp")

    if args.pairs:
        inputs.append(args.pairs)
        groups = [g for g in args.groups.split(",") if g] if args.groups else None
        payload["gain_fit"] = _fit_payload(args.pairs, groups, args.fit_mode)

    if args.recipe:
        inputs += args.recipe
        payload["compute"] = [b.to_json() for b in _budgets(args.recipe)]

    if args.tensor:
        inputs += args.tensor
        infos = []
        for path in args.tensor:
            model, modes, info = analyse_tensor(path, args.rank, tensor.AXIS_NAMES[args.mode_axis],
                                                args.normalize, 1e-9, 100, 50)
            _write_tucker_outputs(out, info["name"], model, modes, info)
            infos.append(info)
        payload["tensors"] = infos

    if not payload:
        raise ValidationError("nothing to report: give --manifest/--hyp, --pairs, --recipe or --tensor")

    doc = envelope(payload, inputs)
    write_json(out / "report.json", doc)
    (out / "report.md").write_text(render_markdown(payload, cohort_reports), encoding="utf-8")
    print(f"report written to {out / 'report.json'} (payload sha256 {doc['payload_sha256']})")
    return 0


# ---------------------------------------------------------------------------


def _add_scoring_args(p):
    p.add_argument("--manifest", help="manifest JSONL")
    p.add_argument("--hyp", action="append", default=[], help="hypothesis JSONL (repeatable)")
    p.add_argument("--model-id", action="append", default=[], help="model id per --hyp, in order")
    p.add_argument("--sigma-mode", choices=SIGMA_MODES, default="moment")
    p.add_argument("--allow-missing", action="store_true", help="score manifest ids without hypothesis as empty")


def _add_threshold_args(p):
    p.add_argument("--low", type=float, default=30.0, help="top-k threshold, percent WER")
    p.add_argument("--high", type=float, default=50.0, help="bottom-k threshold, percent WER")
    p.add_argument("--edges", type=_floats, default=[0, 2, 4, 6, 8, 16], help="duration bucket edges in seconds")
    p.add_argument("--steps", type=int, default=5, help="number of progressive folds")
    p.add_argument("--seed", type=int, default=None, help="shuffle seed (default $EVALKIT_SEED or 42)")


def _add_tensor_args(p):
    p.add_argument("--rank", type=int, default=8)
    p.add_argument("--mode-axis", choices=sorted(tensor.AXIS_NAMES), default="feature")
    p.add_argument("--normalize", choices=tensor.NORMALIZATIONS, default="spectral")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evalkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"evalkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="per-utterance WER and weighted summaries")
    _add_scoring_args(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", help="leaderboard ordered by Rank_wer")
    p.add_argument("--summaries", nargs="+", required=True, help="summary JSON files or directories")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("fit", help="linear gain between two benchmarks")
    p.add_argument("--pairs", default=str(BUILTIN_PAIRS), help="CSV model_id,wer_a,wer_b[,group]")
    p.add_argument("--mode", choices=["abs", "ols", *gain.FIT_MODES], default="abs")
    p.add_argument("--groups", help="comma-separated group prefixes to keep")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compute", help="training FLOPs ledger")
    p.add_argument("--recipe", action="append", default=[], help="recipe .json/.toml (default: shipped recipes)")
    p.add_argument("--json", action="store_true", help="print the JSON ledger instead of the table")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("tucker", help="power-iteration normalisation + Tucker decomposition")
    p.add_argument("--tensor", action="append", required=True, help="VTF1 tensor file (repeatable)")
    _add_tensor_args(p)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--max-sweeps", type=int, default=50)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_tucker)

    p = sub.add_parser("cohorts", help="fold and attribute breakdowns of scored results")
    p.add_argument("--scored", nargs="+", required=True, help="score output directory or *.scored.jsonl files")
    p.add_argument("--kind", choices=["threshold", "duration", "attribute", "progressive"], required=True)
    p.add_argument("--manifest")
    p.add_argument("--attribute", choices=sorted(ATTRIBUTE_VALUES), default="accent")
    p.add_argument("--seed-ids", help="file with one id per line for progressive fold 1 (default: bottom-k)")
    p.add_argument("--sigma-mode", choices=SIGMA_MODES, default="moment")
    p.add_argument("--emit-ids", action="store_true")
    _add_threshold_args(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_cohorts)

    p = sub.add_parser("report", help="combined JSON + markdown report")
    _add_scoring_args(p)
    _add_threshold_args(p)
    p.add_argument("--pairs")
    p.add_argument("--groups")
    p.add_argument("--fit-mode", choices=["abs", "ols", *gain.FIT_MODES], default="abs")
    p.add_argument("--recipe", action="append", default=[])
    p.add_argument("--tensor", action="append", default=[])
    _add_tensor_args(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"evalkit: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"evalkit: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
