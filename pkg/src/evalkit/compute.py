"""Training-compute ledger using the 6 * params * tokens rule.

A recipe is a list of stages; each stage picks which parameter block is
trained (``STAGE_PARAMS``) and how many input frames it sees.
"""
from __future__ import annotations

import json
import re
import sys
import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .core import FPS, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FRAMES_PER_HOUR = 3600 * FPS
EXA = 1e18

STAGE_PARAMS = {
    "pretrain_dual_encoder": lambda ne, nd, n: 2 * ne,
    "pretrain_encoder": lambda ne, nd, n: ne,
    "pretrain_monolithic": lambda ne, nd, n: n,
    "finetune_encoder_decoder": lambda ne, nd, n: ne + nd,
    "finetune_encoder_only": lambda ne, nd, n: ne,
    "finetune_decoder_only": lambda ne, nd, n: nd,
    "supervised": lambda ne, nd, n: n,
}
_NEEDS = {
    "pretrain_dual_encoder": ("encoder_params",),
    "pretrain_encoder": ("encoder_params",),
    "pretrain_monolithic": ("total_params",),
    "finetune_encoder_decoder": ("encoder_params", "decoder_params"),
    "finetune_encoder_only": ("encoder_params",),
    "finetune_decoder_only": ("decoder_params",),
    "supervised": ("total_params",),
}


def phase_of(kind: str) -> str:
    return kind.split("_", 1)[0]


_SUFFIX = {"": 1, "K": 10**3, "M": 10**6, "B": 10**9, "G": 10**9}
_COUNT_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([KMBG]?)\s*$")


def parse_count(value) -> float:
    """Accepts numbers or strings such as ``"52.4M"`` and ``"32K"``."""
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    m = _COUNT_RE.match(str(value).upper())
    if not m:
        raise ValidationError(f"cannot parse count {value!r}")
    return float(Decimal(m.group(1)) * _SUFFIX[m.group(2)])


def hours_to_frames(hours) -> int:
    if hours < 0:
        raise ValidationError(f"negative duration: {hours} h")
    return int((Decimal(str(hours)) * FRAMES_PER_HOUR).to_integral_value())


@dataclass(frozen=True)
class ModelSpec:
    name: str
    encoder_params: float | None = None
    decoder_params: float | None = None
    total_params: float | None = None

    def __post_init__(self):
        ne, nd, n = self.encoder_params, self.decoder_params, self.total_params
        for label, v in (("encoder_params", ne), ("decoder_params", nd), ("total_params", n)):
            if v is not None and v <= 0:
                raise ValidationError(f"{self.name}: {label} must be > 0")
        if n is not None and ne is not None and nd is not None and abs(n - (ne + nd)) > 0.01 * n:
            warnings.warn(f"{self.name}: total_params {n:g} differs from encoder+decoder {ne + nd:g} by >1%")

    @property
    def n(self) -> float | None:
        if self.total_params is not None:
            return self.total_params
        if self.encoder_params is not None and self.decoder_params is not None:
            return self.encoder_params + self.decoder_params
        return None


@dataclass(frozen=True)
class TokenVolume:
    hours: float | None = None
    frames: float | None = None
    steps: float | None = None
    tokens_per_step: float | None = None

    def resolve(self) -> float:
        given = [self.hours is not None, self.frames is not None, self.steps is not None]
        if sum(given) != 1:
            raise ValidationError("token volume needs exactly one of hours, frames, steps")
        if self.hours is not None:
            d = hours_to_frames(self.hours)
        elif self.frames is not None:
            d = self.frames
        else:
            if self.tokens_per_step is None:
                raise ValidationError("step-based volume needs tokens_per_step")
            d = self.steps * self.tokens_per_step
        if not d > 0:
            raise ValidationError("zero token volume")
        return d


@dataclass(frozen=True)
class StagePlan:
    kind: str
    volume: TokenVolume
    epochs: int = 1
    label: str = ""
    # per-stage parameter overrides, e.g. a Large model initialised from Base iterations
    encoder_params: float | None = None
    decoder_params: float | None = None
    total_params: float | None = None

    def __post_init__(self):
        if self.kind not in STAGE_PARAMS:
            raise ValidationError(f"unknown stage kind {self.kind!r}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class StageCost:
    label: str
    kind: str
    params: float
    tokens: float
    flops: float

    @property
    def phase(self) -> str:
        return phase_of(self.kind)


@dataclass(frozen=True)
class ComputeBudget:
    name: str
    per_stage: tuple[StageCost, ...]
    total_flops: float
    phase_flops: dict[str, float] = field(default_factory=dict)

    @property
    def total_exaflops(self) -> float:
        return display_exaflops(self.total_flops)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "stages": [
                {"label": s.label, "kind": s.kind, "params": s.params, "tokens": s.tokens,
                 "flops": s.flops, "exaflops": display_exaflops(s.flops)}
                for s in self.per_stage
            ],
            "phases": {k: {"flops": v, "exaflops": display_exaflops(v)} for k, v in self.phase_flops.items()},
            "total_flops": self.total_flops,
            "total_exaflops": self.total_exaflops,
        }


def display_exaflops(flops: float, digits: int = 1) -> float:
    # round() on floats is round-half-to-even
    return round(flops / EXA, digits)


def _stage_params(model: ModelSpec, plan: StagePlan) -> float:
    ne = plan.encoder_params if plan.encoder_params is not None else model.encoder_params
    nd = plan.decoder_params if plan.decoder_params is not None else model.decoder_params
    n = plan.total_params if plan.total_params is not None else model.n
    have = {"encoder_params": ne, "decoder_params": nd, "total_params": n}
    missing = [k for k in _NEEDS[plan.kind] if have[k] is None]
    if missing:
        raise ValidationError(f"{model.name}: stage {plan.kind} needs {', '.join(missing)}")
    return STAGE_PARAMS[plan.kind](ne, nd, n)


def estimate_stage(model: ModelSpec, plan: StagePlan) -> float:
    """FLOPs of one stage: 6 x trained parameters x frames x epochs."""
    return 6.0 * _stage_params(model, plan) * plan.volume.resolve() * plan.epochs


def estimate_recipe(model: ModelSpec, stages) -> ComputeBudget:
    stages = list(stages)
    if not stages:
        raise ValidationError(f"{model.name}: recipe has no stages")
    costs = []
    phases: dict[str, float] = {}
    for i, plan in enumerate(stages):
        flops = estimate_stage(model, plan)
        costs.append(StageCost(plan.label or f"{plan.kind}#{i}", plan.kind, _stage_params(model, plan),
                               plan.volume.resolve() * plan.epochs, flops))
        phases[phase_of(plan.kind)] = phases.get(phase_of(plan.kind), 0.0) + flops
    return ComputeBudget(model.name, tuple(costs), sum(c.flops for c in costs), phases)


# ---------------------------------------------------------------------------
# recipe files


def _stage_from_dict(d: dict, recipe: str) -> StagePlan:
    known = {"kind", "hours", "frames", "steps", "tokens_per_step", "epochs", "label",
             "encoder_params", "decoder_params", "total_params"}
    extra = set(d) - known
    if extra:
        raise ValidationError(f"recipe {recipe!r}: unknown stage key(s) {sorted(extra)}")
    if "kind" not in d:
        raise ValidationError(f"recipe {recipe!r}: stage without 'kind'")
    vol = TokenVolume(
        hours=d.get("hours"),
        frames=parse_count(d.get("frames")),
        steps=parse_count(d.get("steps")),
        tokens_per_step=parse_count(d.get("tokens_per_step")),
    )
    return StagePlan(
        kind=d["kind"],
        volume=vol,
        epochs=int(d.get("epochs", 1)),
        label=d.get("label", ""),
        encoder_params=parse_count(d.get("encoder_params")),
        decoder_params=parse_count(d.get("decoder_params")),
        total_params=parse_count(d.get("total_params")),
    )


def recipe_from_dict(d: dict) -> tuple[ModelSpec, list[StagePlan]]:
    name = d.get("name")
    if not name:
        raise ValidationError("recipe without 'name'")
    model = ModelSpec(
        name,
        parse_count(d.get("encoder_params")),
        parse_count(d.get("decoder_params")),
        parse_count(d.get("total_params")),
    )
    stages = [_stage_from_dict(s, name) for s in d.get("stages", [])]
    return model, stages


def load_recipes(path) -> list[tuple[ModelSpec, list[StagePlan]]]:
    """Load one recipe or a ``recipes`` list from a .json or .toml file."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            doc = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read recipe: {exc}", path) from exc
    items = doc.get("recipes", [doc]) if isinstance(doc, dict) else doc
    try:
        return [recipe_from_dict(r) for r in items]
    except ValidationError as exc:
        raise ValidationError(str(exc), path) from None


def builtin_recipe_paths() -> list[Path]:
    return sorted((Path(__file__).parent / "data" / "recipes").glob("*.json"))


def format_table(budgets) -> str:
    """Aligned text table: one row per recipe, one column per training phase."""
    budgets = list(budgets)
    phases = []
    for b in budgets:
        for p in b.phase_flops:
            if p not in phases:
                phases.append(p)
    header = ["Recipe"] + [f"{p} (EF)" for p in phases] + ["total (EF)"]
    rows = []
    for b in budgets:
        cells = [b.name]
        for p in phases:
            v = b.phase_flops.get(p)
            cells.append("-" if v is None else _fmt_ef(v))
        cells.append(_fmt_ef(b.total_flops))
        rows.append(cells)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    return "\n".join(lines)


def _fmt_ef(flops: float) -> str:
    ef = flops / EXA
    # small finetuning stages would otherwise print as 0.0 or 0.1
    return f"{ef:.2f}" if ef < 1 else f"{display_exaflops(flops):.1f}"
