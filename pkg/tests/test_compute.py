from __future__ import annotations

import json

import pytest

from evalkit import compute
from evalkit.compute import ModelSpec, StagePlan, TokenVolume, estimate_recipe, estimate_stage
from evalkit.core import ValidationError

from conftest import TOY


def _builtin():
    out = {}
    for p in compute.builtin_recipe_paths():
        for model, stages in compute.load_recipes(p):
            out[model.name] = estimate_recipe(model, stages)
    return out


@pytest.mark.parametrize(
    "value, expected",
    [("52.4M", 52.4e6), ("32K", 32e3), ("0.4M", 4e5), (1e6, 1e6), ("1.5e3", 1500.0), ("2B", 2e9)],
)
def test_parse_count(value, expected):
    assert compute.parse_count(value) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["abc", "12Q", "", "-3M"])
def test_parse_count_rejects(bad):
    with pytest.raises(ValidationError):
        compute.parse_count(bad)


def test_hours_to_frames():
    assert compute.hours_to_frames(1) == 90_000
    assert compute.hours_to_frames(433) == 38_970_000
    assert compute.hours_to_frames(0.5) == 45_000


def test_trivial_stage():
    m = ModelSpec("t", 1e6)
    plan = StagePlan("pretrain_encoder", TokenVolume(frames=1e6))
    assert estimate_stage(m, plan) == 6e12


def test_dual_encoder_doubles_encoder_term():
    m = ModelSpec("t", 1e6, 5e5)
    single = estimate_stage(m, StagePlan("pretrain_encoder", TokenVolume(frames=1e6)))
    dual = estimate_stage(m, StagePlan("pretrain_dual_encoder", TokenVolume(frames=1e6)))
    assert dual == 2 * single


# Independent arithmetic: 6 * params * hours * 3600 * 25 * epochs.
HAND = {
    ("raven_low_base_433h", "pretrain"): 6 * 2 * 52.4e6 * 433 * 90_000 * 150,
    ("raven_low_base_433h", "finetune"): 6 * (52.4e6 + 10.1e6) * 30 * 90_000 * 50,
    ("raven_high_large_1759h", "pretrain"): 6 * 2 * 339.3e6 * 1759 * 90_000 * 150,
    ("ma_2022_1459h", "supervised"): 6 * 52.5e6 * 1459 * 90_000 * 50,
    ("auto_avsr_3448h", "supervised"): 6 * 250.1e6 * 3448 * 90_000 * 75,
    ("avhubert_base_pretrain_iteration", "pretrain"): 6 * 103.3e6 * 0.4e6 * 32e3,
    ("avhubert_base_low", "finetune"): 6 * 57.3e6 * 18e3 * 8e3,
    ("avhubert_large_low", "pretrain"): 6 * (4 * 103.3e6 * 0.4e6 * 32e3 + 325.4e6 * 0.6e6 * 64e3),
}


@pytest.mark.parametrize("key", sorted(HAND), ids=lambda k: f"{k[0]}-{k[1]}")
def test_builtin_recipes_against_hand_arithmetic(key):
    name, phase = key
    assert _builtin()[name].phase_flops[phase] == pytest.approx(HAND[key], rel=1e-12)


def test_phase_sum_equals_total():
    for b in _builtin().values():
        assert b.total_flops == pytest.approx(sum(b.phase_flops.values()), rel=1e-15)
        assert b.total_flops == pytest.approx(sum(c.flops for c in b.per_stage), rel=1e-15)


def test_display_rounding_is_half_even():
    assert compute.display_exaflops(0.25e18) == 0.2
    assert compute.display_exaflops(131.7788e18) == 131.8


def test_volume_validation():
    with pytest.raises(ValidationError):
        TokenVolume().resolve()
    with pytest.raises(ValidationError):
        TokenVolume(hours=0).resolve()
    assert TokenVolume(steps=10, tokens_per_step=4).resolve() == 40


def test_missing_params():
    with pytest.raises(ValidationError, match="decoder_params"):
        estimate_recipe(ModelSpec("x", 1e6, None), [StagePlan("finetune_decoder_only", TokenVolume(frames=1))])
    with pytest.raises(ValidationError, match="no stages"):
        estimate_recipe(ModelSpec("x", 1e6, 1e6), [])


def test_non_positive_params_rejected():
    with pytest.raises(ValidationError):
        ModelSpec("x", 1e6, 0.0)


def test_unknown_stage_kind():
    with pytest.raises(ValidationError):
        StagePlan("distill", TokenVolume(frames=1))


def test_param_disagreement_warns():
    with pytest.warns(UserWarning):
        ModelSpec("x", 1e6, 1e6, 5e6)


def test_toml_recipe():
    [(model, stages)] = compute.load_recipes(TOY / "recipe.toml")
    b = estimate_recipe(model, stages)
    assert b.name == "toy_ssl"
    assert compute.display_exaflops(b.phase_flops["pretrain"]) == 3.7


def test_json_recipe_errors(tmp_path):
    p = tmp_path / "r.json"
    p.write_text(json.dumps({"name": "r", "encoder_params": 1, "stages": [{"kind": "pretrain_encoder", "hourz": 3}]}))
    with pytest.raises(ValidationError, match="hourz"):
        compute.load_recipes(p)
    p.write_text("{")
    with pytest.raises(ValidationError):
        compute.load_recipes(p)


def test_format_table_has_every_recipe():
    budgets = list(_builtin().values())
    text = compute.format_table(budgets)
    for b in budgets:
        assert b.name in text
    assert "0.05" in text
