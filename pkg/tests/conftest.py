from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

import pytest

from evalkit import kernels

FIXTURES = Path(__file__).parent / "fixtures"
TOY = FIXTURES / "toy"
BAD = FIXTURES / "bad"

ALIGN_BACKENDS = [pytest.param(kernels.align_ids_numpy, id="numpy")]
BATCH_BACKENDS = [pytest.param(kernels.batch_edit_costs_numpy, id="numpy")]
if kernels.HAVE_NUMBA:
    ALIGN_BACKENDS.append(pytest.param(kernels.align_ids_jit, id="numba"))
    BATCH_BACKENDS.append(pytest.param(kernels.batch_edit_costs_jit, id="numba"))


def run_cli(*args, env=None, cwd=None):
    full_env = dict(os.environ)
    full_env.pop("EVALKIT_SEED", None)
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "evalkit", *map(str, args)],
        capture_output=True, text=True, env=full_env, cwd=cwd,
    )


def toy_report_args(out):
    return [
        "report", "--manifest", TOY / "manifest.jsonl",
        "--hyp", TOY / "model_a.jsonl", "--hyp", TOY / "model_b.jsonl",
        "--pairs", TOY / "pairs.csv", "--recipe", TOY / "recipe.toml",
        "--tensor", TOY / "lrs3_sample.vtf", "-o", out,
    ]


@pytest.fixture
def toy_manifest():
    from evalkit.core import load_manifest
    return load_manifest(TOY / "manifest.jsonl")


# criterion number -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def acceptance_lines() -> list[str]:
    lines = []
    for crit in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[crit]
        failed = [d for ok, d in entries if not ok]
        status = "PASS" if not failed else "FAIL"
        if failed:
            detail = f"{len(entries) - len(failed)}/{len(entries)} checks ok; " + "; ".join(failed)
        else:
            detail = "; ".join(d for _, d in entries) if len(entries) <= 3 else f"{len(entries)} checks ok"
        lines.append(f"criterion {crit}: {status}  {detail}")
    return lines


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines():
        terminalreporter.write_line(line)
