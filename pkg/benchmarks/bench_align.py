"""Numba kernels against their numpy fallbacks on synthetic transcripts.

    python benchmarks/bench_align.py [--pairs 2000] [--max-len 40] [--repeat 3]

Prints best-of-N wall time per kernel and the speedup.  Both variants are
checked to agree before timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from evalkit import kernels


def synthetic_pairs(n_pairs, max_len, vocab, seed):
    rng = np.random.default_rng(seed)
    refs, hyps = [], []
    for _ in range(n_pairs):
        ref = rng.integers(0, vocab, rng.integers(1, max_len + 1)).astype(np.int64)
        # hypothesis: reference with ~20% corruption, some words dropped or added
        hyp = ref.copy()
        mask = rng.random(len(hyp)) < 0.2
        hyp[mask] = rng.integers(0, vocab, mask.sum())
        keep = rng.random(len(hyp)) > 0.05
        hyp = np.concatenate([hyp[keep], rng.integers(0, vocab, rng.integers(0, 3))]).astype(np.int64)
        refs.append(ref)
        hyps.append(hyp)
    return refs, hyps


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--max-len", type=int, default=40)
    ap.add_argument("--vocab", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba unavailable (or EVALKIT_DISABLE_JIT set); nothing to compare")

    refs, hyps = synthetic_pairs(args.pairs, args.max_len, args.vocab, args.seed)
    rf, ro = kernels.pack(refs)
    hf, ho = kernels.pack(hyps)

    # warm-up compiles (or loads the cache) and checks agreement
    for r, h in zip(refs[:50], hyps[:50]):
        a, ca = kernels.align_ids_numpy(r, h)
        b, cb = kernels.align_ids_jit(r, h)
        assert np.array_equal(a, b) and np.array_equal(ca, cb)
    assert np.array_equal(kernels.batch_edit_costs_numpy(rf, ro, hf, ho),
                          kernels.batch_edit_costs_jit(rf, ro, hf, ho))

    rows = []
    for name, np_fn, jit_fn in (
        ("align (cost matrix + backtrace)",
         lambda: [kernels.align_ids_numpy(r, h) for r, h in zip(refs, hyps)],
         lambda: [kernels.align_ids_jit(r, h) for r, h in zip(refs, hyps)]),
        ("batch edit costs",
         lambda: kernels.batch_edit_costs_numpy(rf, ro, hf, ho),
         lambda: kernels.batch_edit_costs_jit(rf, ro, hf, ho)),
    ):
        t_np = best_of(np_fn, args.repeat)
        t_jit = best_of(jit_fn, args.repeat)
        rows.append((name, t_np, t_jit))

    words = int(ro[-1])
    print(f"{args.pairs} pairs, {words} reference words, max length {args.max_len}, best of {args.repeat}")
    print(f"{'kernel':<34}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for name, t_np, t_jit in rows:
        print(f"{name:<34}{t_np:>12.4f}{t_jit:>12.4f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
