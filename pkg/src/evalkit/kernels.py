"""Hot loops for word alignment.

Every kernel exists twice: a numba-compiled version and a numpy version with
identical semantics.  ``align_ids`` and ``batch_edit_costs`` dispatch to the
jitted variant unless numba is missing or ``EVALKIT_DISABLE_JIT`` is set.
Token sequences are passed as int64 id arrays (see ``encode_pair``).
"""
from __future__ import annotations

import numpy as np

from ._jit import HAVE_NUMBA, njit

MATCH, SUB, DEL, INS = 0, 1, 2, 3
OP_NAMES = ("MATCH", "SUB", "DEL", "INS")


def encode_pair(ref, hyp):
    """Map two token lists onto a shared integer vocabulary."""
    vocab: dict[str, int] = {}
    r = np.fromiter((vocab.setdefault(t, len(vocab)) for t in ref), dtype=np.int64, count=len(ref))
    h = np.fromiter((vocab.setdefault(t, len(vocab)) for t in hyp), dtype=np.int64, count=len(hyp))
    return r, h


# ---------------------------------------------------------------------------
# full cost matrix


def _cost_matrix_loop(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    d = np.empty((n + 1, m + 1), dtype=np.int64)
    for j in range(m + 1):
        d[0, j] = j
    for i in range(1, n + 1):
        d[i, 0] = i
        ri = ref[i - 1]
        for j in range(1, m + 1):
            best = d[i - 1, j - 1] + (0 if ri == hyp[j - 1] else 1)
            dele = d[i - 1, j] + 1
            if dele < best:
                best = dele
            ins = d[i, j - 1] + 1
            if ins < best:
                best = ins
            d[i, j] = best
    return d


def cost_matrix_numpy(ref, hyp):
    """Levenshtein table, one vectorised row at a time.

    The insertion term couples neighbours within a row; it is resolved with a
    running minimum: ``row[j] = min_k (tmp[k] + j - k)``.
    """
    n, m = len(ref), len(hyp)
    d = np.empty((n + 1, m + 1), dtype=np.int64)
    cols = np.arange(m + 1, dtype=np.int64)
    d[0] = cols
    for i in range(1, n + 1):
        prev = d[i - 1]
        tmp = np.empty(m + 1, dtype=np.int64)
        tmp[0] = i
        if m:
            tmp[1:] = np.minimum(prev[:-1] + (hyp != ref[i - 1]), prev[1:] + 1)
        d[i] = np.minimum.accumulate(tmp - cols) + cols
    return d


# ---------------------------------------------------------------------------
# backtrace: MATCH > SUB > DEL > INS when several predecessors are optimal


def _backtrace_loop(d, ref, hyp):
    i = ref.shape[0]
    j = hyp.shape[0]
    ops = np.empty(i + j, dtype=np.int8)
    counts = np.zeros(4, dtype=np.int64)
    k = 0
    while i > 0 or j > 0:
        cur = d[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i - 1, j - 1] == cur:
            op = MATCH
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and d[i - 1, j - 1] + 1 == cur:
            op = SUB
            i -= 1
            j -= 1
        elif i > 0 and d[i - 1, j] + 1 == cur:
            op = DEL
            i -= 1
        else:
            op = INS
            j -= 1
        ops[k] = op
        counts[op] += 1
        k += 1
    return ops[:k][::-1].copy(), counts


def align_ids_numpy(ref, hyp):
    """Returns ``(ops, counts)`` where counts is ``[hits, S, D, I]``."""
    d = cost_matrix_numpy(ref, hyp)
    return _backtrace_loop(d, ref, hyp)


# ---------------------------------------------------------------------------
# batched cost only (two-row DP), used for bulk scoring and benchmarks


def _batch_costs_loop(ref_flat, ref_off, hyp_flat, hyp_off):
    npairs = ref_off.shape[0] - 1
    out = np.empty(npairs, dtype=np.int64)
    width = 1
    for p in range(npairs):
        w = hyp_off[p + 1] - hyp_off[p] + 1
        if w > width:
            width = w
    prev = np.empty(width, dtype=np.int64)
    cur = np.empty(width, dtype=np.int64)
    for p in range(npairs):
        r0 = ref_off[p]
        n = ref_off[p + 1] - r0
        h0 = hyp_off[p]
        m = hyp_off[p + 1] - h0
        for j in range(m + 1):
            prev[j] = j
        for i in range(1, n + 1):
            cur[0] = i
            ri = ref_flat[r0 + i - 1]
            for j in range(1, m + 1):
                best = prev[j - 1] + (0 if ri == hyp_flat[h0 + j - 1] else 1)
                if prev[j] + 1 < best:
                    best = prev[j] + 1
                if cur[j - 1] + 1 < best:
                    best = cur[j - 1] + 1
                cur[j] = best
            for j in range(m + 1):
                prev[j] = cur[j]
        out[p] = prev[m]
    return out


def batch_edit_costs_numpy(ref_flat, ref_off, hyp_flat, hyp_off):
    out = np.empty(len(ref_off) - 1, dtype=np.int64)
    for p in range(len(out)):
        r = ref_flat[ref_off[p]:ref_off[p + 1]]
        h = hyp_flat[hyp_off[p]:hyp_off[p + 1]]
        out[p] = cost_matrix_numpy(r, h)[-1, -1]
    return out


if HAVE_NUMBA:
    cost_matrix_jit = njit(_cost_matrix_loop)
    backtrace_jit = njit(_backtrace_loop)

    @njit
    def align_ids_jit(ref, hyp):
        return backtrace_jit(cost_matrix_jit(ref, hyp), ref, hyp)

    batch_edit_costs_jit = njit(_batch_costs_loop)
    align_ids = align_ids_jit
    batch_edit_costs = batch_edit_costs_jit
else:
    cost_matrix_jit = backtrace_jit = align_ids_jit = batch_edit_costs_jit = None
    align_ids = align_ids_numpy
    batch_edit_costs = batch_edit_costs_numpy


def pack(sequences):
    """Concatenate id arrays into ``(flat, offsets)`` for the batch kernels."""
    lengths = np.fromiter((len(s) for s in sequences), dtype=np.int64, count=len(sequences))
    off = np.zeros(len(sequences) + 1, dtype=np.int64)
    np.cumsum(lengths, out=off[1:])
    flat = np.concatenate([np.asarray(s, dtype=np.int64) for s in sequences]) if len(sequences) else np.empty(0, np.int64)
    return flat.astype(np.int64, copy=False), off
