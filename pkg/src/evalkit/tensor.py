"""Representation-variability analysis for B x T x D activation tensors.

Pipeline: spectral normalisation by power iteration on a mode Gram matrix,
rank-(r, r, r) Tucker decomposition (HOSVD start, HOOI refinement), and
projection of a tensor onto the fitted factors.

Axes are 0-based: 0 = batch, 1 = time, 2 = feature.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ValidationError

AXIS_NAMES = {"batch": 0, "time": 1, "feature": 2}
NORMALIZATIONS = ("spectral", "frobenius", "none")


def unfold(t: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(t, axis, 0).reshape(t.shape[axis], -1)


def fold(mat: np.ndarray, axis: int, shape) -> np.ndarray:
    shape = list(shape)
    moved = [shape[axis]] + shape[:axis] + shape[axis + 1:]
    return np.moveaxis(mat.reshape(moved), 0, axis)


def mode_n_product(t: np.ndarray, m: np.ndarray, axis: int) -> np.ndarray:
    """``t x_axis m``: contracts ``m``'s columns with ``t`` along ``axis``."""
    t = np.asarray(t)
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[1] != t.shape[axis]:
        raise ValidationError(
            f"mode-{axis} product: matrix {m.shape} incompatible with tensor {t.shape}"
        )
    shape = list(t.shape)
    shape[axis] = m.shape[0]
    return fold(m @ unfold(t, axis), axis, shape)


def multi_mode_product(t, matrices, skip=None, transpose=False):
    out = t
    for axis, m in enumerate(matrices):
        if axis == skip:
            continue
        out = mode_n_product(out, m.T if transpose else m, axis)
    return out


def _fix_signs(mat: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is nonnegative."""
    if mat.ndim == 1:
        return mat if mat[np.argmax(np.abs(mat))] >= 0 else -mat
    idx = np.argmax(np.abs(mat), axis=0)
    signs = np.where(mat[idx, np.arange(mat.shape[1])] < 0, -1.0, 1.0)
    return mat * signs


# ---------------------------------------------------------------------------
# power iteration


@dataclass(frozen=True)
class EigenEstimate:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool


def power_iteration(gram: np.ndarray, tol: float = 1e-9, max_iters: int = 100, seed: int = 0) -> EigenEstimate:
    """Dominant eigenpair of a symmetric PSD matrix.

    Converged once the Rayleigh quotient changes by less than ``tol``
    (relative) and the residual ``||G v - lam v||`` is below ``tol * lam``.
    The start vector is drawn from a fixed seed so results are reproducible.
    """
    gram = np.asarray(gram, dtype=np.float64)
    n = gram.shape[0]
    if gram.shape != (n, n):
        raise ValidationError(f"Gram matrix must be square, got {gram.shape}")
    if not np.any(gram):
        raise ValidationError("zero matrix has no dominant direction")
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    y = gram @ x
    for it in range(1, max_iters + 1):
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector fell in the null space
            x = np.roll(x, 1) + 1.0 / np.sqrt(n)
            x /= np.linalg.norm(x)
            y = gram @ x
            continue
        resid = np.linalg.norm(y - lam_new * x)
        if abs(lam_new - lam) <= tol * abs(lam_new) and resid <= tol * abs(lam_new):
            return EigenEstimate(lam_new, _fix_signs(x), it, True)
        lam = lam_new
        x = y / ny
        y = gram @ x
    lam = float(x @ y)
    warnings.warn(f"power iteration did not converge in {max_iters} iterations", RuntimeWarning, stacklevel=2)
    return EigenEstimate(lam, _fix_signs(x), max_iters, False)


@dataclass(frozen=True)
class NormalizedTensor:
    data: np.ndarray
    dominant_eigenvalue: float
    dominant_vector: np.ndarray
    iterations: int
    converged: bool
    scale: float
    method: str = "spectral"
    axis: int = 2


def mode_gram(z: np.ndarray, axis: int) -> np.ndarray:
    x = unfold(np.asarray(z, dtype=np.float64), axis)
    return x @ x.T


def power_iteration_normalize(z, tol: float = 1e-9, max_iters: int = 100, axis: int = 2,
                              method: str = "spectral") -> NormalizedTensor:
    """Rescale ``z`` so tensors from different benchmarks share one scale.

    Power iteration runs on the Gram matrix of the mode-``axis`` unfolding.
    ``spectral`` divides by the square root of its dominant eigenvalue (the
    top singular value of the unfolding); ``frobenius`` divides by ``||z||``.
    """
    if method not in NORMALIZATIONS:
        raise ValueError(f"method must be one of {NORMALIZATIONS}")
    z = np.asarray(getattr(z, "data", z), dtype=np.float64)
    if not np.any(z):
        raise ValidationError("cannot normalise an all-zero tensor")
    est = power_iteration(mode_gram(z, axis), tol=tol, max_iters=max_iters)
    if method == "spectral":
        scale = float(np.sqrt(est.value))
    elif method == "frobenius":
        scale = float(np.linalg.norm(z))
    else:
        scale = 1.0
    return NormalizedTensor(z / scale, est.value, est.vector, est.iterations, est.converged, scale, method, axis)


# ---------------------------------------------------------------------------
# Tucker


@dataclass(frozen=True)
class TuckerModel:
    core: np.ndarray
    factors: tuple[np.ndarray, np.ndarray, np.ndarray]
    rank: int
    fit_residual: float
    sweeps: int = 0
    residual_history: tuple[float, ...] = field(default=(), repr=False)

    def reconstruct(self) -> np.ndarray:
        return multi_mode_product(self.core, self.factors)


def _leading_directions(unfolded: np.ndarray, r: int) -> np.ndarray:
    # left singular vectors via the symmetric eigenproblem of the Gram matrix
    w, v = np.linalg.eigh(unfolded @ unfolded.T)
    order = np.argsort(w, kind="stable")[::-1][:r]
    return _fix_signs(v[:, order])


def _relative_residual(z, core, factors, znorm):
    return float(np.linalg.norm(z - multi_mode_product(core, factors)) / znorm)


def tucker(z, rank: int = 8, max_sweeps: int = 50, tol: float = 1e-9) -> TuckerModel:
    """Rank-(r, r, r) Tucker decomposition by HOOI from an HOSVD start.

    Stops when a sweep improves the relative residual by less than ``tol``.
    """
    z = np.asarray(getattr(z, "data", z), dtype=np.float64)
    if z.ndim != 3:
        raise ValidationError(f"expected a 3-way tensor, got shape {z.shape}")
    if not 1 <= rank <= min(z.shape):
        raise ValidationError(f"rank {rank} outside [1, {min(z.shape)}] for shape {z.shape}")
    znorm = np.linalg.norm(z)
    if znorm == 0.0:
        raise ValidationError("cannot decompose an all-zero tensor")

    factors = [_leading_directions(unfold(z, n), rank) for n in range(3)]
    core = multi_mode_product(z, factors, transpose=True)
    history = [_relative_residual(z, core, factors, znorm)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for n in range(3):
            partial = multi_mode_product(z, factors, skip=n, transpose=True)
            factors[n] = _leading_directions(unfold(partial, n), rank)
        core = multi_mode_product(z, factors, transpose=True)
        history.append(_relative_residual(z, core, factors, znorm))
        if history[-2] - history[-1] < tol:
            break
    return TuckerModel(core, tuple(factors), rank, history[-1], sweeps, tuple(history))


def project(z, model: TuckerModel) -> np.ndarray:
    """Multi-mode product of ``z`` with the transposed factors (an r x r x r array)."""
    z = np.asarray(getattr(z, "data", z), dtype=np.float64)
    for n, f in enumerate(model.factors):
        if z.shape[n] != f.shape[0]:
            raise ValidationError(f"tensor shape {z.shape} does not match factor {n} with {f.shape[0]} rows")
    return multi_mode_product(z, model.factors, transpose=True)


def dominant_mode_over_time(model: TuckerModel, z) -> np.ndarray:
    """Activation of each feature mode at every time step, shape T x r.

    ``z`` is projected onto the batch and feature factors only, keeping the
    time axis, and the leading batch component is returned.
    """
    z = np.asarray(getattr(z, "data", z), dtype=np.float64)
    f_batch, _, f_feat = model.factors
    if z.shape[0] != f_batch.shape[0] or z.shape[2] != f_feat.shape[0]:
        raise ValidationError(f"tensor shape {z.shape} does not match the fitted factors")
    partial = mode_n_product(mode_n_product(z, f_batch.T, 0), f_feat.T, 2)
    return partial[0]
