"""Closed-form transferability approximation from Gaussian moment fits.

Fits a Gaussian to each domain's raw embeddings and evaluates the squared
2-Wasserstein distance between the fits:

    W2^2 = ||mu_S - mu_T||^2
         + tr(Sigma_S + Sigma_T - 2 (Sigma_S^{1/2} Sigma_T Sigma_S^{1/2})^{1/2})

Only the source mean and covariance are needed, so the source dataset never
has to leave its owner: ship a small statistics file instead of embeddings.
Labels play no role in this variant, and features are used raw (the full
metric normalizes per sample; the approximation deliberately does not).

The matrix square roots come from a cyclic Jacobi eigendecomposition rather
than an iterative Newton solver: for the small symmetric PSD matrices here
it is unconditionally stable and keeps the module self-contained.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .data_model import (
    EmbeddingSet,
    MetricReport,
    TetotConfig,
    _as_readonly_f64,
    subsample,
)
from .errors import DataError, InputError, SolverError

__all__ = [
    "GaussianStats",
    "gaussian_stats",
    "sym_psd_sqrt",
    "w2_squared",
    "compute_tetot_approx",
]

# construction-time symmetry tolerance; eigenvalue floor checked at use
_SYM_TOL = 1e-9
_EIG_FLOOR = -1e-8


@njit(cache=True, nogil=True)
def _jacobi_eigh(A):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Returns (eigenvalues, eigenvector columns, converged). Sweeps rotate
    every upper-triangle pair per pass until the off-diagonal Frobenius
    norm drops below 1e-12 times the input norm.
    """
    d = A.shape[0]
    M = A.copy()
    V = np.eye(d)
    total = 0.0
    for i in range(d):
        for j in range(d):
            total += M[i, j] * M[i, j]
    tol = 1e-12 * np.sqrt(total)
    ok = False
    for _sweep in range(100):
        off = 0.0
        for i in range(d):
            for j in range(i + 1, d):
                off += 2.0 * M[i, j] * M[i, j]
        if np.sqrt(off) <= tol:
            ok = True
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (M[q, q] - M[p, p]) / apq
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                M[p, p] -= t * apq
                M[q, q] += t * apq
                M[p, q] = 0.0
                M[q, p] = 0.0
                for k in range(d):
                    if k != p and k != q:
                        akp = M[k, p]
                        akq = M[k, q]
                        M[k, p] = c * akp - s * akq
                        M[p, k] = M[k, p]
                        M[k, q] = s * akp + c * akq
                        M[q, k] = M[k, q]
                for k in range(d):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    w = np.empty(d)
    for i in range(d):
        w[i] = M[i, i]
    return w, V, ok


@dataclass(frozen=True)
class GaussianStats:
    """First and second moments of one domain's embeddings.

    ``cov`` must be symmetric within 1e-9; eigenvalues are allowed to dip
    to -1e-8 (clamped to zero where a PSD matrix is required). ``count``
    records how many samples produced the fit.
    """

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = _as_readonly_f64(np.asarray(self.mean), "mean")
        cov = _as_readonly_f64(np.asarray(self.cov), "cov")
        if mean.ndim != 1 or mean.shape[0] < 1:
            raise InputError("mean must be a non-empty 1-D vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InputError(f"cov must have shape ({d}, {d}), got {cov.shape}")
        if np.abs(cov - cov.T).max() > _SYM_TOL:
            raise DataError("cov must be symmetric within 1e-9")
        if self.count < 2:
            raise InputError(f"count must be >= 2, got {self.count}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "count", int(self.count))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def gaussian_stats(emb_set: EmbeddingSet, jitter: float = 0.0) -> GaussianStats:
    """Fit mean and covariance to an embedding set's raw features.

    Uses the population (divide-by-n) covariance, symmetrized exactly.
    ``jitter`` adds delta * I for ill-conditioned inputs; the default adds
    nothing, and rank-deficient covariances are legal downstream.
    """
    n = emb_set.n_samples
    if n < 2:
        raise InputError(f"need at least 2 samples to fit statistics, got {n}")
    if jitter < 0:
        raise InputError(f"jitter must be >= 0, got {jitter}")
    x = emb_set.features
    mean = x.mean(axis=0)
    centered = x - mean
    cov = (centered.T @ centered) / n
    cov = (cov + cov.T) / 2.0
    if jitter > 0:
        cov = cov + jitter * np.eye(cov.shape[0])
    return GaussianStats(mean=mean, cov=cov, count=n)


def sym_psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root: returns S with S @ S close to ``mat``.

    Eigenvalues in [-1e-8, 0) are treated as zero; anything lower means
    the input is not positive semidefinite and raises.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise InputError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DataError("matrix entries must be finite")
    if np.abs(mat - mat.T).max() > _SYM_TOL:
        raise InputError("matrix must be symmetric within 1e-9")
    sym = np.ascontiguousarray((mat + mat.T) / 2.0)
    w, vecs, ok = _jacobi_eigh(sym)
    if not ok:
        raise SolverError("eigendecomposition did not converge")
    low = w.min()
    if low < _EIG_FLOOR:
        raise DataError(
            f"matrix is not positive semidefinite (eigenvalue {low:.3e})"
        )
    w = np.where(w < 0.0, 0.0, w)
    root = (vecs * np.sqrt(w)) @ vecs.T
    return (root + root.T) / 2.0


def w2_squared(src_stats: GaussianStats, tgt_stats: GaussianStats) -> float:
    """Squared 2-Wasserstein distance between two Gaussian fits.

    The Bures trace term needs the square root of
    Sigma_S^{1/2} Sigma_T Sigma_S^{1/2}; that product is symmetrized before
    its root is taken, since float error can leave it asymmetric at the
    last digit. A result within [-1e-8, 0) clamps to 0.
    """
    if src_stats.dim != tgt_stats.dim:
        raise InputError(
            f"dimensions differ: {src_stats.dim} vs {tgt_stats.dim}"
        )
    delta = src_stats.mean - tgt_stats.mean
    root_s = sym_psd_sqrt(src_stats.cov)
    inner = root_s @ tgt_stats.cov @ root_s
    cross = sym_psd_sqrt((inner + inner.T) / 2.0)
    value = float(
        delta @ delta
        + np.trace(src_stats.cov)
        + np.trace(tgt_stats.cov)
        - 2.0 * np.trace(cross)
    )
    if value < 0.0:
        if value < _EIG_FLOOR:
            raise SolverError(f"squared distance evaluated to {value:.3e}")
        value = 0.0
    return value


def compute_tetot_approx(
    src_stats: GaussianStats,
    tgt: EmbeddingSet,
    config: Optional[TetotConfig] = None,
) -> MetricReport:
    """Statistics-only transferability estimate against a target set.

    Fits a Gaussian to the (optionally subsampled) raw target features and
    returns w2_squared against the provided source statistics. No
    normalization is applied and labels are ignored. The target subsample
    uses the same seed stream as the full metric, so both variants see the
    same target rows for a given config.
    """
    if config is None:
        config = TetotConfig()
    t_start = time.perf_counter()
    if src_stats.dim != tgt.dim:
        raise InputError(
            f"feature dimensions differ: stats={src_stats.dim}, tgt={tgt.dim}"
        )
    if config.num_target is not None:
        seed_tgt = np.random.SeedSequence(config.seed).generate_state(2)[1]
        tgt = subsample(tgt, config.num_target, int(seed_tgt))
    tgt_stats = gaussian_stats(tgt, jitter=config.cov_jitter)
    value = w2_squared(src_stats, tgt_stats)
    meta = {
        "m": src_stats.count,
        "n": tgt_stats.count,
        "dim": src_stats.dim,
        "seed": config.seed,
        "cov_jitter": config.cov_jitter,
        "wall_time_s": time.perf_counter() - t_start,
    }
    return MetricReport(metric_name="tetot_approx", value=value, meta=meta)
