"""Transferability metric built from feature and label transport costs.

The metric couples source and target samples by optimal transport under a
combined ground cost: Euclidean distance between (normalized) embeddings
plus a weighted Euclidean distance between hard source labels and soft
target pseudo-labels. The optimal objective under uniform marginals is the
metric value; lower means the domains are cheaper to align, which tracks
transfer accuracy empirically.

Pseudo-labels are always computed on the raw stored features, never on
normalized ones: the classifier head was trained at encoder scale and
rescaling its inputs would distort the predictions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .data_model import (
    ClassifierHead,
    EmbeddingSet,
    MetricReport,
    TetotConfig,
    _as_readonly_f64,
    normalize_features,
    subsample,
)
from .errors import DataError, InputError
from .ot_solver import solve_exact, solve_sinkhorn

__all__ = [
    "PseudoLabelMatrix",
    "OneHotLabels",
    "feature_cost_matrix",
    "pseudo_label",
    "label_cost_matrix",
    "combine_costs",
    "compute_tetot",
]


@dataclass(frozen=True)
class PseudoLabelMatrix:
    """Row-stochastic n x K matrix of soft class predictions."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _as_readonly_f64(np.asarray(self.probs), "probs")
        if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 1:
            raise InputError("probs must be a non-empty 2-D matrix")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise DataError("pseudo-label entries must lie in [0, 1]")
        if np.max(np.abs(probs.sum(axis=1) - 1.0)) > 1e-9:
            raise DataError("each pseudo-label row must sum to 1 within 1e-9")
        object.__setattr__(self, "probs", probs)

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


@dataclass(frozen=True)
class OneHotLabels:
    """Binary m x K matrix with exactly one 1 per row."""

    onehot: np.ndarray

    def __post_init__(self):
        onehot = _as_readonly_f64(np.asarray(self.onehot), "onehot")
        if onehot.ndim != 2 or onehot.shape[0] < 1 or onehot.shape[1] < 1:
            raise InputError("onehot must be a non-empty 2-D matrix")
        if not np.all((onehot == 0.0) | (onehot == 1.0)):
            raise DataError("one-hot entries must be exactly 0 or 1")
        if not np.all(onehot.sum(axis=1) == 1.0):
            raise DataError("each one-hot row must contain exactly one 1")
        object.__setattr__(self, "onehot", onehot)

    @classmethod
    def from_labels(cls, labels: np.ndarray, num_classes: int) -> "OneHotLabels":
        """Encode integer labels in [0, num_classes) as one-hot rows."""
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.shape[0] < 1:
            raise InputError("labels must be a non-empty 1-D array")
        if num_classes < 2:
            raise InputError(f"num_classes must be >= 2, got {num_classes}")
        if labels.min() < 0 or labels.max() >= num_classes:
            raise DataError(
                f"labels must lie in [0, {num_classes}), "
                f"got range [{labels.min()}, {labels.max()}]"
            )
        out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
        out[np.arange(labels.shape[0]), labels] = 1.0
        return cls(out)

    @property
    def num_classes(self) -> int:
        return self.onehot.shape[1]


def feature_cost_matrix(src: EmbeddingSet, tgt: EmbeddingSet) -> np.ndarray:
    """Pairwise Euclidean distances between embeddings, shape (m, n).

    Features are used exactly as stored; apply `normalize_features` first if
    a normalized geometry is wanted.
    """
    if src.dim != tgt.dim:
        raise InputError(
            f"feature dimensions differ: src={src.dim}, tgt={tgt.dim}"
        )
    return cdist(src.features, tgt.features)


def pseudo_label(
    head: ClassifierHead, tgt: EmbeddingSet, hard: bool = False
) -> PseudoLabelMatrix:
    """Soft class predictions for each target sample.

    Applies the head to the raw stored features and softmaxes the logits
    with max-subtraction, so extreme logits cannot overflow. With ``hard``
    the softmax is replaced by a one-hot argmax (lowest index on ties),
    which is an ablation, not the default metric definition.
    """
    if head.dim != tgt.dim:
        raise InputError(
            f"head expects dim {head.dim}, target features have dim {tgt.dim}"
        )
    logits = head.logits(tgt.features)
    if hard:
        pred = np.argmax(logits, axis=1)
        probs = np.zeros_like(logits)
        probs[np.arange(logits.shape[0]), pred] = 1.0
        return PseudoLabelMatrix(probs)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return PseudoLabelMatrix(expd / expd.sum(axis=1, keepdims=True))


def label_cost_matrix(
    src_labels: OneHotLabels, tgt_probs: PseudoLabelMatrix
) -> np.ndarray:
    """Euclidean distance between one-hot rows and pseudo-label rows."""
    if src_labels.num_classes != tgt_probs.num_classes:
        raise InputError(
            f"class counts differ: source {src_labels.num_classes}, "
            f"target {tgt_probs.num_classes}"
        )
    return cdist(src_labels.onehot, tgt_probs.probs)


def combine_costs(
    feature_cost: np.ndarray, label_cost: np.ndarray, label_weight: float
) -> np.ndarray:
    """Entrywise C_final = feature_cost + label_weight * label_cost."""
    feature_cost = np.asarray(feature_cost, dtype=np.float64)
    label_cost = np.asarray(label_cost, dtype=np.float64)
    if feature_cost.shape != label_cost.shape:
        raise InputError(
            f"cost shapes differ: {feature_cost.shape} vs {label_cost.shape}"
        )
    if label_weight < 0:
        raise InputError(f"label_weight must be >= 0, got {label_weight}")
    return feature_cost + label_weight * label_cost


def compute_tetot(
    src: EmbeddingSet,
    tgt: EmbeddingSet,
    head: Optional[ClassifierHead] = None,
    config: Optional[TetotConfig] = None,
) -> MetricReport:
    """Full metric pipeline: subsample, normalize, build costs, solve OT.

    Parameters
    ----------
    src : EmbeddingSet
        Source domain; must carry labels unless config.label_weight is 0.
    tgt : EmbeddingSet
        Target domain; its labels, if any, are ignored.
    head : ClassifierHead, optional
        Source classifier producing target pseudo-labels. Required when
        config.label_weight > 0.
    config : TetotConfig, optional
        Sampling, normalization, and solver settings; defaults throughout.

    Returns
    -------
    MetricReport
        metric_name "tetot", value = optimal transport cost under uniform
        marginals, meta = sample counts, label weight, norm mode, solver
        details, seed, and wall time.

    Notes
    -----
    Subsampling draws the source and target subsets with independent
    streams derived from config.seed, normalization statistics are computed
    per subsample, and pseudo-labels come from the raw features of the
    target subsample. The result is deterministic for fixed inputs and
    config; ``meta["wall_time_s"]`` is the only field that varies between
    identical runs.
    """
    if config is None:
        config = TetotConfig()
    t_start = time.perf_counter()

    if src.dim != tgt.dim:
        raise InputError(
            f"feature dimensions differ: src={src.dim}, tgt={tgt.dim}"
        )
    lam = config.label_weight
    if lam > 0:
        if not src.is_labeled:
            raise InputError("label cost requires source labels")
        if head is None:
            raise InputError("label cost requires a classifier head")
        if head.dim != src.dim:
            raise InputError(
                f"head expects dim {head.dim}, features have dim {src.dim}"
            )

    # independent draw streams for the two domains
    seed_src, seed_tgt = np.random.SeedSequence(config.seed).generate_state(2)
    s = src if config.num_source is None else subsample(src, config.num_source, int(seed_src))
    t = tgt if config.num_target is None else subsample(tgt, config.num_target, int(seed_tgt))

    if lam > 0:
        probs = pseudo_label(head, t, hard=config.hard_pseudo_labels)
        onehot = OneHotLabels.from_labels(s.labels, head.num_classes)

    cost = feature_cost_matrix(
        normalize_features(s, config.norm_mode),
        normalize_features(t, config.norm_mode),
    )
    if lam > 0:
        cost = combine_costs(cost, label_cost_matrix(onehot, probs), lam)

    if config.solver == "exact":
        result = solve_exact(cost)
    else:
        result = solve_sinkhorn(
            cost,
            epsilon=config.epsilon,
            max_iter=config.sinkhorn_max_iter,
            tol=config.sinkhorn_tol,
        )

    meta = {
        "m": s.n_samples,
        "n": t.n_samples,
        "label_weight": lam,
        "norm_mode": config.norm_mode.value,
        "solver": config.solver,
        "seed": config.seed,
        "iterations": result.iterations,
        "converged": result.converged,
        "wall_time_s": time.perf_counter() - t_start,
    }
    return MetricReport(metric_name="tetot", value=result.cost, meta=meta)
