"""Baseline scores: prediction entropy and ground-truth accuracy.

Prediction entropy is the standard target-data-only comparison metric: the
mean Shannon entropy of the head's softmax predictions, in nats. Like the
transferability metric, lower is better. Accuracy on a labeled set is the
ground truth both estimators are judged against.
"""

from __future__ import annotations

import time

import numpy as np

from .data_model import ClassifierHead, EmbeddingSet, MetricReport
from .errors import InputError
from .metric import pseudo_label

__all__ = ["prediction_entropy", "transferability_ground_truth"]


def prediction_entropy(head: ClassifierHead, tgt: EmbeddingSet) -> MetricReport:
    """Mean prediction entropy of the head over a target set, in nats.

    Each sample contributes -sum_c p_c ln p_c with p = softmax(logits) on
    the raw features; p_c = 0 terms contribute 0 (they only arise from
    underflow, since the softmax itself is strictly positive). The average
    is one division of the summed entropies, so sample order cannot change
    the result.
    """
    t_start = time.perf_counter()
    probs = pseudo_label(head, tgt).probs
    plogp = np.zeros_like(probs)
    nz = probs > 0.0
    plogp[nz] = probs[nz] * np.log(probs[nz])
    value = float(-plogp.sum() / tgt.n_samples + 0.0)  # +0.0 avoids -0.0
    meta = {
        "n": tgt.n_samples,
        "num_classes": head.num_classes,
        "wall_time_s": time.perf_counter() - t_start,
    }
    return MetricReport(metric_name="entropy", value=value, meta=meta)


def transferability_ground_truth(
    head: ClassifierHead, labeled: EmbeddingSet
) -> MetricReport:
    """Head accuracy on a labeled set: the quantity the metrics estimate.

    Predictions are argmax over logits with ties broken by lowest class
    index, so repeated runs agree bit for bit.
    """
    t_start = time.perf_counter()
    if not labeled.is_labeled:
        raise InputError("ground-truth accuracy requires a labeled set")
    if head.dim != labeled.dim:
        raise InputError(
            f"head expects dim {head.dim}, features have dim {labeled.dim}"
        )
    pred = np.argmax(head.logits(labeled.features), axis=1)
    value = float(np.sum(pred == labeled.labels) / labeled.n_samples)
    meta = {
        "n": labeled.n_samples,
        "num_classes": head.num_classes,
        "wall_time_s": time.perf_counter() - t_start,
    }
    return MetricReport(metric_name="accuracy", value=value, meta=meta)
