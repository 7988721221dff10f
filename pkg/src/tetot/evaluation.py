"""Ranking and correlation tooling over batches of metric results.

Covers the three downstream uses of a transferability score: pick the best
model for a fixed target, pick the best source domain for a fixed model,
and quantify agreement between a metric and ground-truth accuracy via the
Pearson coefficient. Batches are small (tens of candidates), so everything
here favors auditable arithmetic over throughput.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data_model import MetricReport
from .errors import DataError, InputError

__all__ = [
    "Candidate",
    "CorrelationReport",
    "pearson",
    "rank_candidates",
    "correlate_with_accuracy",
    "correlation_summary",
]

RANK_DIRECTIONS = ("lower_is_better", "higher_is_better")


@dataclass(frozen=True)
class Candidate:
    """One entry in a selection batch: a scored model or source domain."""

    candidate_id: str
    metric: MetricReport
    accuracy: Optional[float] = None

    def __post_init__(self):
        if not self.candidate_id:
            raise InputError("candidate_id must be a non-empty string")
        if self.accuracy is not None:
            if not np.isfinite(self.accuracy):
                raise DataError(f"accuracy must be finite, got {self.accuracy}")
            object.__setattr__(self, "accuracy", float(self.accuracy))


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson rho between a metric and accuracy, with the audited pairs."""

    rho: float
    n_points: int
    metric_name: str
    pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if abs(self.rho) > 1.0 + 1e-12:
            raise DataError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.n_points < 2:
            raise InputError(f"n_points must be >= 2, got {self.n_points}")
        object.__setattr__(
            self, "pairs", tuple((float(m), float(a)) for m, a in self.pairs)
        )

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "n_points": self.n_points,
            "metric_name": self.metric_name,
            "pairs": [list(p) for p in self.pairs],
        }


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation coefficient with population (divide-by-n) moments.

    Constant input raises instead of returning NaN: a NaN slipping into a
    batch report poisons every aggregate downstream.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or ys.ndim != 1 or xs.shape != ys.shape:
        raise InputError(
            f"xs and ys must be 1-D of equal length, got {xs.shape} and {ys.shape}"
        )
    if xs.shape[0] < 2:
        raise InputError(f"need at least 2 points, got {xs.shape[0]}")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DataError("correlation inputs must be finite")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = np.sqrt((xc * xc).mean())
    sy = np.sqrt((yc * yc).mean())
    if sx == 0.0:
        raise DataError("correlation undefined: xs is constant")
    if sy == 0.0:
        raise DataError("correlation undefined: ys is constant")
    return float((xc * yc).mean() / (sx * sy))


def _check_unique_ids(batch: Sequence[Candidate]) -> None:
    seen = set()
    for cand in batch:
        if cand.candidate_id in seen:
            raise InputError(f"duplicate candidate_id {cand.candidate_id!r}")
        seen.add(cand.candidate_id)


def rank_candidates(
    batch: Sequence[Candidate], direction: str = "lower_is_better"
) -> list:
    """Order candidate ids by metric value; the first id is the selection.

    Transferability and entropy scores rank with ``lower_is_better``;
    accuracy-like scores with ``higher_is_better``. Ties fall back to
    lexicographic candidate_id order in both directions, so a selection is
    reproducible even on degenerate batches.
    """
    if direction not in RANK_DIRECTIONS:
        raise InputError(
            f"direction must be one of {RANK_DIRECTIONS}, got {direction!r}"
        )
    batch = list(batch)
    if not batch:
        raise InputError("batch must be non-empty")
    _check_unique_ids(batch)
    sign = 1.0 if direction == "lower_is_better" else -1.0
    ordered = sorted(batch, key=lambda c: (sign * c.metric.value, c.candidate_id))
    return [c.candidate_id for c in ordered]


def correlate_with_accuracy(
    batch: Sequence[Candidate], metric_name: str
) -> CorrelationReport:
    """Pearson rho between metric values and ground-truth accuracies.

    Candidates without an accuracy are ignored; at least two must carry
    one. Every retained candidate's report must be of ``metric_name``, and
    pairs are recorded in candidate_id order so reruns emit identical
    audit records regardless of how the batch was assembled.
    """
    scored = sorted(
        (c for c in batch if c.accuracy is not None),
        key=lambda c: c.candidate_id,
    )
    if len(scored) < 2:
        raise InputError(
            f"need at least 2 candidates with accuracy, got {len(scored)}"
        )
    _check_unique_ids(scored)
    for cand in scored:
        if cand.metric.metric_name != metric_name:
            raise InputError(
                f"candidate {cand.candidate_id!r} carries metric "
                f"{cand.metric.metric_name!r}, expected {metric_name!r}"
            )
    values = [c.metric.value for c in scored]
    accs = [c.accuracy for c in scored]
    rho = pearson(values, accs)
    return CorrelationReport(
        rho=rho,
        n_points=len(scored),
        metric_name=metric_name,
        pairs=tuple(zip(values, accs)),
    )


def correlation_summary(batches: dict, metric_name: str) -> dict:
    """Correlations for several target domains, aggregated two ways.

    ``batches`` maps a domain name to its candidate list. Averaging the
    per-domain rhos and pooling all pairs into one rho answer different
    questions and can disagree, so both are reported rather than picking
    one silently.
    """
    if not batches:
        raise InputError("batches must be non-empty")
    per_domain = {}
    pooled_values = []
    pooled_accs = []
    for domain in sorted(batches):
        report = correlate_with_accuracy(batches[domain], metric_name)
        per_domain[domain] = report.rho
        for value, acc in report.pairs:
            pooled_values.append(value)
            pooled_accs.append(acc)
    return {
        "metric_name": metric_name,
        "per_domain": per_domain,
        "mean_rho": float(np.mean(list(per_domain.values()))),
        "pooled_rho": pearson(pooled_values, pooled_accs),
        "n_domains": len(per_domain),
        "n_points": len(pooled_values),
    }
