"""Core domain types: embedding sets, classifier heads, configs, and reports.

Conventions used throughout the package:

* features are stored on disk as 32-bit floats, all in-memory computation
  is 64-bit;
* types are immutable after construction (arrays are marked read-only), so
  they can be shared freely across threads;
* every constructor validates its invariants and raises
  :class:`~tetot.errors.InputError` / :class:`~tetot.errors.DataError` on
  violation.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InputError

__all__ = [
    "EmbeddingSet",
    "ClassifierHead",
    "NormalizationMode",
    "TetotConfig",
    "MetricReport",
    "subsample",
    "normalize_features",
    "generate_synthetic_fixture",
]

#: dtype used for on-disk payloads; computation always promotes to float64.
STORAGE_DTYPE = np.float32


def _as_readonly_f64(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        raise DataError(f"{name} contains non-finite values")
    out = np.ascontiguousarray(out)
    out.flags.writeable = False
    return out


class NormalizationMode(enum.Enum):
    """Feature normalization applied per domain before building feature costs."""

    NONE = "none"
    L2_PER_SAMPLE = "l2_per_sample"
    ZSCORE_PER_DOMAIN = "zscore_per_domain"

    @classmethod
    def from_name(cls, name: "str | NormalizationMode") -> "NormalizationMode":
        """Accept canonical values plus the short CLI spellings l2 / zscore."""
        if isinstance(name, cls):
            return name
        aliases = {"l2": cls.L2_PER_SAMPLE, "zscore": cls.ZSCORE_PER_DOMAIN}
        key = str(name).lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            valid = [m.value for m in cls] + list(aliases)
            raise InputError(f"unknown normalization mode {name!r}; expected one of {valid}")


@dataclass(frozen=True)
class EmbeddingSet:
    """Empirical distribution of one domain: encoder outputs plus optional labels.

    Parameters
    ----------
    features : ndarray, shape (n_samples, dim)
        Encoder outputs, one sample per row. Stored as float64 internally.
    labels : ndarray of int or None
        Class ids in ``[0, num_classes)``; ``None`` marks an unlabeled set.
    domain_id : str
        Free-form tag naming the domain.
    num_classes : int or None
        Number of classes ``K``. Required whenever labels are present; may be
        ``None`` for unlabeled sets whose class count is unknown.
    """

    features: np.ndarray
    labels: Optional[np.ndarray] = None
    domain_id: str = ""
    num_classes: Optional[int] = None

    def __post_init__(self):
        feats = _as_readonly_f64(self.features, "features")
        if feats.ndim != 2:
            raise InputError(f"features must be 2-D, got shape {feats.shape}")
        if feats.shape[0] < 1 or feats.shape[1] < 1:
            raise InputError(f"features must be at least 1x1, got shape {feats.shape}")
        object.__setattr__(self, "features", feats)

        if self.num_classes is not None and self.num_classes < 1:
            raise InputError(f"num_classes must be positive, got {self.num_classes}")

        if self.labels is not None:
            labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64))
            if labels.shape != (feats.shape[0],):
                raise InputError(
                    f"labels must have shape ({feats.shape[0]},), got {labels.shape}"
                )
            k = self.num_classes
            if k is None:
                k = int(labels.max()) + 1
                object.__setattr__(self, "num_classes", k)
            if labels.min() < 0 or labels.max() >= k:
                raise DataError(
                    f"labels must lie in [0, {k}), got range "
                    f"[{labels.min()}, {labels.max()}]"
                )
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def with_features(self, features: np.ndarray) -> "EmbeddingSet":
        """Copy of this set with replaced features (labels and tags kept)."""
        return replace(self, features=features)


@dataclass(frozen=True)
class ClassifierHead:
    """Linear classifier head: ``logits = weights @ x + bias``.

    weights has shape (K, dim), bias has shape (K,). Softmax over the logits
    yields the class probability vector.
    """

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _as_readonly_f64(self.weights, "weights")
        b = _as_readonly_f64(self.bias, "bias")
        if w.ndim != 2:
            raise InputError(f"weights must be 2-D, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise InputError(f"bias must have shape ({w.shape[0]},), got {b.shape}")
        if w.shape[0] < 2:
            raise InputError(f"head needs at least 2 classes, got {w.shape[0]}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def logits(self, features: np.ndarray) -> np.ndarray:
        """Raw logits for a batch of feature rows, shape (n, K)."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[1] != self.dim:
            raise InputError(
                f"feature dim {features.shape[1]} does not match head dim {self.dim}"
            )
        return features @ self.weights.T + self.bias


@dataclass(frozen=True)
class TetotConfig:
    """Settings for one transferability-metric computation.

    ``label_weight`` is the coefficient on the label cost (the CLI exposes it
    as ``--lambda``). ``num_source`` / ``num_target`` of ``None`` mean "use
    all available samples".
    """

    label_weight: float = 1.0
    norm_mode: NormalizationMode = NormalizationMode.L2_PER_SAMPLE
    num_source: Optional[int] = None
    num_target: Optional[int] = None
    seed: int = 0
    solver: str = "exact"
    epsilon: Optional[float] = None
    sinkhorn_max_iter: int = 10000
    sinkhorn_tol: float = 1e-9
    hard_pseudo_labels: bool = False
    cov_jitter: float = 0.0

    def __post_init__(self):
        if self.label_weight < 0:
            raise InputError(f"label_weight must be >= 0, got {self.label_weight}")
        if self.cov_jitter < 0:
            raise InputError(f"cov_jitter must be >= 0, got {self.cov_jitter}")
        for name in ("num_source", "num_target"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise InputError(f"{name} must be >= 1 or None, got {v}")
        if self.solver not in ("exact", "sinkhorn"):
            raise InputError(f"solver must be 'exact' or 'sinkhorn', got {self.solver!r}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise InputError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "norm_mode", NormalizationMode.from_name(self.norm_mode))

    def to_dict(self) -> dict:
        """JSON-friendly snapshot used in CLI run records."""
        return {
            "label_weight": self.label_weight,
            "norm_mode": self.norm_mode.value,
            "num_source": self.num_source,
            "num_target": self.num_target,
            "seed": self.seed,
            "solver": self.solver,
            "epsilon": self.epsilon,
            "sinkhorn_max_iter": self.sinkhorn_max_iter,
            "sinkhorn_tol": self.sinkhorn_tol,
            "hard_pseudo_labels": self.hard_pseudo_labels,
            "cov_jitter": self.cov_jitter,
        }


VALID_METRIC_NAMES = ("tetot", "tetot_approx", "entropy", "accuracy")


@dataclass(frozen=True)
class MetricReport:
    """Named scalar metric value plus computation metadata."""

    metric_name: str
    value: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.metric_name not in VALID_METRIC_NAMES:
            raise InputError(
                f"metric_name must be one of {VALID_METRIC_NAMES}, got {self.metric_name!r}"
            )
        if not np.isfinite(self.value):
            raise DataError(f"metric value must be finite, got {self.value}")
        object.__setattr__(self, "value", float(self.value))

    def to_dict(self) -> dict:
        return {"metric_name": self.metric_name, "value": self.value, "meta": dict(self.meta)}


def subsample(emb_set: EmbeddingSet, k: int, seed: int) -> EmbeddingSet:
    """Draw ``min(k, n_samples)`` rows uniformly without replacement.

    Deterministic for a fixed seed; labels follow the same index selection.
    Asking for more rows than available degrades to all rows with a warning,
    so sweep scripts over many domains never abort.
    """
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    n = emb_set.n_samples
    if k > n:
        warnings.warn(
            f"requested {k} samples from {emb_set.domain_id or 'set'} with only {n}; using all",
            stacklevel=2,
        )
        k = n
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    labels = emb_set.labels[idx] if emb_set.labels is not None else None
    return EmbeddingSet(
        features=emb_set.features[idx],
        labels=labels,
        domain_id=emb_set.domain_id,
        num_classes=emb_set.num_classes,
    )


def normalize_features(emb_set: EmbeddingSet, mode: NormalizationMode) -> EmbeddingSet:
    """Normalize one domain's features using statistics of that set alone.

    ``l2_per_sample`` divides each row by its Euclidean norm (zero rows pass
    through with a warning); ``zscore_per_domain`` centers each column and
    divides by its population standard deviation (zero-variance columns are
    only centered, with a warning). Statistics are never pooled across
    domains.
    """
    mode = NormalizationMode.from_name(mode)
    if mode is NormalizationMode.NONE:
        return emb_set

    x = emb_set.features
    if mode is NormalizationMode.L2_PER_SAMPLE:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        zero_rows = norms[:, 0] == 0.0
        if zero_rows.any():
            warnings.warn(
                f"{int(zero_rows.sum())} zero-norm rows left unchanged by l2 normalization",
                stacklevel=2,
            )
        safe = np.where(norms == 0.0, 1.0, norms)
        return emb_set.with_features(x / safe)

    # zscore_per_domain, population (divide-by-n) convention
    mean = x.mean(axis=0, keepdims=True)
    std = x.std(axis=0, keepdims=True)
    zero_cols = std[0] == 0.0
    if zero_cols.any():
        warnings.warn(
            f"{int(zero_cols.sum())} zero-variance columns left centered by z-scoring",
            stacklevel=2,
        )
    safe = np.where(std == 0.0, 1.0, std)
    return emb_set.with_features((x - mean) / safe)


def _quantize_to_storage(x: np.ndarray) -> np.ndarray:
    # round-trip through float32 so in-memory fixtures match their saved form
    return x.astype(STORAGE_DTYPE).astype(np.float64)


def _head_accuracy(head: ClassifierHead, emb_set: EmbeddingSet) -> float:
    logits = head.logits(emb_set.features)
    pred = np.argmax(logits, axis=1)
    return float(np.mean(pred == emb_set.labels))


def generate_synthetic_fixture(
    dim: int,
    num_classes: int,
    shift_levels: Sequence[float],
    n_per_domain: int,
    seed: int,
):
    """Build a deterministic synthetic benchmark for end-to-end checks.

    The source domain is a mixture of ``num_classes`` isotropic Gaussian
    clusters; the returned head is the nearest-mean classifier for those
    clusters. The target domains all share one sample draw (labels and base
    noise, independent of the source); shift level ``s`` translates the
    cluster means along a common random direction and inflates the noise by
    ``1 + 0.15 s``. Between-level differences therefore isolate the shift
    itself, and head accuracy falls with the level.

    Returns
    -------
    source : EmbeddingSet
        Labeled source domain.
    targets : list of EmbeddingSet
        One labeled domain per entry of ``shift_levels``.
    head : ClassifierHead
        Linear head fit to the source clusters.
    true_accuracies : list of float
        Head accuracy on each target, recomputable exactly from the returned
        sets (quantized to storage precision, so saving and reloading does
        not change them).
    """
    if dim < 2:
        raise InputError(f"dim must be >= 2, got {dim}")
    if num_classes < 2:
        raise InputError(f"num_classes must be >= 2, got {num_classes}")
    if n_per_domain < 50:
        raise InputError(f"n_per_domain must be >= 50, got {n_per_domain}")
    shift_levels = [float(s) for s in shift_levels]

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cluster_sigma = 1.0
    separation = 3.0

    # well-separated class means: orthonormal directions scaled to `separation`
    raw = rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(raw)
    means = separation * q[:num_classes]

    head_w = _quantize_to_storage(means)
    head = ClassifierHead(
        weights=head_w,
        bias=_quantize_to_storage(-0.5 * np.sum(head_w**2, axis=1)),
    )

    shift_dir = rng.standard_normal(dim)
    shift_dir /= np.linalg.norm(shift_dir)
    noise_growth = 0.15

    def assemble(tag, labels, noise, shift):
        feats = (
            means[labels]
            + shift * shift_dir
            + cluster_sigma * (1.0 + noise_growth * shift) * noise
        )
        return EmbeddingSet(
            features=_quantize_to_storage(feats),
            labels=labels,
            domain_id=tag,
            num_classes=num_classes,
        )

    source = assemble(
        "source",
        rng.integers(0, num_classes, size=n_per_domain),
        rng.standard_normal((n_per_domain, dim)),
        0.0,
    )
    # targets share one draw: differences between shift levels then reflect
    # the shift alone, not fresh sampling noise, so accuracy falls smoothly
    # with the level instead of wobbling by a few points per domain
    tgt_labels = rng.integers(0, num_classes, size=n_per_domain)
    tgt_noise = rng.standard_normal((n_per_domain, dim))
    targets = [
        assemble(f"target_{i:02d}", tgt_labels, tgt_noise, s)
        for i, s in enumerate(shift_levels)
    ]
    true_accuracies = [_head_accuracy(head, t) for t in targets]
    return source, targets, head, true_accuracies
