"""Readers and writers for the binary interchange formats and the CSV fallback.

All multi-byte fields are little-endian. Layouts:

* ``EMB1`` embeddings: magic ``TETOTEMB``, u32 version=1, u32 dtype code
  (1 = float32), u64 rows, u64 cols, then rows*cols float32 row-major.
* label sidecar (same stem, ``.lbl``): magic ``TETOTLBL``, u32 version=1,
  u64 count, u32 num_classes, then count i64 labels; -1 marks an unlabeled
  sample (a sidecar of all -1 loads as "no labels").
* ``HED1`` heads: magic ``TETOTHED``, u32 version=1, u64 K, u64 dim,
  K*dim float32 weights row-major, K float32 biases.
* ``STA1`` Gaussian statistics: magic ``TETOTSTA``, u32 version=1, u64 dim,
  u64 count, dim float64 means, dim*dim float64 covariance row-major.
* CSV fallback (``.csv`` extension): plain numeric CSV, one sample per row;
  an optional header row may declare a final ``label`` column.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .data_model import ClassifierHead, EmbeddingSet, STORAGE_DTYPE
from .errors import DataError, FormatError

if TYPE_CHECKING:
    from .gaussian import GaussianStats

__all__ = [
    "load_embedding_set",
    "save_embedding_set",
    "load_classifier_head",
    "save_classifier_head",
    "load_gaussian_stats",
    "save_gaussian_stats",
]

EMB_MAGIC = b"TETOTEMB"
LBL_MAGIC = b"TETOTLBL"
HED_MAGIC = b"TETOTHED"
STA_MAGIC = b"TETOTSTA"
FORMAT_VERSION = 1
DTYPE_F32 = 1


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file: expected {n} bytes for {what}, got {len(buf)}")
    return buf


def _check_header(f, magic: bytes, path: Path) -> None:
    got = f.read(len(magic))
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")


def _check_eof(f, path: Path) -> None:
    if f.read(1) != b"":
        raise FormatError(f"{path}: trailing bytes after payload")


def _label_sidecar_path(path: Path) -> Path:
    return path.with_suffix(".lbl")


def _load_labels(path: Path):
    """Read a TETOTLBL sidecar; returns (labels or None, num_classes, count)."""
    with open(path, "rb") as f:
        _check_header(f, LBL_MAGIC, path)
        count, num_classes = struct.unpack("<QI", _read_exact(f, 12, "label header"))
        payload = _read_exact(f, 8 * count, "labels")
        _check_eof(f, path)
    labels = np.frombuffer(payload, dtype="<i8").astype(np.int64)
    unlabeled = labels == -1
    if unlabeled.all():
        return None, int(num_classes), int(count)
    if unlabeled.any():
        raise DataError(f"{path}: mixing labeled and unlabeled samples is not supported")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise DataError(
            f"{path}: labels out of range [0, {num_classes}): "
            f"found [{labels.min()}, {labels.max()}]"
        )
    return labels, int(num_classes), int(count)


def _save_labels(path: Path, labels: np.ndarray, num_classes: int) -> None:
    with open(path, "wb") as f:
        f.write(LBL_MAGIC)
        f.write(struct.pack("<IQI", FORMAT_VERSION, len(labels), num_classes))
        f.write(np.asarray(labels, dtype="<i8").tobytes())


def _load_csv(path: Path) -> EmbeddingSet:
    with open(path, "r", newline="") as f:
        text = f.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise FormatError(f"{path}: empty CSV")

    has_label = False
    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        header = [h.strip().lower() for h in rows[0]]
        has_label = header[-1] == "label"
        start = 1
        if not has_label:
            raise FormatError(
                f"{path}: non-numeric header row must declare a final 'label' column"
            )
    body = rows[start:]
    if not body:
        raise FormatError(f"{path}: CSV has a header but no data rows")

    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric CSV value ({exc})") from exc
    if data.ndim != 2 or data.shape[1] < 1:
        raise FormatError(f"{path}: CSV rows must have a fixed positive width")

    labels = None
    if has_label:
        label_col = data[:, -1]
        if not np.all(label_col == np.round(label_col)):
            raise DataError(f"{path}: label column must contain integers")
        labels = label_col.astype(np.int64)
        data = data[:, :-1]
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: non-finite feature values")
    return EmbeddingSet(features=data, labels=labels, domain_id=path.stem)


def load_embedding_set(path) -> EmbeddingSet:
    """Load an EMB1 file (or ``.csv`` fallback), attaching any label sidecar.

    Raises :class:`FormatError` for structural problems (magic, version,
    dtype code, truncation) and :class:`DataError` for non-finite values or
    out-of-range labels.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_csv(path)

    with open(path, "rb") as f:
        _check_header(f, EMB_MAGIC, path)
        dtype_code, rows, cols = struct.unpack("<IQQ", _read_exact(f, 20, "shape header"))
        if dtype_code != DTYPE_F32:
            raise FormatError(f"{path}: unsupported dtype code {dtype_code}")
        if rows < 1 or cols < 1:
            raise FormatError(f"{path}: invalid shape {rows}x{cols}")
        payload = _read_exact(f, 4 * rows * cols, "feature payload")
        _check_eof(f, path)
    features = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)
    if not np.all(np.isfinite(features)):
        raise DataError(f"{path}: non-finite feature values")

    labels = None
    num_classes = None
    sidecar = _label_sidecar_path(path)
    if sidecar.exists():
        labels, num_classes, count = _load_labels(sidecar)
        if count != rows:
            raise FormatError(f"{sidecar}: {count} labels for {rows} samples")
    return EmbeddingSet(
        features=features, labels=labels, domain_id=path.stem, num_classes=num_classes
    )


def save_embedding_set(emb_set: EmbeddingSet, path) -> None:
    """Write an EMB1 file; labeled sets also get a ``.lbl`` sidecar.

    Features are stored as float32, so ``load(save(s))`` is the identity for
    sets already at storage precision.
    """
    path = Path(path)
    data = np.ascontiguousarray(emb_set.features.astype(STORAGE_DTYPE))
    with open(path, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(
            struct.pack(
                "<IIQQ", FORMAT_VERSION, DTYPE_F32, emb_set.n_samples, emb_set.dim
            )
        )
        f.write(data.astype("<f4").tobytes())
    if emb_set.labels is not None:
        _save_labels(_label_sidecar_path(path), emb_set.labels, emb_set.num_classes)


def load_classifier_head(path) -> ClassifierHead:
    """Load a HED1 classifier head file."""
    path = Path(path)
    with open(path, "rb") as f:
        _check_header(f, HED_MAGIC, path)
        k, dim = struct.unpack("<QQ", _read_exact(f, 16, "head shape"))
        if k < 2 or dim < 1:
            raise FormatError(f"{path}: invalid head shape K={k}, dim={dim}")
        w = _read_exact(f, 4 * k * dim, "weights")
        b = _read_exact(f, 4 * k, "biases")
        _check_eof(f, path)
    weights = np.frombuffer(w, dtype="<f4").reshape(k, dim).astype(np.float64)
    bias = np.frombuffer(b, dtype="<f4").astype(np.float64)
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise DataError(f"{path}: non-finite head parameters")
    return ClassifierHead(weights=weights, bias=bias)


def save_classifier_head(head: ClassifierHead, path) -> None:
    """Write a HED1 classifier head file (float32 storage)."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(HED_MAGIC)
        f.write(struct.pack("<IQQ", FORMAT_VERSION, head.num_classes, head.dim))
        f.write(np.ascontiguousarray(head.weights, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(head.bias, dtype="<f4").tobytes())


def load_gaussian_stats(path) -> "GaussianStats":
    """Load an STA1 statistics file (float64 mean and covariance)."""
    from .gaussian import GaussianStats

    path = Path(path)
    with open(path, "rb") as f:
        _check_header(f, STA_MAGIC, path)
        dim, count = struct.unpack("<QQ", _read_exact(f, 16, "stats shape"))
        if dim < 1 or count < 2:
            raise FormatError(f"{path}: invalid stats shape dim={dim}, count={count}")
        mean_buf = _read_exact(f, 8 * dim, "mean")
        cov_buf = _read_exact(f, 8 * dim * dim, "covariance")
        _check_eof(f, path)
    mean = np.frombuffer(mean_buf, dtype="<f8").astype(np.float64)
    cov = np.frombuffer(cov_buf, dtype="<f8").reshape(dim, dim).astype(np.float64)
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise DataError(f"{path}: non-finite statistics")
    return GaussianStats(mean=mean, cov=cov, count=int(count))


def save_gaussian_stats(stats: "GaussianStats", path) -> None:
    """Write an STA1 statistics file."""
    path = Path(path)
    with open(path, "wb") as f:
        f.write(STA_MAGIC)
        f.write(struct.pack("<IQQ", FORMAT_VERSION, stats.dim, stats.count))
        f.write(np.ascontiguousarray(stats.mean, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(stats.cov, dtype="<f8").tobytes())
