"""Run a model over an image folder and save the embedding triple."""

from __future__ import annotations

import logging
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from tetot import (
    ClassifierHead,
    EmbeddingSet,
    save_classifier_head,
    save_embedding_set,
)

from .corruptions import corrupt_image, image_rng
from .models import load_checkpoint
from .spec import DatasetError, ExportSpec

log = logging.getLogger("tetot_exporter")

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp"}


def list_images(data_dir) -> tuple[list[tuple[Path, int]], list[str]]:
    """Enumerate an image-folder dataset in a reproducible order.

    Classes are the sorted subdirectory names of ``data_dir``; within each
    class, files sort by name.  Returns ``(entries, class_names)`` where
    each entry is ``(path, label)``.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DatasetError(f"dataset directory not found: {data_dir}")
    class_dirs = sorted(p for p in data_dir.iterdir() if p.is_dir())
    if not class_dirs:
        raise DatasetError(f"no class subdirectories under {data_dir}")
    entries = []
    for label, cdir in enumerate(class_dirs):
        for path in sorted(cdir.iterdir()):
            if path.is_file() and path.suffix.lower() in _IMAGE_SUFFIXES:
                entries.append((path, label))
    if not entries:
        raise DatasetError(f"no image files under {data_dir}")
    return entries, [c.name for c in class_dirs]


def _load_image(path: Path, size: int) -> np.ndarray:
    """Decode to a float32 (size, size, 3) array in [0, 1]."""
    with Image.open(path) as im:
        im = im.convert("RGB").resize((size, size), Image.BILINEAR)
        return np.asarray(im, dtype=np.float32) / 255.0


def export_embeddings(spec: ExportSpec) -> dict:
    """Embed every readable image under ``spec.data_dir``.

    Writes ``out_stem.emb`` (raw float32 feature rows, one per image in
    traversal order, unnormalized), ``out_stem.lbl`` (folder-derived
    labels) and ``out_stem.hed`` (the model's final linear layer).  Files
    land via temp-file rename so a crash cannot leave a half-written
    triple.  Unreadable images are skipped with a warning and reported in
    the returned summary; everything else is deterministic for a fixed
    spec.
    """
    model = load_checkpoint(spec.checkpoint, spec.arch)
    entries, class_names = list_images(spec.data_dir)
    if len(class_names) > model.num_classes:
        raise DatasetError(
            f"dataset has {len(class_names)} classes but the checkpoint head "
            f"only covers {model.num_classes}"
        )

    device = torch.device(spec.device)
    model = model.to(device)
    torch.set_grad_enabled(False)

    feats: list[np.ndarray] = []
    labels: list[int] = []
    skipped: list[str] = []
    batch_imgs: list[np.ndarray] = []
    batch_labels: list[int] = []

    def flush():
        if not batch_imgs:
            return
        stack = np.stack(batch_imgs).transpose(0, 3, 1, 2)
        x = torch.from_numpy(stack).to(device)
        z, _ = model(x)
        feats.append(z.cpu().numpy().astype(np.float32))
        labels.extend(batch_labels)
        batch_imgs.clear()
        batch_labels.clear()

    for path, label in entries:
        rel = str(path.relative_to(spec.data_dir))
        try:
            arr = _load_image(path, spec.image_size)
        except Exception as exc:
            warnings.warn(f"skipping unreadable image {path}: {exc}", stacklevel=2)
            log.warning("skipping unreadable image %s: %s", path, exc)
            skipped.append(rel)
            continue
        if spec.corruption is not None:
            arr = corrupt_image(arr, spec.corruption, spec.severity,
                                image_rng(spec.seed, rel))
        batch_imgs.append(arr)
        batch_labels.append(label)
        if len(batch_imgs) >= spec.batch_size:
            flush()
    flush()

    if not feats:
        raise DatasetError(f"no readable images under {spec.data_dir}")
    features = np.concatenate(feats, axis=0)

    emb_set = EmbeddingSet(
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        domain_id=spec.data_dir.name,
        num_classes=model.num_classes,
    )
    head = ClassifierHead(
        weights=model.classifier.weight.detach().cpu().numpy().astype(np.float64),
        bias=model.classifier.bias.detach().cpu().numpy().astype(np.float64),
    )

    out_stem = spec.out_stem
    out_stem.parent.mkdir(parents=True, exist_ok=True)
    emb_path = out_stem.with_suffix(".emb")
    lbl_path = out_stem.with_suffix(".lbl")
    hed_path = out_stem.with_suffix(".hed")
    with tempfile.TemporaryDirectory(dir=out_stem.parent) as tmp:
        tmp_stem = Path(tmp) / out_stem.name
        save_embedding_set(emb_set, tmp_stem.with_suffix(".emb"))
        save_classifier_head(head, tmp_stem.with_suffix(".hed"))
        os.replace(tmp_stem.with_suffix(".emb"), emb_path)
        os.replace(tmp_stem.with_suffix(".lbl"), lbl_path)
        os.replace(tmp_stem.with_suffix(".hed"), hed_path)

    return {
        "embeddings": str(emb_path),
        "labels": str(lbl_path),
        "head": str(hed_path),
        "rows": int(features.shape[0]),
        "dim": int(features.shape[1]),
        "num_classes": int(model.num_classes),
        "classes": class_names,
        "skipped": skipped,
    }
