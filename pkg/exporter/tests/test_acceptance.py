"""End-to-end checks that the exported files mean what they claim.

Each test prints one [PASS]/[FAIL] line with the measured margin so a full
run reads as a short report.
"""

import sys

import numpy as np
import pytest
import torch
from scipy.stats import spearmanr

from tetot import (
    compute_tetot,
    load_classifier_head,
    load_embedding_set,
    transferability_ground_truth,
)

import tetot_exporter as te
from tetot_exporter.export import _load_image, list_images

_CAPTURE = None


@pytest.fixture(autouse=True)
def _live_summary(capfd):
    # route the verdict lines past pytest's fd-level capture
    global _CAPTURE
    _CAPTURE = capfd
    yield
    _CAPTURE = None


def report(ok, label, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    if _CAPTURE is not None:
        with _CAPTURE.disabled():
            print(line, flush=True)
    else:
        print(line, file=sys.__stdout__, flush=True)
    assert ok, line


def test_exported_triple_matches_export_environment(clean_export, dataset_dir):
    """Accuracy and softmax from the saved files agree with the live model."""
    spec, summary = clean_export
    model = te.load_checkpoint(spec.checkpoint, spec.arch)
    entries, _ = list_images(dataset_dir)
    batch = np.stack([_load_image(p, spec.image_size) for p, _ in entries])
    labels = np.array([lab for _, lab in entries])
    with torch.no_grad():
        _, logits = model(torch.from_numpy(batch.transpose(0, 3, 1, 2)))
    logits = logits.numpy().astype(np.float64)
    live_acc = float(np.mean(np.argmax(logits, axis=1) == labels))
    shifted = logits - logits.max(axis=1, keepdims=True)
    live_probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)

    emb = load_embedding_set(summary["embeddings"])
    head = load_classifier_head(summary["head"])
    file_acc = transferability_ground_truth(head, emb).value
    file_logits = emb.features @ head.weights.T + head.bias
    file_shift = file_logits - file_logits.max(axis=1, keepdims=True)
    file_probs = np.exp(file_shift) / np.exp(file_shift).sum(axis=1, keepdims=True)

    acc_gap = abs(live_acc - file_acc)
    prob_gap = float(np.max(np.abs(live_probs - file_probs)))
    report(acc_gap <= 1e-4 and prob_gap <= 1e-4,
           "export consistency",
           f"accuracy gap {acc_gap:.2e}, max softmax gap {prob_gap:.2e} "
           f"(tolerance 1e-4)")


def test_tetot_tracks_corruption_severity(clean_export, make_spec):
    """Harsher corruption must score as a harder transfer, not an easier one."""
    _, summary = clean_export
    src = load_embedding_set(summary["embeddings"])
    head = load_classifier_head(summary["head"])

    corruptions = ("gaussian_noise", "gaussian_blur", "contrast")
    severities = np.arange(1, 6)
    rhos = []
    for name in corruptions:
        scores = []
        for sev in severities:
            out = te.export_embeddings(make_spec(corruption=name,
                                                 severity=int(sev)))
            tgt = load_embedding_set(out["embeddings"])
            scores.append(compute_tetot(src, tgt, head).value)
        rhos.append(spearmanr(severities, scores).statistic)

    mean_rho = float(np.mean(rhos))
    detail = ", ".join(f"{n} {r:+.2f}" for n, r in zip(corruptions, rhos))
    report(mean_rho >= 0.8,
           "severity tracking",
           f"mean spearman {mean_rho:+.3f} over ({detail}); threshold +0.8")
