"""Backbone wrappers and checkpoint handling.

A checkpoint is a ``torch.save`` dict with four keys: ``arch``,
``num_classes``, ``bottleneck_dim`` (``None`` for plain penultimate
features) and ``state_dict``.  Loading verifies the requested
architecture against the stored one so a resnet18 checkpoint cannot be
silently poured into a resnet50.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import torch
import torch.nn as nn
import torchvision.models as tvm

from .spec import SUPPORTED_ARCHS, ModelError

_BUILDERS = {
    "resnet18": tvm.resnet18,
    "resnet34": tvm.resnet34,
    "resnet50": tvm.resnet50,
    "densenet121": tvm.densenet121,
}


def _build_backbone(arch: str) -> tuple[nn.Module, int]:
    """Return the feature trunk and its output width, classifier removed."""
    if arch not in _BUILDERS:
        raise ModelError(f"unsupported architecture {arch!r}")
    net = _BUILDERS[arch](weights=None)
    if arch.startswith("resnet"):
        width = net.fc.in_features
        net.fc = nn.Identity()
    else:
        width = net.classifier.in_features
        net.classifier = nn.Identity()
    return net, width


class EmbeddingModel(nn.Module):
    """Backbone, optional linear bottleneck, linear classifier.

    ``forward`` returns ``(features, logits)``.  The feature vector is the
    bottleneck output when one is configured, otherwise the backbone's
    penultimate activation.  The classifier is the layer exported as the
    source head.
    """

    def __init__(self, arch: str, num_classes: int,
                 bottleneck_dim: Optional[int] = None):
        super().__init__()
        if num_classes < 2:
            raise ModelError(f"num_classes must be >= 2, got {num_classes}")
        if bottleneck_dim is not None and bottleneck_dim < 1:
            raise ModelError(f"bottleneck_dim must be positive, got {bottleneck_dim}")
        self.arch = arch
        self.num_classes = num_classes
        self.bottleneck_dim = bottleneck_dim
        self.backbone, trunk_width = _build_backbone(arch)
        if bottleneck_dim is not None:
            self.bottleneck = nn.Linear(trunk_width, bottleneck_dim)
            feat_width = bottleneck_dim
        else:
            self.bottleneck = None
            feat_width = trunk_width
        self.feature_dim = feat_width
        self.classifier = nn.Linear(feat_width, num_classes)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        z = self.backbone(x)
        if self.bottleneck is not None:
            z = self.bottleneck(z)
        return z, self.classifier(z)


def save_checkpoint(model: EmbeddingModel, path) -> None:
    payload = {
        "arch": model.arch,
        "num_classes": model.num_classes,
        "bottleneck_dim": model.bottleneck_dim,
        "state_dict": model.state_dict(),
    }
    torch.save(payload, Path(path))


def load_checkpoint(path, arch: str) -> EmbeddingModel:
    """Rebuild the model stored at ``path``, insisting it really is ``arch``."""
    path = Path(path)
    if not path.exists():
        raise ModelError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ModelError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "state_dict" not in payload:
        raise ModelError(f"checkpoint {path} is not an exporter checkpoint")
    stored = payload.get("arch")
    if stored != arch:
        raise ModelError(
            f"architecture mismatch: checkpoint holds {stored!r}, requested {arch!r}"
        )
    model = EmbeddingModel(arch, payload["num_classes"], payload.get("bottleneck_dim"))
    try:
        model.load_state_dict(payload["state_dict"])
    except Exception as exc:
        raise ModelError(f"checkpoint weights do not fit {arch}: {exc}") from exc
    model.eval()
    return model


def make_random_checkpoint(path, arch: str = "resnet18", num_classes: int = 2,
                           bottleneck_dim: Optional[int] = None,
                           seed: int = 0) -> EmbeddingModel:
    """Write a freshly initialised checkpoint, mainly for tests and demos."""
    if arch not in SUPPORTED_ARCHS:
        raise ModelError(f"unsupported architecture {arch!r}")
    torch.manual_seed(seed)
    model = EmbeddingModel(arch, num_classes, bottleneck_dim)
    model.eval()
    save_checkpoint(model, path)
    return model
