"""Export job description and validation."""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Optional


class ExporterError(Exception):
    """Base class for exporter failures."""


class SpecError(ExporterError):
    """An export job description is malformed."""


class ModelError(ExporterError):
    """Architecture or checkpoint mismatch."""


class DatasetError(ExporterError):
    """The image folder cannot be traversed."""


SUPPORTED_ARCHS = ("resnet18", "resnet34", "resnet50", "densenet121")


@dataclasses.dataclass(frozen=True)
class ExportSpec:
    """Everything needed to turn an image folder into a .emb/.lbl/.hed triple.

    ``data_dir`` must contain one subdirectory per class; the sorted
    subdirectory order defines the integer labels, so it has to match the
    class order the checkpoint was trained with.  ``out_stem`` is the
    extension-less path the three output files share.  When ``corruption``
    is set a perturbation is applied to every image in memory before
    inference; ``severity`` then selects its strength and must sit in
    ``[1, 5]``.
    """

    arch: str
    checkpoint: Path
    data_dir: Path
    out_stem: Path
    batch_size: int = 32
    device: str = "cpu"
    corruption: Optional[str] = None
    severity: Optional[int] = None
    seed: int = 0
    image_size: int = 224

    def __post_init__(self):
        object.__setattr__(self, "checkpoint", Path(self.checkpoint))
        object.__setattr__(self, "data_dir", Path(self.data_dir))
        object.__setattr__(self, "out_stem", Path(self.out_stem))
        if self.arch not in SUPPORTED_ARCHS:
            raise SpecError(
                f"unsupported architecture {self.arch!r}; "
                f"expected one of {', '.join(SUPPORTED_ARCHS)}"
            )
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise SpecError(f"batch_size must be a positive integer, got {self.batch_size}")
        if int(self.image_size) != self.image_size or self.image_size < 16:
            raise SpecError(f"image_size must be an integer >= 16, got {self.image_size}")
        if self.corruption is not None:
            if self.severity is None:
                raise SpecError("severity is required when a corruption is requested")
            if int(self.severity) != self.severity or not 1 <= self.severity <= 5:
                raise SpecError(f"severity must be an integer in [1, 5], got {self.severity}")
        elif self.severity is not None:
            raise SpecError("severity given without a corruption name")
