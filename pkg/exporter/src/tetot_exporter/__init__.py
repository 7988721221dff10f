"""Turn image folders and torchvision checkpoints into tetot's file formats."""

from .corruptions import (
    CORRUPTIONS,
    apply_corruption,
    corrupt_image,
    corruption_names,
    image_rng,
    severity_help,
)
from .export import export_embeddings, list_images
from .models import (
    EmbeddingModel,
    load_checkpoint,
    make_random_checkpoint,
    save_checkpoint,
)
from .spec import (
    SUPPORTED_ARCHS,
    DatasetError,
    ExporterError,
    ExportSpec,
    ModelError,
    SpecError,
)

__version__ = "0.1.0"

__all__ = [
    "CORRUPTIONS",
    "DatasetError",
    "EmbeddingModel",
    "ExporterError",
    "ExportSpec",
    "ModelError",
    "SpecError",
    "SUPPORTED_ARCHS",
    "apply_corruption",
    "corrupt_image",
    "corruption_names",
    "export_embeddings",
    "image_rng",
    "list_images",
    "load_checkpoint",
    "make_random_checkpoint",
    "save_checkpoint",
    "severity_help",
    "__version__",
]
