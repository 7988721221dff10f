import itertools

import numpy as np
import pytest
from PIL import Image

import tetot_exporter as te


def _write_toy_dataset(root, per_class=4, size=48, seed=3):
    """Two-class folder of small PNGs: colored blobs on textured noise."""
    rng = np.random.default_rng(seed)
    for ci, cname in enumerate(["cat", "dog"]):
        d = root / cname
        d.mkdir(parents=True)
        for i in range(per_class):
            base = np.zeros((size, size, 3))
            base[..., ci] = 0.6
            yy, xx = np.mgrid[0:size, 0:size]
            cx = size // 4 + (size // 2) * ci
            blob = np.exp(-(((yy - size / 2) ** 2 + (xx - cx) ** 2) / 150.0))
            arr = base + 0.3 * blob[..., None] + rng.normal(0, 0.15, (size, size, 3))
            img = (np.clip(arr, 0, 1) * 255).astype(np.uint8)
            Image.fromarray(img).save(d / f"img_{i:02d}.png")
    return root


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    return _write_toy_dataset(tmp_path_factory.mktemp("toyset"))


@pytest.fixture(scope="session")
def ckpt_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "toy_resnet18.ckpt"
    te.make_random_checkpoint(path, "resnet18", num_classes=2,
                              bottleneck_dim=16, seed=1)
    return path


_counter = itertools.count()


@pytest.fixture(scope="session")
def make_spec(dataset_dir, ckpt_path, tmp_path_factory):
    """Factory for export jobs against the shared toy dataset/checkpoint."""
    out_root = tmp_path_factory.mktemp("exports")

    def build(**overrides):
        stem = out_root / f"run_{next(_counter):03d}"
        kwargs = dict(arch="resnet18", checkpoint=ckpt_path,
                      data_dir=dataset_dir, out_stem=stem,
                      batch_size=8, image_size=48)
        kwargs.update(overrides)
        return te.ExportSpec(**kwargs)

    return build


@pytest.fixture(scope="session")
def clean_export(make_spec):
    """One clean export of the toy dataset, shared across tests."""
    spec = make_spec()
    return spec, te.export_embeddings(spec)
