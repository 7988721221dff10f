import numpy as np
import pytest
from PIL import Image

import tetot_exporter as te

EXPECTED_NAMES = {
    "brightness", "contrast", "spatter", "saturate", "elastic_transform",
    "gaussian_blur", "defocus_blur", "zoom_blur", "gaussian_noise",
    "shot_noise", "impulse_noise", "speckle_noise",
}


@pytest.fixture(scope="module")
def img():
    rng = np.random.default_rng(0)
    return rng.random((64, 64, 3)).astype(np.float32)


def test_registry_is_complete():
    assert set(te.corruption_names()) == EXPECTED_NAMES
    assert len(te.CORRUPTIONS) == 12


@pytest.mark.parametrize("name", sorted(EXPECTED_NAMES))
def test_output_contract(name, img):
    out = te.corrupt_image(img, name, 3, te.image_rng(0, "x.png"))
    assert out.shape == img.shape
    assert out.dtype == np.float32
    assert out.min() >= 0.0 and out.max() <= 1.0
    assert not np.array_equal(out, img)


@pytest.mark.parametrize("name", sorted(EXPECTED_NAMES))
def test_zero_strength_is_identity(name, img):
    out = te.corrupt_image(img, name, 0, te.image_rng(0, "x.png"))
    assert np.array_equal(out, img)
    assert out is not img  # caller keeps an untouched original


@pytest.mark.parametrize("name", sorted(EXPECTED_NAMES))
def test_fixed_seed_is_reproducible(name, img):
    a = te.corrupt_image(img, name, 4, te.image_rng(5, "a/b.png"))
    b = te.corrupt_image(img, name, 4, te.image_rng(5, "a/b.png"))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("name", ["gaussian_noise", "shot_noise",
                                  "impulse_noise", "speckle_noise", "spatter",
                                  "elastic_transform"])
def test_noise_streams_are_path_keyed(name, img):
    a = te.corrupt_image(img, name, 3, te.image_rng(5, "cat/one.png"))
    b = te.corrupt_image(img, name, 3, te.image_rng(5, "cat/two.png"))
    assert not np.array_equal(a, b)


def test_gaussian_noise_strength_grows(img):
    # pixel distortion must climb strictly through the five levels
    l2 = [np.linalg.norm(te.corrupt_image(img, "gaussian_noise", s,
                                          te.image_rng(0, "x.png")) - img)
          for s in range(1, 6)]
    assert all(l2[i] < l2[i + 1] for i in range(4)), l2


def test_unknown_name_rejected(img):
    with pytest.raises(te.SpecError, match="unknown corruption"):
        te.corrupt_image(img, "fog", 3, te.image_rng(0, "x.png"))


def test_name_normalization(img):
    a = te.corrupt_image(img, "gaussian noise", 2, te.image_rng(0, "x.png"))
    b = te.corrupt_image(img, "Gaussian-Noise", 2, te.image_rng(0, "x.png"))
    assert np.array_equal(a, b)


def test_bad_severity_rejected(img):
    with pytest.raises(te.SpecError, match="severity"):
        te.corrupt_image(img, "contrast", 6, te.image_rng(0, "x.png"))
    with pytest.raises(te.SpecError, match="severity"):
        te.corrupt_image(img, "contrast", -1, te.image_rng(0, "x.png"))


def test_grayscale_shape_rejected(img):
    with pytest.raises(te.SpecError, match="expected an"):
        te.corrupt_image(img[..., 0], "contrast", 1, te.image_rng(0, "x.png"))


def test_severity_help_mentions_every_corruption():
    text = te.severity_help()
    for name in EXPECTED_NAMES:
        assert name in text


def test_apply_corruption_preserves_layout(dataset_dir, tmp_path):
    out = te.apply_corruption(dataset_dir, tmp_path / "noisy",
                              "impulse_noise", 2, seed=1)
    assert out["classes"] == ["cat", "dog"]
    assert len(out["written"]) == 8
    for cname in ("cat", "dog"):
        src_names = sorted(p.name for p in (dataset_dir / cname).iterdir())
        dst_names = sorted(p.name for p in (tmp_path / "noisy" / cname).iterdir())
        assert dst_names == src_names
    # pixels actually changed
    a = np.asarray(Image.open(dataset_dir / "cat" / "img_00.png"))
    b = np.asarray(Image.open(tmp_path / "noisy" / "cat" / "img_00.png"))
    assert a.shape == b.shape
    assert not np.array_equal(a, b)


def test_apply_corruption_is_deterministic(dataset_dir, tmp_path):
    te.apply_corruption(dataset_dir, tmp_path / "a", "gaussian_noise", 3, seed=2)
    te.apply_corruption(dataset_dir, tmp_path / "b", "gaussian_noise", 3, seed=2)
    for rel in ("cat/img_01.png", "dog/img_02.png"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_apply_corruption_rejects_unknown_name(dataset_dir, tmp_path):
    with pytest.raises(te.SpecError, match="unknown corruption"):
        te.apply_corruption(dataset_dir, tmp_path / "x", "motion_blur", 1)


def test_apply_corruption_needs_real_severity(dataset_dir, tmp_path):
    # the no-op level is for in-memory comparisons, not dataset copies
    with pytest.raises(te.SpecError, match=r"\[1, 5\]"):
        te.apply_corruption(dataset_dir, tmp_path / "x", "contrast", 0)


def test_corrupted_copy_feeds_back_into_export(dataset_dir, tmp_path, ckpt_path):
    """An exported corrupted copy matches the in-memory corruption path."""
    te.apply_corruption(dataset_dir, tmp_path / "noisy", "gaussian_noise", 4, seed=0)
    spec_disk = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path,
                              data_dir=tmp_path / "noisy",
                              out_stem=tmp_path / "disk", image_size=48)
    spec_mem = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path,
                             data_dir=dataset_dir, out_stem=tmp_path / "mem",
                             image_size=48, corruption="gaussian_noise",
                             severity=4, seed=0)
    from tetot import load_embedding_set

    disk = load_embedding_set(te.export_embeddings(spec_disk)["embeddings"])
    mem = load_embedding_set(te.export_embeddings(spec_mem)["embeddings"])
    # the disk path quantizes pixels to uint8, so allow a small drift
    rel = np.linalg.norm(disk.features - mem.features) / np.linalg.norm(mem.features)
    assert rel < 0.05, rel
