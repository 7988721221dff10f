import numpy as np
import pytest
import torch

from tetot import load_classifier_head, load_embedding_set

import tetot_exporter as te
from tetot_exporter.export import _load_image, list_images


def test_triple_shape_contract(clean_export):
    # eight images, two classes, sixteen-wide bottleneck
    _, summary = clean_export
    assert summary["rows"] == 8
    assert summary["dim"] == 16
    assert summary["num_classes"] == 2
    assert summary["classes"] == ["cat", "dog"]
    assert summary["skipped"] == []
    emb = load_embedding_set(summary["embeddings"])
    assert emb.features.shape == (8, 16)
    assert emb.features.dtype == np.float64  # reader widens the stored f32
    assert set(emb.labels.tolist()) == {0, 1}
    head = load_classifier_head(summary["head"])
    assert head.weights.shape == (2, 16)


def test_traversal_order_is_sorted(clean_export, dataset_dir):
    _, summary = clean_export
    emb = load_embedding_set(summary["embeddings"])
    # sorted class dirs, sorted files within: cat block then dog block
    assert emb.labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    entries, class_names = list_images(dataset_dir)
    assert class_names == ["cat", "dog"]
    assert [p.name for p, _ in entries] == [f"img_{i:02d}.png" for i in range(4)] * 2


def test_export_is_deterministic(clean_export, make_spec):
    spec1, summary1 = clean_export
    spec2 = make_spec()
    summary2 = te.export_embeddings(spec2)
    for key in ("embeddings", "labels", "head"):
        a = open(summary1[key], "rb").read()
        b = open(summary2[key], "rb").read()
        assert a == b, f"{key} files differ between identical runs"


def test_features_are_raw_model_outputs(clean_export, make_spec, dataset_dir):
    """Stored rows equal the torch forward pass, no normalization applied."""
    spec, summary = clean_export
    model = te.load_checkpoint(spec.checkpoint, spec.arch)
    entries, _ = list_images(dataset_dir)
    batch = np.stack([_load_image(p, spec.image_size) for p, _ in entries])
    with torch.no_grad():
        feats, _ = model(torch.from_numpy(batch.transpose(0, 3, 1, 2)))
    emb = load_embedding_set(summary["embeddings"])
    assert np.array_equal(emb.features.astype(np.float32), feats.numpy())
    norms = np.linalg.norm(emb.features, axis=1)
    assert not np.allclose(norms, 1.0)  # would indicate an accidental l2 step


def test_batch_size_does_not_change_output(make_spec, clean_export):
    _, summary = clean_export
    spec_small = make_spec(batch_size=3)
    summary_small = te.export_embeddings(spec_small)
    a = load_embedding_set(summary["embeddings"])
    b = load_embedding_set(summary_small["embeddings"])
    assert np.allclose(a.features, b.features, atol=1e-5)
    assert np.array_equal(a.labels, b.labels)


def test_penultimate_width_without_bottleneck(tmp_path, dataset_dir):
    ckpt = tmp_path / "plain.ckpt"
    te.make_random_checkpoint(ckpt, "resnet18", num_classes=2, seed=4)
    spec = te.ExportSpec(arch="resnet18", checkpoint=ckpt, data_dir=dataset_dir,
                         out_stem=tmp_path / "plain", image_size=48)
    summary = te.export_embeddings(spec)
    assert summary["dim"] == 512


def test_unreadable_image_is_skipped(tmp_path, ckpt_path, dataset_dir):
    import shutil

    data = tmp_path / "broken"
    shutil.copytree(dataset_dir, data)
    (data / "cat" / "img_00.png").write_bytes(b"this is not a png")
    spec = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path, data_dir=data,
                         out_stem=tmp_path / "broken_out", image_size=48)
    with pytest.warns(UserWarning, match="unreadable"):
        summary = te.export_embeddings(spec)
    assert summary["rows"] == 7
    assert summary["skipped"] == ["cat/img_00.png"]
    emb = load_embedding_set(summary["embeddings"])
    assert emb.labels.tolist() == [0, 0, 0, 1, 1, 1, 1]


def test_too_many_dataset_classes_rejected(tmp_path, ckpt_path, dataset_dir):
    import shutil

    data = tmp_path / "three_classes"
    shutil.copytree(dataset_dir, data)
    shutil.copytree(dataset_dir / "cat", data / "zebra")
    spec = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path, data_dir=data,
                         out_stem=tmp_path / "x", image_size=48)
    with pytest.raises(te.DatasetError, match="3 classes"):
        te.export_embeddings(spec)


def test_missing_dataset_dir(tmp_path, ckpt_path):
    spec = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path,
                         data_dir=tmp_path / "nope", out_stem=tmp_path / "x")
    with pytest.raises(te.DatasetError, match="not found"):
        te.export_embeddings(spec)


def test_empty_dataset_dir(tmp_path, ckpt_path):
    (tmp_path / "empty" / "cat").mkdir(parents=True)
    spec = te.ExportSpec(arch="resnet18", checkpoint=ckpt_path,
                         data_dir=tmp_path / "empty", out_stem=tmp_path / "x")
    with pytest.raises(te.DatasetError, match="no image files"):
        te.export_embeddings(spec)


def test_wrong_arch_for_checkpoint(make_spec):
    spec = make_spec(arch="resnet34")
    with pytest.raises(te.ModelError, match="architecture mismatch"):
        te.export_embeddings(spec)


def test_no_stale_temp_files(clean_export):
    spec, _ = clean_export
    leftovers = [p for p in spec.out_stem.parent.iterdir()
                 if p.suffix not in (".emb", ".lbl", ".hed")]
    assert leftovers == []


def test_corrupted_export_differs_from_clean(clean_export, make_spec):
    _, summary = clean_export
    spec = make_spec(corruption="gaussian_noise", severity=3)
    noisy = te.export_embeddings(spec)
    a = load_embedding_set(summary["embeddings"])
    b = load_embedding_set(noisy["embeddings"])
    assert a.features.shape == b.features.shape
    assert not np.allclose(a.features, b.features)
    # same files, same labels: corruption only touches pixels
    assert np.array_equal(a.labels, b.labels)


def test_corrupted_export_is_seed_deterministic(make_spec):
    s1 = te.export_embeddings(make_spec(corruption="shot_noise", severity=2, seed=9))
    s2 = te.export_embeddings(make_spec(corruption="shot_noise", severity=2, seed=9))
    assert open(s1["embeddings"], "rb").read() == open(s2["embeddings"], "rb").read()
    s3 = te.export_embeddings(make_spec(corruption="shot_noise", severity=2, seed=10))
    assert open(s1["embeddings"], "rb").read() != open(s3["embeddings"], "rb").read()
