import numpy as np
import pytest
import torch

from tetot_exporter import (
    EmbeddingModel,
    ModelError,
    load_checkpoint,
    make_random_checkpoint,
    save_checkpoint,
)


def test_resnet18_penultimate_width():
    torch.manual_seed(0)
    model = EmbeddingModel("resnet18", num_classes=3)
    assert model.feature_dim == 512
    x = torch.zeros(2, 3, 48, 48)
    feats, logits = model(x)
    assert feats.shape == (2, 512)
    assert logits.shape == (2, 3)


def test_bottleneck_narrows_features():
    torch.manual_seed(0)
    model = EmbeddingModel("resnet18", num_classes=3, bottleneck_dim=16)
    assert model.feature_dim == 16
    feats, logits = model(torch.zeros(2, 3, 48, 48))
    assert feats.shape == (2, 16)
    assert logits.shape == (2, 3)
    # the exported head must act on the bottleneck output
    assert model.classifier.in_features == 16


def test_logits_are_linear_in_features():
    torch.manual_seed(1)
    model = EmbeddingModel("resnet18", num_classes=4, bottleneck_dim=8).eval()
    with torch.no_grad():
        feats, logits = model(torch.randn(3, 3, 48, 48))
        manual = feats @ model.classifier.weight.T + model.classifier.bias
    assert torch.allclose(logits, manual, atol=1e-6)


def test_checkpoint_round_trip(tmp_path):
    torch.manual_seed(2)
    model = EmbeddingModel("resnet18", num_classes=2, bottleneck_dim=16).eval()
    save_checkpoint(model, tmp_path / "m.ckpt")
    loaded = load_checkpoint(tmp_path / "m.ckpt", "resnet18")
    assert loaded.num_classes == 2
    assert loaded.bottleneck_dim == 16
    x = torch.randn(2, 3, 48, 48)
    with torch.no_grad():
        f0, l0 = model(x)
        f1, l1 = loaded(x)
    assert torch.equal(f0, f1)
    assert torch.equal(l0, l1)


def test_arch_mismatch_rejected(tmp_path):
    make_random_checkpoint(tmp_path / "m.ckpt", "resnet18", num_classes=2)
    with pytest.raises(ModelError, match="architecture mismatch"):
        load_checkpoint(tmp_path / "m.ckpt", "resnet34")


def test_missing_checkpoint(tmp_path):
    with pytest.raises(ModelError, match="not found"):
        load_checkpoint(tmp_path / "nope.ckpt", "resnet18")


def test_garbage_checkpoint(tmp_path):
    (tmp_path / "junk.ckpt").write_bytes(b"not a checkpoint at all")
    with pytest.raises(ModelError):
        load_checkpoint(tmp_path / "junk.ckpt", "resnet18")


def test_foreign_torch_payload_rejected(tmp_path):
    # a valid torch file that is not an exporter checkpoint
    torch.save({"weights": torch.zeros(3)}, tmp_path / "other.ckpt")
    with pytest.raises(ModelError, match="not an exporter checkpoint"):
        load_checkpoint(tmp_path / "other.ckpt", "resnet18")


def test_num_classes_floor():
    with pytest.raises(ModelError, match="num_classes"):
        EmbeddingModel("resnet18", num_classes=1)


def test_random_checkpoint_is_seeded(tmp_path):
    m1 = make_random_checkpoint(tmp_path / "a.ckpt", "resnet18", 2, seed=7)
    m2 = make_random_checkpoint(tmp_path / "b.ckpt", "resnet18", 2, seed=7)
    w1 = m1.classifier.weight.detach().numpy()
    w2 = m2.classifier.weight.detach().numpy()
    assert np.array_equal(w1, w2)
    m3 = make_random_checkpoint(tmp_path / "c.ckpt", "resnet18", 2, seed=8)
    assert not np.array_equal(w1, m3.classifier.weight.detach().numpy())
