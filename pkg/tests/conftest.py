import numpy as np
import pytest

from tetot.data_model import ClassifierHead, EmbeddingSet
from tetot.ot_solver import warmup_jit


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jitted solvers once so timing assertions measure solve
    # time, not compilation
    warmup_jit()


@pytest.fixture
def make_set():
    def build(features=None, labels=None, domain_id="d", num_classes=None,
              n=None, dim=None, seed=0):
        if features is None:
            rng = np.random.default_rng(seed)
            features = rng.normal(size=(n, dim))
            if labels is None and num_classes is not None:
                labels = rng.integers(0, num_classes, size=n)
        if labels is False:
            labels = None
        return EmbeddingSet(
            features=np.asarray(features, dtype=np.float64),
            labels=None if labels is None else np.asarray(labels),
            domain_id=domain_id,
            num_classes=num_classes,
        )

    return build


@pytest.fixture
def make_head():
    def build(weights=None, bias=None, dim=None, num_classes=None, seed=0):
        if weights is None:
            rng = np.random.default_rng(seed)
            weights = rng.normal(size=(num_classes, dim))
            bias = rng.normal(size=num_classes)
        weights = np.asarray(weights, dtype=np.float64)
        if bias is None:
            bias = np.zeros(weights.shape[0])
        return ClassifierHead(weights=weights, bias=np.asarray(bias, dtype=np.float64))

    return build
