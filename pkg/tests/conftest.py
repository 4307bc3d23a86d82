import numpy as np
import pytest

from spectv import DecompositionConfig, SolverConfig


def standardize(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    std = a.std()
    if std < 1e-12:
        std = 1.0
    return (a - a.mean()) / std


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def camera64():
    """Standardized 64x64 natural crop."""
    from skimage import data

    return standardize(data.camera()[96:160, 192:256].astype(np.float64))


@pytest.fixture(scope="session")
def camera32():
    from skimage import data

    return standardize(data.camera()[200:232, 300:332].astype(np.float64))


@pytest.fixture(scope="session")
def tiny_config():
    """Small flow for fast pipeline-level tests.

    The identities checked against it (telescoping, streaming-vs-batch)
    hold for any state sequence, so default solver strength suffices.
    """
    return DecompositionConfig(dt=0.2, n_steps=24, schedule=(2, 4, 8, 23))
