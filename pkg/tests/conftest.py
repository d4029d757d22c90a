import numpy as np
import pytest

from trustfilter.model import ModelConfig, ReadingFrame


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def config2():
    return ModelConfig(n_nodes=2)


def identical_frames(n_nodes, n_steps, value=20.0):
    """Frames where every node reports exactly the same value."""
    return [
        ReadingFrame(values=np.full(n_nodes, value), time_step=k + 1)
        for k in range(n_steps)
    ]
