import numpy as np
import pytest

from iclap.data import Exploration, TactileFrame, TouchSample


def random_frame(rng, rows=14, cols=6):
    return TactileFrame(rng.random((rows, cols)))


def random_exploration(rng, object_id="obj", n=5, rows=14, cols=6):
    samples = []
    for _ in range(n):
        samples.append(TouchSample(rng.normal(scale=20.0, size=3),
                                   random_frame(rng, rows, cols)))
    return Exploration(object_id, tuple(samples))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
