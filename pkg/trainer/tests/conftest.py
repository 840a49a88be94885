import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _synth import separable_graph, write_grig  # noqa: E402

from grig_gat.data import load_grig  # noqa: E402


def make_split(seed, n_train, n_test, class_count=2):
    rng = np.random.Generator(np.random.PCG64(seed))
    train = [separable_graph(rng, int(rng.integers(0, class_count)), class_count) for _ in range(n_train)]
    test = [separable_graph(rng, int(rng.integers(0, class_count)), class_count) for _ in range(n_test)]
    return (
        load_grig(write_grig(train, class_count=class_count)),
        load_grig(write_grig(test, class_count=class_count)),
    )


@pytest.fixture(scope="session")
def binary_split():
    return make_split(7, 400, 200, class_count=2)
