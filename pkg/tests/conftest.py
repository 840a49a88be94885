import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _corpus import corpus_records, synth_digits  # noqa: E402

from grig.graph import build_graph  # noqa: E402


@pytest.fixture(scope="session")
def corpus200():
    """200 digit (image, label) records via the IDX decode path."""
    return corpus_records(200, seed=11)


@pytest.fixture(scope="session")
def graphs100(corpus200):
    return [build_graph(img) for img, _ in corpus200[:100]]


@pytest.fixture(scope="session")
def small_images():
    imgs, _ = synth_digits(12, seed=5)
    return imgs


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # First call compiles the jitted growth kernels; keep that cost out of
    # individual tests and the acceptance timings.
    build_graph(
        __import__("grig.imaging", fromlist=["GrayImage"]).GrayImage(
            np.zeros((8, 8), dtype=np.uint8)
        )
    )
