import numpy as np
import pytest

from pairlabel.model import DenseTable, Potts, build_graph, build_model


def cycle_graph(n):
    return build_graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


def preference_cycle_models():
    """The two worked 5-cycle examples: vertex 0 prefers the second label.

    Returns (attractive, repulsive): equal-label costs of 1 in the first,
    equal-label rewards (identity table) in the second.
    """
    graph = cycle_graph(5)
    unary = np.zeros((5, 2))
    unary[0, 0] = 1.0
    attractive = build_model(graph, unary, [Potts(1.0)] * 5)
    repulsive = build_model(
        graph, unary, [DenseTable(np.array([[1.0, 0.0], [0.0, 1.0]]))] * 5
    )
    return attractive, repulsive


def blocks_image(size=64):
    """Piecewise-constant test image: quadrants plus a bright stripe."""
    img = np.zeros((size, size), dtype=np.uint8)
    half = size // 2
    img[:half, :half] = 40
    img[:half, half:] = 130
    img[half:, :half] = 200
    img[half:, half:] = 90
    img[half - 4:half + 4, :] = 230
    return img


def shifted_square_pair(size=8, shift=2):
    """Synthetic stereo pair: a colored square displaced by `shift` pixels.

    The returned left/right images match exactly at disparity `shift`
    on the square and at disparity 0 on the background.
    """
    left = np.full((size, size, 3), 200, dtype=np.uint8)
    right = np.full((size, size, 3), 200, dtype=np.uint8)
    left[2:6, 3:7] = (30, 90, 160)
    right[2:6, 3 - shift:7 - shift] = (30, 90, 160)
    return left, right


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
