"""Experiment instances: random binary grids, image restoration and
stereo models, plus image I/O, noise and error metrics.

Images are numpy arrays: grayscale (H, W) uint8, color (H, W, 3) uint8.
All randomness goes through numpy's default PCG64 generator seeded
explicitly, so instances are reproducible bit-exactly from their seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ModelParseError
from .model import (
    StereoTwoStep,
    TruncatedQuadratic,
    WalkWeights,
    build_model,
    grid_graph,
    ising_to_model,
)

__all__ = [
    "GridSpec",
    "add_gaussian_noise",
    "hamming",
    "ising_energy",
    "random_grid",
    "read_pgm",
    "read_ppm",
    "restoration_model",
    "rmse",
    "stereo_model",
    "write_pgm",
    "write_ppm",
]


# ---------------------------------------------------------------------------
# Random binary grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Side length, coupling strength and seed of one random grid instance."""

    size: int
    coupling: float
    seed: int

    def __post_init__(self):
        if self.size < 2:
            raise InvalidInputError("grid side length must be >= 2")
        if self.coupling < 0:
            raise InvalidInputError("coupling strength must be >= 0")


def random_grid(spec):
    """Random spin instance on a 4-connected size x size grid.

    Per-vertex coefficients are drawn uniformly from [-1, 1] (row-major
    vertex order), then per-edge couplings uniformly from
    [-coupling, +coupling] (canonical edge order).  Returns
    (model, alpha, beta) with the model already normalized to
    nonnegative costs; the same seed reproduces the instance bit for
    bit.
    """
    k = spec.size
    graph = grid_graph(k, k)
    rng = np.random.default_rng(spec.seed)
    alpha = rng.uniform(-1.0, 1.0, graph.n)
    beta = rng.uniform(-spec.coupling, spec.coupling, graph.m)
    model, _ = ising_to_model(alpha, beta, (k, k))
    return model, alpha, beta


def ising_energy(alpha, beta, shape, labels):
    """Spin energy sum_i alpha_i s_i + sum_edges beta_ij s_i s_j.

    Labels {0, 1} encode spins {-1, +1}; `beta` follows the canonical
    edge order of `grid_graph(*shape)`.
    """
    graph = grid_graph(*shape)
    labels = np.asarray(labels)
    s = 2.0 * labels - 1.0
    total = float(np.sum(np.asarray(alpha, dtype=np.float64).reshape(-1) * s))
    b = np.asarray(beta, dtype=np.float64).reshape(-1)
    total += float(np.sum(b * s[graph.edges[:, 0]] * s[graph.edges[:, 1]]))
    return total


# ---------------------------------------------------------------------------
# Image restoration
# ---------------------------------------------------------------------------


def restoration_model(y, smoothing, cap, num_labels=256):
    """Piecewise-smooth restoration instance for a grayscale image.

    Labels are pixel values 0..num_labels-1; the per-pixel cost is the
    squared difference to the observed image and edges carry a
    truncated quadratic with the given smoothing weight and cap.
    Weights are uniform.
    """
    y = _check_gray(y)
    h, w = y.shape
    graph = grid_graph(h, w)
    values = np.arange(num_labels, dtype=np.float64)
    unary = (y.reshape(-1, 1).astype(np.float64) - values[None, :]) ** 2
    costs = [TruncatedQuadratic(smoothing, cap)] * graph.m
    return build_model(graph, unary, costs)


def add_gaussian_noise(image, sigma, seed):
    """Add iid Gaussian noise, round half away from zero, clamp to 0..255."""
    image = _check_gray(image)
    if sigma < 0:
        raise InvalidInputError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    noisy = image.astype(np.float64) + rng.normal(0.0, sigma, image.shape)
    rounded = np.where(noisy >= 0, np.floor(noisy + 0.5), np.ceil(noisy - 0.5))
    return np.clip(rounded, 0, 255).astype(np.uint8)


def rmse(a, b):
    """Root mean squared difference between two grayscale images."""
    a = _check_gray(a)
    b = _check_gray(b)
    if a.shape != b.shape:
        raise InvalidInputError("image shapes do not match")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(math.sqrt(np.mean(d * d)))


def hamming(x, y):
    """Number of positions where two labelings differ."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise InvalidInputError("labeling shapes do not match")
    return int(np.sum(x != y))


# ---------------------------------------------------------------------------
# Stereo
# ---------------------------------------------------------------------------


def stereo_model(left, right, max_disparity, step_cost, jump_cost, color_cap):
    """Disparity-labeling instance for a rectified color pair.

    Labels 0..max_disparity are integer disparities.  The data cost is
    the truncated L1 color distance between a left pixel and the right
    pixel shifted by the disparity; matches falling off the image cost
    the truncation value.  Pairwise costs are the two-step form and the
    walk weights favor neighbors of similar color in the left image
    (0.01 + exp(-0.2 * L1), row-normalized, hence strictly positive).
    """
    left = _check_color(left)
    right = _check_color(right)
    if left.shape != right.shape:
        raise InvalidInputError("stereo pair shapes do not match")
    if max_disparity < 0:
        raise InvalidInputError("max disparity must be >= 0")
    h, w = left.shape[:2]
    k = max_disparity + 1
    graph = grid_graph(h, w)

    lf = left.astype(np.float64)
    rf = right.astype(np.float64)
    unary = np.full((h, w, k), float(color_cap))
    for a in range(k):
        if a >= w:
            break
        dist = np.abs(lf[:, a:] - rf[:, : w - a]).sum(axis=2)
        unary[:, a:, a] = np.minimum(float(color_cap), dist)
    unary = unary.reshape(graph.n, k)

    colors = lf.reshape(graph.n, 3)
    src = np.repeat(np.arange(graph.n, dtype=np.int64), graph.degrees)
    dst = graph.adj_targets
    raw = 0.01 + np.exp(-0.2 * np.abs(colors[src] - colors[dst]).sum(axis=1))
    sums = np.add.reduceat(raw, graph.adj_offsets[:-1])
    weights = WalkWeights(graph, raw / np.repeat(sums, graph.degrees))

    costs = [StereoTwoStep(step_cost, jump_cost)] * graph.m
    return build_model(graph, unary, costs, weights)


# ---------------------------------------------------------------------------
# PGM / PPM I/O
# ---------------------------------------------------------------------------


def _check_gray(image):
    image = np.asarray(image)
    if image.ndim != 2 or image.size == 0:
        raise InvalidInputError("grayscale image must be a nonempty 2-d array")
    if image.min() < 0 or image.max() > 255:
        raise InvalidInputError("pixel values must lie in 0..255")
    return image


def _check_color(image):
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise InvalidInputError("color image must be a nonempty (H, W, 3) array")
    if image.min() < 0 or image.max() > 255:
        raise InvalidInputError("pixel values must lie in 0..255")
    return image


def _read_netpbm(path, magic):
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    line = 1
    while len(tokens) < 4:
        if pos >= len(data):
            raise ModelParseError("unexpected end of header", line)
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        if ch.isspace():
            if ch == b"\n":
                line += 1
            pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != magic:
        raise ModelParseError(f"expected {magic.decode()} file", 1)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise ModelParseError("header fields must be integers", line) from None
    if maxval != 255:
        raise ModelParseError("only maxval 255 is supported", line)
    pos += 1  # single whitespace after maxval
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise ModelParseError("raster is truncated", line)
    arr = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(height, width)
    return arr.reshape(height, width, 3)


def read_pgm(path):
    """Read a binary (P5, maxval 255) grayscale image."""
    return _read_netpbm(path, b"P5")


def read_ppm(path):
    """Read a binary (P6, maxval 255) color image."""
    return _read_netpbm(path, b"P6")


def write_pgm(path, image):
    """Write a binary P5 image with a canonical header."""
    image = _check_gray(image).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode())
        fh.write(image.tobytes())


def write_ppm(path, image):
    """Write a binary P6 image with a canonical header."""
    image = _check_color(image).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode())
        fh.write(image.tobytes())
