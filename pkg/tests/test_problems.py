import numpy as np
import pytest
from numpy.testing import assert_allclose

from pairlabel.errors import InvalidInputError, ModelParseError
from pairlabel.maps import MapKind, SolveParams, decode, solve
from pairlabel.model import energy
from pairlabel.oracles import brute_force_min
from pairlabel.problems import (
    GridSpec,
    add_gaussian_noise,
    hamming,
    ising_energy,
    random_grid,
    read_pgm,
    read_ppm,
    restoration_model,
    rmse,
    stereo_model,
    write_pgm,
    write_ppm,
)

from conftest import blocks_image, shifted_square_pair


class TestRandomGrid:
    def test_decoupled_when_coupling_is_zero(self):
        model, alpha, beta = random_grid(GridSpec(3, 0.0, 11))
        assert np.all(beta == 0.0)
        for cost in model.edge_costs:
            assert np.array_equal(cost.values, np.zeros((2, 2)))
        x, _ = brute_force_min(model)
        assert np.array_equal(x, (alpha < 0).astype(np.int64))

    def test_seed_determinism(self):
        a = random_grid(GridSpec(4, 7.0, 42))
        b = random_grid(GridSpec(4, 7.0, 42))
        assert np.array_equal(a[1], b[1])
        assert np.array_equal(a[2], b[2])
        assert np.array_equal(a[0].unary, b[0].unary)

    def test_model_argmin_matches_spin_argmin(self):
        model, alpha, beta = random_grid(GridSpec(3, 2.0, 7))
        x_model, _ = brute_force_min(model)
        best, best_x = np.inf, None
        for code in range(2**9):
            x = np.array([(code >> (8 - i)) & 1 for i in range(9)])
            value = ising_energy(alpha, beta, (3, 3), x)
            if value < best:
                best, best_x = value, x
        assert np.array_equal(x_model, best_x)


class TestRestoration:
    def test_constant_image_has_zero_optimum(self):
        y = np.full((3, 4), 77, dtype=np.uint8)
        model = restoration_model(y, 0.05, 100.0)
        x = np.full(12, 77, dtype=np.int64)
        assert energy(model, x) == 0.0

    def test_zero_smoothing_restores_exactly(self):
        y = np.array([[3, 250], [128, 0]], dtype=np.uint8)
        model = restoration_model(y, 0.0, 100.0)
        report = solve(model, MapKind.T, SolveParams(p=0.5, tol=1e-12))
        assert np.array_equal(decode(report.field), y.reshape(-1))

    def test_two_pixel_instance_against_small_brute_force(self):
        y = np.array([[0, 7]], dtype=np.uint8)
        # huge smoothing, inactive cap: the optimum meets in the middle
        model = restoration_model(y, 1e6, 1e9, num_labels=8)
        x, best = brute_force_min(model)
        assert x[0] == x[1]
        assert best == (0 - x[0]) ** 2 + (7 - x[0]) ** 2 == 25.0
        # active cap: cheaper to pay it once and keep both pixels exact
        capped = restoration_model(y, 1e6, 1e-5, num_labels=8)
        x2, best2 = brute_force_min(capped)
        assert x2.tolist() == [0, 7]
        assert best2 == pytest.approx(1e6 * 1e-5)

    def test_unary_formula(self):
        y = np.array([[10, 200]], dtype=np.uint8)
        model = restoration_model(y, 0.05, 100.0)
        assert model.unary[0, 10] == 0.0
        assert model.unary[0, 0] == 100.0
        assert model.unary[1, 255] == (200.0 - 255.0) ** 2


class TestStereo:
    def test_identical_pair_zero_disparity(self):
        left = np.full((4, 5, 3), 90, dtype=np.uint8)
        model = stereo_model(left, left, 0, 500.0, 1000.0, 20.0)
        assert model.num_labels == 1
        assert_allclose(model.unary, 0.0)

    def test_weight_rows_sum_to_one(self, rng):
        left = rng.integers(0, 256, (5, 6, 3)).astype(np.uint8)
        right = rng.integers(0, 256, (5, 6, 3)).astype(np.uint8)
        model = stereo_model(left, right, 3, 500.0, 1000.0, 20.0)
        sums = np.add.reduceat(
            model.weights.values, model.graph.adj_offsets[:-1]
        )
        assert np.max(np.abs(sums - 1.0)) <= 1e-12
        assert model.weights.values.min() > 0.0

    def test_shifted_square_recovers_disparity(self):
        left, right = shifted_square_pair(size=8, shift=2)
        model = stereo_model(left, right, 3, 500.0, 1000.0, 20.0)
        report = solve(model, MapKind.S, SolveParams(p=1e-4, tol=1e-14, max_iter=2000))
        disparity = decode(report.field).reshape(8, 8)
        assert np.all(disparity[2:6, 3:7] == 2)  # the displaced square

    def test_border_policy_costs_the_cap(self):
        left, right = shifted_square_pair()
        model = stereo_model(left, right, 3, 500.0, 1000.0, 20.0)
        # pixel column 0 cannot match at disparity 2
        assert model.unary[0, 2] == 20.0

    def test_shape_mismatch(self):
        left = np.zeros((4, 4, 3), dtype=np.uint8)
        right = np.zeros((4, 5, 3), dtype=np.uint8)
        with pytest.raises(InvalidInputError):
            stereo_model(left, right, 2, 500.0, 1000.0, 20.0)


class TestNoiseAndMetrics:
    def test_zero_sigma_is_identity(self):
        img = blocks_image(16)
        assert np.array_equal(add_gaussian_noise(img, 0.0, 5), img)

    def test_empirical_deviation(self):
        img = np.full((256, 256), 128, dtype=np.uint8)
        noisy = add_gaussian_noise(img, 20.0, 123)
        dev = np.std(noisy.astype(float) - img.astype(float))
        assert abs(dev - 20.0) <= 1.0  # within 5%

    def test_range_and_dtype(self):
        img = np.full((64, 64), 250, dtype=np.uint8)
        noisy = add_gaussian_noise(img, 50.0, 9)
        assert noisy.dtype == np.uint8
        assert noisy.min() >= 0 and noisy.max() <= 255

    def test_rmse(self):
        assert rmse(np.array([[0]]), np.array([[10]])) == 10.0
        img = blocks_image(8)
        assert rmse(img, img) == 0.0

    def test_hamming(self):
        assert hamming(np.array([1, 1, 2]), np.array([1, 2, 2])) == 1
        assert hamming(np.array([1, 1]), np.array([1, 1])) == 0
        with pytest.raises(InvalidInputError):
            hamming(np.array([1]), np.array([1, 2]))


class TestImageIo:
    def test_pgm_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (7, 5)).astype(np.uint8)
        path = tmp_path / "img.pgm"
        write_pgm(path, img)
        assert np.array_equal(read_pgm(path), img)

    def test_ppm_round_trip(self, tmp_path, rng):
        img = rng.integers(0, 256, (4, 6, 3)).astype(np.uint8)
        path = tmp_path / "img.ppm"
        write_ppm(path, img)
        assert np.array_equal(read_ppm(path), img)

    def test_reads_comments(self, tmp_path):
        path = tmp_path / "c.pgm"
        raster = bytes(range(6))
        path.write_bytes(b"P5 # format\n# a comment line\n3 2 # size\n255\n" + raster)
        img = read_pgm(path)
        assert img.shape == (2, 3)
        assert img.reshape(-1).tolist() == list(range(6))

    def test_rejects_wrong_magic_and_truncation(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P2\n2 2\n255\n")
        with pytest.raises(ModelParseError):
            read_pgm(path)
        path.write_bytes(b"P5\n2 2\n255\n\x00\x01")
        with pytest.raises(ModelParseError):
            read_pgm(path)
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(ModelParseError):
            read_pgm(path)
