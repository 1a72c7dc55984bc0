import numpy as np

from pairlabel.engine import DartEngine
from pairlabel.model import StereoTwoStep, TruncatedQuadratic
from pairlabel.problems import restoration_model, stereo_model
from pairlabel.verify import random_field


def _full_path(eng, p, phi, diffusion):
    q = 1.0 - p
    if diffusion:
        c_all = (q * eng.w_in)[:, None] * phi[eng.dst]
        msgs = eng.messages(c_all, 0.5 * p)
    else:
        c_all = q * phi[eng.dst]
        msgs = eng.messages(c_all, p)
        msgs = msgs * eng.w_out[:, None]
    agg = np.add.reduceat(msgs, eng.offsets[:-1], axis=0)
    return p * eng.model.unary + agg


class TestChunkedPath:
    def test_chunked_is_bit_identical_to_full_path(self, rng):
        y = rng.integers(0, 256, (36, 36)).astype(np.uint8)
        model = restoration_model(y, 0.05, 100.0)
        eng = DartEngine(model)
        assert eng._use_chunks()
        assert eng._fused_form() is TruncatedQuadratic
        phi = random_field(rng, model, span=40.0)
        for diffusion in (True, False):
            chunked = eng._apply_chunked(0.001, phi, diffusion=diffusion)
            full = _full_path(eng, 0.001, phi, diffusion)
            assert np.array_equal(chunked, full)
            fused = eng._apply_fused(0.001, phi, diffusion=diffusion)
            # the jitted kernel may contract multiply-adds: one-ulp slack
            assert np.abs(fused - chunked).max() <= 1e-12
            assert np.array_equal(
                fused, eng._apply_fused(0.001, phi, diffusion=diffusion)
            )

    def test_two_step_model_paths_agree(self, rng):
        left = rng.integers(0, 256, (36, 36, 3)).astype(np.uint8)
        right = rng.integers(0, 256, (36, 36, 3)).astype(np.uint8)
        model = stereo_model(left, right, 255, 500.0, 1000.0, 20.0)
        eng = DartEngine(model)
        assert eng._use_chunks() and eng._fused_form() is StereoTwoStep
        phi = random_field(rng, model, span=10.0)
        for diffusion in (True, False):
            chunked = eng._apply_chunked(1e-4, phi, diffusion=diffusion)
            full = _full_path(eng, 1e-4, phi, diffusion=diffusion)
            fused = eng._apply_fused(1e-4, phi, diffusion=diffusion)
            assert np.array_equal(chunked, full)
            # the jitted kernel may contract multiply-adds: one-ulp slack
            assert np.abs(fused - chunked).max() <= 1e-12
            # repeated fused calls are bit-identical (thread-count independent)
            assert np.array_equal(
                fused, eng._apply_fused(1e-4, phi, diffusion=diffusion)
            )

    def test_blocks_cover_all_vertices(self, rng):
        y = rng.integers(0, 256, (20, 11)).astype(np.uint8)
        model = restoration_model(y, 0.05, 100.0)
        eng = DartEngine(model)
        blocks = eng._vertex_blocks()
        assert blocks[0][0] == 0 and blocks[-1][1] == model.n
        for (a0, a1), (b0, b1) in zip(blocks, blocks[1:]):
            assert a1 == b0

    def test_thread_count_does_not_change_results(self, rng):
        import numba

        y = rng.integers(0, 256, (36, 36)).astype(np.uint8)
        model = restoration_model(y, 0.05, 100.0)
        eng = DartEngine(model)
        phi = random_field(rng, model, span=40.0)
        available = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(available)
        many = eng._apply_fused(0.001, phi, diffusion=True)
        numba.set_num_threads(1)
        try:
            one = eng._apply_fused(0.001, phi, diffusion=True)
        finally:
            numba.set_num_threads(available)
        assert np.array_equal(many, one)

    def test_reverse_dart_permutation(self, rng):
        y = rng.integers(0, 256, (5, 7)).astype(np.uint8)
        model = restoration_model(y, 0.05, 100.0, num_labels=4)
        eng = DartEngine(model)
        assert np.array_equal(eng.src[eng.rev], eng.dst)
        assert np.array_equal(eng.dst[eng.rev], eng.src)
        assert np.array_equal(eng.rev[eng.rev], np.arange(eng.rev.shape[0]))
