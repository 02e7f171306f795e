"""Tests for the denoising network: embeddings, forward pass and exact gradients"""
import math
import os
import sys

import numpy as np
import pytest

# Add src directory to Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bsdm.core.denoiser import (
    backward, forward, init_params, sinusoidal_features, stat_offset_embedding,
    stat_offset_features, tensor_shapes, time_embedding,
)
from bsdm.core.exceptions import BandAlignmentError, ScheduleError
from bsdm.core.thread_process import ThreadProcess

SMALL = dict(hidden=(6, 4, 4, 6), inner=8, embed=10, time_features=8, steps=50)


def small_params(bands=5, seed=0, stat_offset=True, stat_layers=2):
    return init_params(bands, seed, stat_offset=stat_offset, stat_layers=stat_layers, **SMALL)


def randomize_biases(params, seed=1):
    """Biases start at zero; random values exercise every gradient path."""
    rng = np.random.default_rng(seed)
    tensors = {
        name: (rng.normal(0, 0.3, value.shape) if value.ndim == 1 else value)
        for name, value in params.tensors.items()
    }
    return params.with_tensors(tensors)


class TestInitParams:
    """Tests for init_params"""

    def test_deterministic(self):
        """Test same seed gives bit-identical parameters"""
        a, b = init_params(20, 3), init_params(20, 3)
        assert all(np.array_equal(a.tensors[name], b.tensors[name]) for name in a.tensors)

    def test_default_architecture(self):
        """Test B_train=20 maps 20->100 with a projected skip"""
        params = init_params(20, 0)
        assert params.tensors["res0.w1"].shape == (20, 200)
        assert params.tensors["res0.w2"].shape == (200, 100)
        assert params.tensors["res0.ws"].shape == (20, 100)
        assert "res2.ws" not in params.tensors
        assert params.tensors["te.w"].shape == (128, 512)
        assert params.tensors["se.w1"].shape == (2, 512)
        assert params.tensors["se.w2"].shape == (512, 512)
        assert params.tensors["out.w"].shape == (100, 20)

    def test_biases_zero_and_weights_bounded(self):
        """Test the initialization rule"""
        params = init_params(20, 0)
        for name, value in params.tensors.items():
            if value.ndim == 1:
                assert np.all(value == 0.0), name
            else:
                limit = math.sqrt(6.0 / sum(value.shape))
                assert np.all(np.abs(value) <= limit), name

    def test_without_stat_offset(self):
        """Test the ablation drops every statistics tensor"""
        params = small_params(stat_offset=False)
        assert not any(name.startswith("se.") or name.endswith(".ps") for name in params.tensors)
        assert set(params.tensors) == set(tensor_shapes(params))

    def test_rejects_zero_bands(self):
        """Test B_train must be positive"""
        with pytest.raises(BandAlignmentError):
            init_params(0, 0)


class TestEmbeddings:
    """Tests for time and statistical offset embeddings"""

    def setup_method(self):
        self.params = init_params(20, 0)

    def test_time_embedding_range(self):
        """Test dimension 512 and values in (-1, 1)"""
        embedding = time_embedding(30, self.params)
        assert embedding.shape == (512,)
        assert np.all(np.abs(embedding) < 1)
        assert np.array_equal(embedding, time_embedding(30, self.params))

    def test_sinusoidal_at_zero(self):
        """Test t=0 gives the alternating 0/1 pattern"""
        features = sinusoidal_features(0.0)
        assert np.array_equal(features[0::2], np.zeros(64))
        assert np.array_equal(features[1::2], np.ones(64))

    @pytest.mark.parametrize("t", [0, 1001])
    def test_time_out_of_range(self, t):
        """Test t outside [1, T]"""
        with pytest.raises(ScheduleError):
            time_embedding(t, self.params)

    def test_stat_features(self):
        """Test mean and population std of a pixel"""
        assert np.allclose(stat_offset_features(np.array([1.0, 2.0, 3.0])), [2.0, math.sqrt(2.0 / 3.0)])
        assert np.array_equal(stat_offset_features(np.full(4, 0.25)), [0.25, 0.0])

    def test_stat_features_two_pass(self):
        """Test against a two-pass reference"""
        pixel = np.random.default_rng(2).uniform(size=17)
        mean = sum(pixel) / pixel.size
        std = math.sqrt(sum((x - mean) ** 2 for x in pixel) / pixel.size)
        assert np.allclose(stat_offset_features(pixel), [mean, std], atol=1e-6)

    def test_stat_embedding(self):
        """Test range and zero propagation at init"""
        embedding = stat_offset_embedding(np.array([0.4, 0.1]), self.params)
        assert embedding.shape == (512,)
        assert np.all(np.abs(embedding) < 1)
        assert np.array_equal(stat_offset_embedding(np.zeros(2), self.params), np.zeros(512))


class TestForward:
    """Tests for the forward pass"""

    def setup_method(self):
        self.params = randomize_biases(small_params())
        self.pixels = np.random.default_rng(4).uniform(size=(9, 5))

    def test_shape(self):
        """Test output shape equals input shape"""
        assert forward(self.params, self.pixels, 7).shape == (9, 5)

    def test_identical_pixels(self):
        """Test identical pixels give identical rows"""
        pixels = np.vstack([self.pixels[:1], self.pixels[:1]])
        out = forward(self.params, pixels, 7)
        assert np.array_equal(out[0], out[1])

    def test_permutation(self):
        """Test permuting rows permutes outputs"""
        order = np.random.default_rng(0).permutation(9)
        assert np.allclose(forward(self.params, self.pixels[order], 3),
                           forward(self.params, self.pixels, 3)[order], rtol=0, atol=1e-14)

    def test_finite_over_seeds(self):
        """Test outputs are finite for random init and inputs"""
        for seed in range(100):
            params = small_params(seed=seed)
            pixels = np.random.default_rng(seed).uniform(size=(4, 5))
            assert np.all(np.isfinite(forward(params, pixels, 1 + seed % 50)))

    def test_width_mismatch(self):
        """Test wrong pixel width is rejected"""
        with pytest.raises(BandAlignmentError):
            forward(self.params, np.zeros((3, 4)), 1)

    def test_threads_agree_bit_exact(self):
        """Test 1 and 4 threads over the same blocks"""
        pixels = np.random.default_rng(5).uniform(size=(50, 5))
        single = ThreadProcess(max_threads=1, block_size=7, deterministic=True)
        multi = ThreadProcess(max_threads=4, block_size=7, deterministic=True)
        assert np.array_equal(forward(self.params, pixels, 9, pool=single),
                              forward(self.params, pixels, 9, pool=multi))


class TestBackward:
    """Tests for loss and analytic gradients"""

    def setup_method(self):
        rng = np.random.default_rng(7)
        self.params = randomize_biases(small_params())
        self.pixels = rng.uniform(size=(6, 5))
        self.target = rng.normal(0.5, 0.2, size=(6, 5))
        self.t = 11

    def test_zero_loss_at_own_output(self):
        """Test target = forward output gives zero loss and gradients"""
        target = forward(self.params, self.pixels, self.t)
        loss, grads = backward(self.params, self.pixels, target, self.t)
        assert loss == 0.0
        assert all(np.all(grad == 0.0) for grad in grads.values())

    def test_loss_is_mean_squared_norm(self):
        """Test loss value and non-negativity"""
        loss, _ = backward(self.params, self.pixels, self.target, self.t)
        output = forward(self.params, self.pixels, self.t)
        expected = np.mean(np.sum((output - self.target) ** 2, axis=1))
        assert loss >= 0
        assert loss == pytest.approx(expected, rel=1e-12)

    def test_gradient_shapes(self):
        """Test gradients match every tensor"""
        _, grads = backward(self.params, self.pixels, self.target, self.t)
        assert list(grads) == list(self.params.tensors)
        assert all(grads[name].shape == value.shape for name, value in self.params.tensors.items())

    @pytest.mark.parametrize("stat_offset,stat_layers", [(True, 2), (True, 3), (False, 2)])
    def test_finite_differences(self, stat_offset, stat_layers):
        """Test analytic gradients against central differences on every tensor"""
        params = randomize_biases(small_params(stat_offset=stat_offset, stat_layers=stat_layers))
        _, grads = backward(params, self.pixels, self.target, self.t)
        rng = np.random.default_rng(0)
        step = 1e-5
        checked = 0
        for name, value in params.tensors.items():
            for _ in range(4):
                index = tuple(int(rng.integers(0, dim)) for dim in value.shape)
                plus, minus = value.copy(), value.copy()
                plus[index] += step
                minus[index] -= step
                loss_plus, _ = backward(params.with_tensors({**params.tensors, name: plus}),
                                        self.pixels, self.target, self.t)
                loss_minus, _ = backward(params.with_tensors({**params.tensors, name: minus}),
                                         self.pixels, self.target, self.t)
                numeric = (loss_plus - loss_minus) / (2 * step)
                analytic = grads[name][index]
                assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-8, name
                checked += 1
        assert checked >= 100 or not stat_offset

    def test_shape_mismatch(self):
        """Test target shape mismatch"""
        with pytest.raises(BandAlignmentError):
            backward(self.params, self.pixels, self.target[:3], self.t)

    def test_threads_agree_bit_exact(self):
        """Test deterministic reduction gives identical gradients for 1 and 3 threads"""
        rng = np.random.default_rng(8)
        pixels, target = rng.uniform(size=(40, 5)), rng.uniform(size=(40, 5))
        single = ThreadProcess(max_threads=1, block_size=6, deterministic=True)
        multi = ThreadProcess(max_threads=3, block_size=6, deterministic=True)
        loss_a, grads_a = backward(self.params, pixels, target, 4, pool=single)
        loss_b, grads_b = backward(self.params, pixels, target, 4, pool=multi)
        assert loss_a == loss_b
        assert all(np.array_equal(grads_a[name], grads_b[name]) for name in grads_a)
