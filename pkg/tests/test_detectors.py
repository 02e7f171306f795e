"""Tests for the RX and autoencoder detector modules and their loader"""
import os
import sys

import numpy as np
import pytest

# Add src directory to Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bsdm.core.auto_module import AutoModulo
from bsdm.core.detection import DetectionMap, load_map, normalize_map, save_map
from bsdm.core.exceptions import BandAlignmentError, ConfigError, CubeFormatError
from bsdm.core.help_modules import discover_modules
from bsdm.core.hsi_data import HsiCube, normalize_cube
from bsdm.utils.auxiliary.det.ae import (
    AeConfig, ae_backward, ae_detect, ae_init, ae_reconstruct, ae_scores, ae_train,
)
from bsdm.utils.auxiliary.det.rx import rx_detect


def random_cube(height=6, width=6, bands=4, seed=0):
    values = np.random.default_rng(seed).normal(size=(height * width, bands))
    return HsiCube(height, width, bands, values)


class TestRx:
    """Tests for the global RX detector"""

    def test_mean_pixel_scores_zero(self):
        """Test a pixel equal to the cube mean scores 0"""
        values = random_cube().values
        values = np.vstack([values, values.mean(axis=0)])
        cube = HsiCube(values.shape[0], 1, 4, values)
        scores = rx_detect(cube, ridge=0.0).scores
        assert scores[-1] == pytest.approx(0.0, abs=1e-10)
        assert scores[:-1].min() > 0

    def test_identity_covariance_oracle(self):
        """Test scores equal squared distances when the covariance is the identity"""
        # Zero mean, covariance 1.25 * I before scaling.
        base = np.array([[1.0, 0.0], [0.0, 2.0], [-1.0, 0.0], [0.0, -2.0],
                         [2.0, 0.0], [0.0, 1.0], [-2.0, 0.0], [0.0, -1.0]]) / np.sqrt(1.25)
        cube = HsiCube(8, 1, 2, base)
        scores = rx_detect(cube, ridge=0.0).scores
        assert np.allclose(scores, np.sum(base * base, axis=1), rtol=1e-12)

    def test_scaling_invariance(self):
        """Test scaling the cube leaves RX scores unchanged"""
        cube = random_cube(seed=1)
        scaled = cube.with_values(7.5 * cube.values)
        assert np.allclose(rx_detect(cube).scores, rx_detect(scaled).scores, rtol=1e-9)

    def test_permutation(self):
        """Test permuting pixels permutes scores"""
        cube = random_cube(seed=2)
        order = np.random.default_rng(0).permutation(36)
        permuted = cube.with_values(cube.values[order])
        assert np.allclose(rx_detect(permuted).scores, rx_detect(cube).scores[order], rtol=1e-9)

    def test_nonnegative_with_singular_covariance(self):
        """Test a rank-deficient cube is regularized and scores stay >= 0"""
        cube = random_cube(seed=3)
        values = cube.values.copy()
        values[:, 3] = values[:, 0]
        scores = rx_detect(cube.with_values(values)).scores
        assert np.all(scores >= 0)
        assert np.all(np.isfinite(scores))

    def test_threads_bit_exact(self):
        """Test 1 and 3 threads agree exactly"""
        from bsdm.core.thread_process import ThreadProcess
        cube = random_cube(height=10, width=10, seed=4)
        single = ThreadProcess(max_threads=1, block_size=7, deterministic=True)
        multi = ThreadProcess(max_threads=3, block_size=7, deterministic=True)
        assert np.array_equal(rx_detect(cube, pool=single).scores, rx_detect(cube, pool=multi).scores)


class TestAutoencoder:
    """Tests for the autoencoder detector"""

    def setup_method(self):
        self.cube = random_cube(seed=5).with_values(np.random.default_rng(5).uniform(size=(36, 4)))
        self.config = AeConfig(hidden_widths=[3, 2, 3], epochs=40, lr_init=1e-2, lr_final=1e-3)

    def test_loss_decreases(self):
        """Test training lowers the reconstruction error"""
        params = ae_train(self.cube, self.config)
        assert len(params.loss_history) == 40
        assert params.loss_history[-1] < params.loss_history[0]

    def test_scores_are_pixel_mse(self):
        """Test scores equal the per-pixel mean squared residual"""
        params = ae_train(self.cube, self.config)
        reconstruction = ae_reconstruct(params, self.cube.values)
        expected = np.mean((reconstruction - self.cube.values) ** 2, axis=1)
        assert np.allclose(ae_scores(params, self.cube.values), expected, rtol=1e-12)

    def test_deterministic(self):
        """Test same seed gives identical training"""
        first, second = ae_train(self.cube, self.config), ae_train(self.cube, self.config)
        assert first.loss_history == second.loss_history

    def test_finite_differences(self):
        """Test analytic gradients against central differences"""
        params = ae_init(4, self.config)
        rng = np.random.default_rng(1)
        params.tensors = {
            name: rng.normal(0, 0.3, value.shape) if value.ndim == 1 else value
            for name, value in params.tensors.items()
        }
        _, grads = ae_backward(params, self.cube.values)
        step = 1e-6
        for name, value in list(params.tensors.items()):
            for _ in range(3):
                index = tuple(int(rng.integers(0, dim)) for dim in value.shape)
                original = value[index]
                value[index] = original + step
                loss_plus, _ = ae_backward(params, self.cube.values)
                value[index] = original - step
                loss_minus, _ = ae_backward(params, self.cube.values)
                value[index] = original
                numeric = (loss_plus - loss_minus) / (2 * step)
                assert grads[name][index] == pytest.approx(numeric, rel=1e-4, abs=1e-8), name

    def test_width_mismatch(self):
        """Test a cube with other band count is rejected"""
        params = ae_init(4, self.config)
        with pytest.raises(BandAlignmentError):
            ae_scores(params, np.zeros((3, 5)))

    def test_rejects_invalid_config(self):
        """Test learning rates out of order"""
        with pytest.raises(ValueError):
            AeConfig(lr_init=1e-5, lr_final=1e-3)


class TestAutoModulo:
    """Tests for dynamic detector loading"""

    def test_loads_rx(self):
        """Test det:rx loads and runs"""
        module = AutoModulo("det:rx").load_module()
        module.options["data"] = random_cube(seed=6)
        detection = module.run()
        assert isinstance(detection, DetectionMap)
        assert module.get_result()[-1] is detection

    def test_loads_ae(self):
        """Test det:ae loads with its metadata"""
        module = AutoModulo("det:ae").load_module()
        assert module.meta["type"] == "detector"
        module.options["data"] = random_cube(height=3, width=3, seed=7)
        module.options["config"] = {"hidden_widths": [2], "epochs": 3}
        assert module.run().scores.shape == (9,)

    def test_ae_normalizes_input(self):
        """Test det:ae scores a raw cube as its min-max normalized copy"""
        raw = random_cube(height=3, width=3, seed=8).with_values(
            40.0 * np.random.default_rng(8).uniform(size=(9, 4)) - 5.0
        )
        config = AeConfig(hidden_widths=[2], epochs=3)
        module = AutoModulo("det:ae").load_module()
        module.options.update({"data": raw, "config": config})
        normalized = normalize_cube(raw)
        expected = ae_detect(normalized, ae_train(normalized, config)).scores
        assert np.array_equal(module.run().scores, expected)

    def test_run_without_data(self):
        """Test a module without a cube returns None"""
        assert AutoModulo("det:rx").load_module().run() is None

    @pytest.mark.parametrize("spec", ["det:nope", "rx", "det:", "a:b:c"])
    def test_rejects_unknown(self, spec):
        """Test malformed or unknown module names"""
        with pytest.raises(ConfigError):
            AutoModulo(spec).load_module()

    def test_discover(self):
        """Test both detectors are discovered"""
        assert {"rx", "ae"} <= set(discover_modules("det"))


class TestDetectionMap:
    """Tests for detection map normalization and files"""

    def test_normalize(self):
        """Test {2, 4, 6} maps to {0, 0.5, 1}"""
        out = normalize_map(DetectionMap(1, 3, np.array([2.0, 4.0, 6.0])))
        assert out.scores.tolist() == [0.0, 0.5, 1.0]
        assert out.normalized

    def test_constant_map(self):
        """Test a constant map normalizes to zeros"""
        out = normalize_map(DetectionMap(2, 2, np.full(4, 3.0)))
        assert np.all(out.scores == 0.0)

    def test_rejects_non_finite(self):
        """Test NaN scores are rejected"""
        with pytest.raises(CubeFormatError):
            DetectionMap(1, 2, np.array([0.0, np.nan]))

    def test_save_load_with_preview(self, tmp_path):
        """Test map files and the graymap preview"""
        detection = normalize_map(DetectionMap(2, 3, np.arange(6.0)))
        save_map(detection, tmp_path / "map", preview=True)
        loaded = load_map(tmp_path / "map")
        assert np.allclose(loaded.scores, detection.scores, atol=1e-7)
        assert loaded.normalized
        assert (tmp_path / "map.pgm").is_file()
