"""Tests for multiple-inference background suppression"""
import math
import os
import sys

import numpy as np
import pytest

# Add src directory to Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bsdm.core.denoiser import forward, init_params
from bsdm.core.diffusion import CubeStats, make_schedule, remove_background
from bsdm.core.exceptions import ConfigError, ScheduleError
from bsdm.core.hsi_data import HsiCube
from bsdm.core.suppression import suppress, suppress_trace
from bsdm.core.training import Checkpoint, TrainConfig

SMALL = dict(hidden=(6, 4, 4, 6), inner=8, embed=10, time_features=8, steps=50)


def make_checkpoint(bands=3, seed=0, zero_output=False):
    params = init_params(bands, seed, **SMALL)
    if zero_output:
        tensors = dict(params.tensors)
        tensors["out.w"] = np.zeros_like(tensors["out.w"])
        tensors["out.b"] = np.zeros_like(tensors["out.b"])
        params = params.with_tensors(tensors)
    config = TrainConfig(epochs=1, T=50, t_train=10)
    return Checkpoint(params=params, config=config, stats=CubeStats(0.5, 0.2))


def make_cube(bands=3, seed=0, height=4, width=5):
    values = np.random.default_rng(seed).uniform(size=(height * width, bands))
    return HsiCube(height, width, bands, values)


class TestSuppress:
    """Tests for suppress and suppress_trace"""

    def setup_method(self):
        self.ckpt = make_checkpoint()
        self.cube = make_cube()
        self.schedule = make_schedule(50, 0.02)

    def test_single_iteration_matches_manual(self):
        """Test K=1 equals remove_background of the network output"""
        estimate = forward(self.ckpt.params, self.cube.values, 10)
        expected = remove_background(self.cube, estimate, self.schedule, 10).values
        assert np.array_equal(suppress(self.cube, self.ckpt, 1, 10).values, expected)

    def test_composition(self):
        """Test K=3 equals K=2 applied to the K=1 output"""
        once = suppress(self.cube, self.ckpt, 1, 10)
        three = suppress(self.cube, self.ckpt, 3, 10)
        assert np.array_equal(suppress(once, self.ckpt, 2, 10).values, three.values)

    def test_zero_network_scales_by_alpha_bar(self):
        """Test a zero network output divides by sqrt(alpha_bar_t) each iteration"""
        ckpt = make_checkpoint(zero_output=True)
        factor = (1.0 / math.sqrt(self.schedule.alpha_bar[9])) ** 3
        out = suppress(self.cube, ckpt, 3, 10).values
        assert np.allclose(out, factor * self.cube.values, rtol=1e-12)

    def test_trace(self):
        """Test the trace has K cubes ending with the suppress output"""
        trace = suppress_trace(self.cube, self.ckpt, 4, 10)
        assert len(trace) == 4
        assert np.array_equal(trace[-1].values, suppress(self.cube, self.ckpt, 4, 10).values)
        assert all(cube.shape_label == "4x5x3" for cube in trace)

    def test_input_unchanged(self):
        """Test suppression does not modify the input cube"""
        original = self.cube.values.copy()
        suppress(self.cube, self.ckpt, 2, 10)
        assert np.array_equal(self.cube.values, original)

    def test_split_bands(self):
        """Test a 7-band cube through a 3-band checkpoint keeps 7 bands"""
        cube = make_cube(bands=7, seed=3)
        out = suppress(cube, self.ckpt, 2, 10)
        assert out.bands == 7
        assert np.all(np.isfinite(out.values))

    def test_mirrored_bands(self):
        """Test a 2-band cube through a 3-band checkpoint keeps 2 bands"""
        out = suppress(make_cube(bands=2, seed=4), self.ckpt, 1, 10)
        assert out.bands == 2

    @pytest.mark.parametrize("bands", [2, 5, 7])
    def test_composition_with_aligned_bands(self, bands):
        """Test K=10 equals K=6 applied to the K=4 output for mirrored, removed and split bands"""
        cube = make_cube(bands=bands, seed=5)
        ten = suppress(cube, self.ckpt, 10, 10, seed=1)
        four = suppress(cube, self.ckpt, 4, 10, seed=1)
        assert np.array_equal(suppress(four, self.ckpt, 6, 10, seed=1).values, ten.values)

    def test_mirrored_bands_follow_current_cube(self):
        """Test each mirrored iteration equals one call on the previous output"""
        cube = make_cube(bands=2, seed=6)
        trace = suppress_trace(cube, self.ckpt, 3, 10)
        for previous, current in zip([cube] + trace[:-1], trace):
            assert np.array_equal(suppress(previous, self.ckpt, 1, 10).values, current.values)

    def test_rejects_zero_iterations(self):
        """Test K must be at least 1"""
        with pytest.raises(ConfigError):
            suppress(self.cube, self.ckpt, 0, 10)

    @pytest.mark.parametrize("t", [0, 51])
    def test_rejects_step_out_of_range(self, t):
        """Test t outside [1, T]"""
        with pytest.raises(ScheduleError):
            suppress(self.cube, self.ckpt, 1, t)

    def test_deterministic(self):
        """Test repeated calls are bit-identical"""
        first = suppress(make_cube(bands=5, seed=2), self.ckpt, 2, 10, seed=7)
        second = suppress(make_cube(bands=5, seed=2), self.ckpt, 2, 10, seed=7)
        assert np.array_equal(first.values, second.values)
