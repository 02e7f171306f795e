"""Tests for cube/mask I/O, normalization, band alignment and synthetic scenes"""
import os
import sys

import numpy as np
import pytest

# Add src directory to Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from bsdm.core.exceptions import BandAlignmentError, ConfigError, CubeFormatError, MaskFormatError
from bsdm.core.filelocal import build_model
from bsdm.core.hsi_data import (
    AnomalyMask, HsiCube, SceneConfig, align_bands, cube_paths, load_cube, load_mask,
    normalize_cube, reassemble_bands, save_cube, save_mask, synth_scene,
)


def make_cube(height=3, width=4, bands=5, seed=0, dtype=np.float32):
    rng = np.random.default_rng(seed)
    values = rng.uniform(0, 1, size=(height * width, bands)).astype(dtype)
    return HsiCube(height, width, bands, values)


class TestCubeFiles:
    """Tests for the header + payload cube format"""

    def test_round_trip_is_bit_exact(self, tmp_path):
        """Test that a float32 cube survives save/load unchanged"""
        cube = make_cube()
        save_cube(cube, tmp_path / "scene")
        loaded = load_cube(tmp_path / "scene")
        assert (loaded.height, loaded.width, loaded.bands) == (3, 4, 5)
        assert np.array_equal(loaded.values, cube.values)

    def test_load_accepts_header_or_payload_path(self, tmp_path):
        """Test that either file of the pair resolves the cube"""
        cube = make_cube()
        save_cube(cube, tmp_path / "scene")
        assert np.array_equal(load_cube(tmp_path / "scene.hdr.json").values, cube.values)
        assert np.array_equal(load_cube(tmp_path / "scene.bin").values, cube.values)

    def test_header_fields(self, tmp_path):
        """Test the header declares dtype and layout"""
        import json
        save_cube(make_cube(), tmp_path / "scene")
        header = json.loads((tmp_path / "scene.hdr.json").read_text())
        assert header == {"height": 3, "width": 4, "bands": 5, "dtype": "f32le", "layout": "pixel-major"}

    def test_missing_payload(self, tmp_path):
        """Test that a header without payload is rejected"""
        save_cube(make_cube(), tmp_path / "scene")
        os.remove(tmp_path / "scene.bin")
        with pytest.raises(CubeFormatError):
            load_cube(tmp_path / "scene")

    def test_size_mismatch(self, tmp_path):
        """Test that a truncated payload is rejected"""
        save_cube(make_cube(), tmp_path / "scene")
        data = (tmp_path / "scene.bin").read_bytes()
        (tmp_path / "scene.bin").write_bytes(data[:-4])
        with pytest.raises(CubeFormatError):
            load_cube(tmp_path / "scene")

    def test_non_finite_payload(self, tmp_path):
        """Test that NaN values in the payload are rejected"""
        save_cube(make_cube(), tmp_path / "scene")
        values = np.fromfile(tmp_path / "scene.bin", dtype="<f4")
        values[7] = np.nan
        values.tofile(tmp_path / "scene.bin")
        with pytest.raises(CubeFormatError):
            load_cube(tmp_path / "scene")

    def test_cube_rejects_wrong_shape(self):
        """Test HsiCube shape validation"""
        with pytest.raises(CubeFormatError):
            HsiCube(2, 2, 3, np.zeros((5, 3)))

    def test_cube_paths(self):
        """Test prefix resolution"""
        header, payload = cube_paths("a/b.hdr.json")
        assert str(header).endswith("b.hdr.json")
        assert str(payload).endswith("b.bin")


class TestMaskFiles:
    """Tests for P5 graymap masks"""

    def test_round_trip(self, tmp_path):
        """Test mask save/load keeps labels"""
        labels = np.zeros(12, dtype=bool)
        labels[[1, 5, 6]] = True
        save_mask(AnomalyMask(3, 4, labels), tmp_path / "mask.pgm")
        loaded = load_mask(tmp_path / "mask.pgm")
        assert (loaded.height, loaded.width) == (3, 4)
        assert np.array_equal(loaded.labels, labels)
        assert loaded.anomaly_count == 3

    def test_rejects_values_outside_binary(self, tmp_path):
        """Test that a graymap with value 17 is rejected"""
        (tmp_path / "bad.pgm").write_bytes(b"P5\n2 2\n255\n" + bytes([0, 17, 255, 0]))
        with pytest.raises(MaskFormatError):
            load_mask(tmp_path / "bad.pgm")

    def test_rejects_non_graymap(self, tmp_path):
        """Test that arbitrary bytes are rejected"""
        (tmp_path / "bad.pgm").write_bytes(b"not an image")
        with pytest.raises(MaskFormatError):
            load_mask(tmp_path / "bad.pgm")

    def test_missing_file(self, tmp_path):
        """Test missing mask file"""
        with pytest.raises(MaskFormatError):
            load_mask(tmp_path / "none.pgm")


class TestNormalizeCube:
    """Tests for global min-max normalization"""

    def test_range(self):
        """Test output spans exactly [0, 1]"""
        cube = HsiCube(2, 2, 2, np.array([[2.0, 4.0], [6.0, 3.0], [5.0, 2.5], [4.5, 3.5]]))
        normalized = normalize_cube(cube)
        assert normalized.values.min() == 0.0
        assert normalized.values.max() == 1.0
        assert normalized.values[0, 1] == pytest.approx(0.5)

    def test_constant_cube_becomes_zeros(self):
        """Test degenerate constant cube"""
        cube = HsiCube(2, 2, 3, np.full((4, 3), 0.7))
        assert np.all(normalize_cube(cube).values == 0.0)

    def test_unit_range_cube_unchanged(self):
        """Test a cube already spanning [0, 1] is unchanged"""
        cube = make_cube(dtype=np.float64)
        values = cube.values.copy()
        values[0, 0], values[1, 1] = 0.0, 1.0
        cube = cube.with_values(values)
        assert np.array_equal(normalize_cube(cube).values, values)

    def test_idempotent_and_dtype_preserved(self):
        """Test normalizing twice changes nothing beyond 1e-7"""
        once = normalize_cube(make_cube(seed=3))
        twice = normalize_cube(once)
        assert twice.values.dtype == np.float32
        assert np.max(np.abs(once.values - twice.values)) <= 1e-7


class TestAlignBands:
    """Tests for band alignment and reassembly"""

    @pytest.mark.parametrize("bands,train_bands", [(3, 5), (5, 3), (7, 3), (20, 20)])
    def test_batch_and_output_widths(self, bands, train_bands):
        """Test every batch has B_train bands and reassembly restores B"""
        cube = make_cube(bands=bands)
        batches, plan = align_bands(cube, train_bands, seed=4)
        assert all(batch.bands == train_bands for batch in batches)
        restored = reassemble_bands(batches, plan)
        assert restored.bands == bands

    def test_mirror_three_to_five(self):
        """Test the mirror equals [b0, b1, b2, b1, b0]"""
        cube = make_cube(bands=3)
        batches, plan = align_bands(cube, 5)
        assert plan.kind == "mirror"
        assert plan.batch_indices[0].tolist() == [0, 1, 2, 1, 0]
        assert np.array_equal(batches[0].values, cube.values[:, [0, 1, 2, 1, 0]])

    def test_identity_round_trip(self):
        """Test equal widths give back the same values"""
        cube = make_cube(bands=6)
        batches, plan = align_bands(cube, 6)
        assert plan.kind == "identity"
        assert np.array_equal(reassemble_bands(batches, plan).values, cube.values)

    def test_mirror_limit(self):
        """Test mirroring beyond 2B-1 bands fails"""
        with pytest.raises(BandAlignmentError):
            align_bands(make_cube(bands=3), 6)

    def test_removal_is_seeded(self):
        """Test random removal depends only on the seed"""
        cube = make_cube(bands=5)
        _, first = align_bands(cube, 3, seed=9)
        _, second = align_bands(cube, 3, seed=9)
        assert first.kind == "remove"
        assert first.removed == second.removed
        assert len(first.removed) == 2

    def test_removed_band_copies_nearest_retained(self):
        """Test removed bands take the output of the nearest retained band"""
        cube = make_cube(bands=5)
        batches, plan = align_bands(cube, 3, seed=1)
        restored = reassemble_bands(batches, plan)
        retained = [band for band in range(5) if band not in plan.removed]
        for band in plan.removed:
            nearest = min(retained, key=lambda kept: (abs(kept - band), kept))
            assert np.array_equal(restored.values[:, band], cube.values[:, nearest])
        for band in retained:
            assert np.array_equal(restored.values[:, band], cube.values[:, band])

    def test_split_pads_last_batch(self):
        """Test splitting 7 bands into batches of 3"""
        cube = make_cube(bands=7)
        batches, plan = align_bands(cube, 3)
        assert plan.kind == "split"
        assert [indices.tolist() for indices in plan.batch_indices] == [[0, 1, 2], [3, 4, 5], [6, 6, 6]]
        assert np.array_equal(reassemble_bands(batches, plan).values, cube.values)


class TestSynthScene:
    """Tests for the synthetic scene generator"""

    def setup_method(self):
        self.config = SceneConfig(height=16, width=16, bands=8, anomaly_count=1, anomaly_size=4, seed=2)

    def test_default_dimensions(self):
        """Test the default scene is 64x64x20"""
        cube, mask = synth_scene(SceneConfig())
        assert cube.shape_label == "64x64x20"
        assert mask.anomaly_count == 16

    def test_deterministic(self):
        """Test same config gives bit-identical output"""
        cube_a, mask_a = synth_scene(self.config)
        cube_b, mask_b = synth_scene(self.config)
        assert np.array_equal(cube_a.values, cube_b.values)
        assert np.array_equal(mask_a.labels, mask_b.labels)

    def test_normalized_float32(self):
        """Test output cube is normalized float32"""
        cube, _ = synth_scene(self.config)
        assert cube.values.dtype == np.float32
        assert cube.values.min() == 0.0
        assert cube.values.max() == 1.0

    def test_anomaly_block_is_contiguous(self):
        """Test a 4-pixel anomaly forms a 2x2 block"""
        _, mask = synth_scene(self.config)
        rows, cols = np.nonzero(mask.labels.reshape(16, 16))
        assert mask.anomaly_count == 4
        assert rows.max() - rows.min() == 1
        assert cols.max() - cols.min() == 1

    def test_rejects_large_anomaly_fraction(self):
        """Test implied anomaly fraction above 0.02 is rejected"""
        with pytest.raises(ConfigError):
            build_model(SceneConfig, {"height": 8, "width": 8, "anomaly_count": 2, "anomaly_size": 4})

    def test_rejects_unknown_keys(self):
        """Test unknown config keys are rejected"""
        with pytest.raises(ConfigError):
            build_model(SceneConfig, {"colour": "blue"})
