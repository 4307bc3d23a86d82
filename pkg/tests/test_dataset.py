import json

import numpy as np
import pytest
from PIL import Image

from spectv import (
    DecompositionConfig,
    generate_ground_truth,
    load_manifest,
    preprocess,
    read_tensor,
    seeded_crop,
    to_luma,
    verify_manifest,
    write_tensor,
)

FAST = DecompositionConfig(dt=0.2, n_steps=8, schedule=(2, 4, 7))


def save_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(path)


@pytest.fixture
def sources(tmp_path):
    """Three 48x48 grayscale PNGs with distinct content."""
    rng = np.random.default_rng(7)
    paths = []
    for i, arr in enumerate(
        (
            rng.integers(0, 256, (48, 48)),
            np.tile(np.linspace(0, 255, 48), (48, 1)),
            np.full((48, 48), 128.0),
        )
    ):
        p = tmp_path / f"src_{i}.png"
        save_png(p, arr)
        paths.append(p)
    return paths


class TestToLuma:
    def test_bt601_weights_exact(self, tmp_path):
        rgb = np.zeros((4, 4, 3), dtype=np.uint8)
        rgb[..., 0] = 255
        p = tmp_path / "red.png"
        Image.fromarray(rgb, mode="RGB").save(p)
        lum = to_luma(p)
        assert lum.shape == (4, 4)
        assert np.all(lum == 255 * 0.299)

    def test_channel_combination(self):
        rgb = np.zeros((2, 2, 3), dtype=np.uint8)
        rgb[..., 0] = 10
        rgb[..., 1] = 20
        rgb[..., 2] = 30
        lum = to_luma(Image.fromarray(rgb, mode="RGB"))
        assert np.allclose(lum, 10 * 0.299 + 20 * 0.587 + 30 * 0.114, atol=1e-12)

    def test_grayscale_passthrough(self, tmp_path):
        arr = np.arange(16, dtype=np.uint8).reshape(4, 4)
        p = tmp_path / "gray.png"
        save_png(p, arr)
        assert np.array_equal(to_luma(p), arr.astype(np.float64))

    def test_accepts_bytes_and_image(self, tmp_path):
        arr = np.full((4, 4), 77, dtype=np.uint8)
        p = tmp_path / "a.png"
        save_png(p, arr)
        from_path = to_luma(p)
        from_bytes = to_luma(p.read_bytes())
        from_image = to_luma(Image.open(p))
        assert np.array_equal(from_path, from_bytes)
        assert np.array_equal(from_path, from_image)

    def test_rgba_converts(self):
        rgba = np.zeros((2, 2, 4), dtype=np.uint8)
        rgba[..., 1] = 100
        rgba[..., 3] = 255
        lum = to_luma(Image.fromarray(rgba, mode="RGBA"))
        assert np.allclose(lum, 100 * 0.587)


class TestSeededCrop:
    def test_deterministic(self):
        gray = np.random.default_rng(3).random((40, 40))
        a = seeded_crop(gray, 16, np.random.default_rng(5), False)
        b = seeded_crop(gray, 16, np.random.default_rng(5), False)
        assert np.array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_shape_offset_factor(self):
        gray = np.random.default_rng(3).random((40, 40))
        crop, (row, col), factor = seeded_crop(gray, 16, np.random.default_rng(1), False)
        assert crop.shape == (16, 16)
        assert factor == 1
        assert 0 <= row <= 24 and 0 <= col <= 24
        assert np.array_equal(crop, gray[row : row + 16, col : col + 16])

    def test_augmented_box_mean(self):
        # a 4x4 source with a 2x window leaves offset (0, 0) only, so the
        # augmented crop is exactly the 2x2 block means
        gray = np.arange(16, dtype=np.float64).reshape(4, 4)
        crop, offset, factor = seeded_crop(gray, 2, np.random.default_rng(0), True)
        assert offset == (0, 0)
        assert factor == 2
        expected = np.array([[2.5, 4.5], [10.5, 12.5]])
        assert np.array_equal(crop, expected)

    def test_returns_copy(self):
        gray = np.zeros((20, 20))
        crop, _, _ = seeded_crop(gray, 8, np.random.default_rng(0), False)
        crop += 1.0
        assert gray.max() == 0.0

    def test_too_small_raises(self):
        gray = np.zeros((10, 10))
        with pytest.raises(ValueError, match="smaller"):
            seeded_crop(gray, 16, np.random.default_rng(0), False)
        with pytest.raises(ValueError, match="smaller"):
            seeded_crop(gray, 8, np.random.default_rng(0), True)


class TestGenerateGroundTruth:
    def test_manifest_schema(self, sources, tmp_path):
        out = tmp_path / "ds"
        manifest = generate_ground_truth(
            sources, out, config=FAST, seed=11, crop_size=16
        )
        assert manifest["format_version"] == 1
        assert manifest["master_seed"] == 11
        pre = manifest["preprocessing"]
        assert pre["crop_size"] == 16
        assert pre["luma"] == "bt601"
        assert pre["std"] > 0
        assert manifest["decomposition"] == FAST.to_dict()
        assert manifest["plane_layout"] == ["input", "band1", "band2", "band3"]
        assert len(manifest["entries"]) == 3
        for i, entry in enumerate(manifest["entries"]):
            assert entry["tensor_file"] == f"entry_{i:05d}.btf"
            assert entry["seed_spawn"] == i
            assert entry["downsample_factor"] in (1, 2)
        assert load_manifest(out) == manifest

    def test_tensor_contents_reconstruct(self, sources, tmp_path):
        out = tmp_path / "ds"
        generate_ground_truth(sources, out, config=FAST, seed=11, crop_size=16)
        for i in range(3):
            planes = read_tensor(out / f"entry_{i:05d}.btf")
            assert planes.shape == (4, 16, 16)
            assert planes.dtype == np.float32
            rec = planes[1:].sum(axis=0)
            assert np.abs(rec - planes[0]).max() < 1e-5

    def test_regeneration_is_byte_identical(self, sources, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        generate_ground_truth(sources, a, config=FAST, seed=3, crop_size=16)
        generate_ground_truth(sources, b, config=FAST, seed=3, crop_size=16)
        for name in sorted(p.name for p in a.iterdir()):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_count_cycles_sources(self, sources, tmp_path):
        out = tmp_path / "ds"
        manifest = generate_ground_truth(
            sources, out, count=5, config=FAST, seed=0, crop_size=16
        )
        assert len(manifest["entries"]) == 5
        assert manifest["entries"][3]["source"] == str(sources[0])
        assert manifest["entries"][4]["source"] == str(sources[1])

    def test_augment_fraction_extremes(self, sources, tmp_path):
        never = generate_ground_truth(
            sources, tmp_path / "n", config=FAST, seed=1, crop_size=16,
            augment_fraction=0.0,
        )
        assert all(e["downsample_factor"] == 1 for e in never["entries"])
        always = generate_ground_truth(
            sources, tmp_path / "y", config=FAST, seed=1, crop_size=16,
            augment_fraction=1.0,
        )
        assert all(e["downsample_factor"] == 2 for e in always["entries"])
        for e in always["entries"]:
            assert e["crop_size"] == [32, 32]

    def test_augment_skipped_for_small_sources(self, tmp_path):
        p = tmp_path / "small.png"
        save_png(p, np.random.default_rng(0).integers(0, 256, (20, 20)))
        manifest = generate_ground_truth(
            [p], tmp_path / "ds", config=FAST, seed=1, crop_size=16,
            augment_fraction=1.0,
        )
        assert manifest["entries"][0]["downsample_factor"] == 1

    def test_constant_sources_use_std_floor(self, tmp_path):
        p = tmp_path / "flat.png"
        save_png(p, np.full((20, 20), 55))
        manifest = generate_ground_truth(
            [p], tmp_path / "ds", config=FAST, seed=1, crop_size=16
        )
        assert manifest["preprocessing"]["std"] == 1.0
        planes = read_tensor(tmp_path / "ds" / "entry_00000.btf")
        assert np.all(np.isfinite(planes))

    def test_no_sources_raises(self, tmp_path):
        with pytest.raises(ValueError, match="no input images"):
            generate_ground_truth([], tmp_path / "ds", config=FAST)

    def test_preprocess_replays_entry(self, sources, tmp_path):
        out = tmp_path / "ds"
        manifest = generate_ground_truth(
            sources, out, count=4, config=FAST, seed=9, crop_size=16,
            augment_fraction=0.5,
        )
        pre = manifest["preprocessing"]
        for i, entry in enumerate(manifest["entries"]):
            grid = preprocess(
                entry["source"],
                pre["crop_size"],
                manifest["master_seed"],
                pre["mean"],
                pre["std"],
                index=entry["seed_spawn"],
                augment=entry["downsample_factor"] == 2,
            )
            stored = read_tensor(out / entry["tensor_file"])[0]
            assert np.array_equal(grid.astype("<f4"), stored)


class TestVerifyManifest:
    def test_accepts_fresh_dataset(self, sources, tmp_path):
        out = tmp_path / "ds"
        generate_ground_truth(sources, out, config=FAST, seed=2, crop_size=16)
        verify_manifest(out)

    def test_missing_tensor(self, sources, tmp_path):
        out = tmp_path / "ds"
        generate_ground_truth(sources, out, config=FAST, seed=2, crop_size=16)
        (out / "entry_00001.btf").unlink()
        with pytest.raises(ValueError, match="missing"):
            verify_manifest(out)

    def test_shape_mismatch(self, sources, tmp_path):
        out = tmp_path / "ds"
        generate_ground_truth(sources, out, config=FAST, seed=2, crop_size=16)
        write_tensor(out / "entry_00000.btf", np.zeros((2, 16, 16), dtype="<f4"))
        with pytest.raises(ValueError, match="does not match"):
            verify_manifest(out)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_manifest(tmp_path)
