"""Image ingestion, preprocessing, and ground-truth dataset generation.

The pipeline follows a strict two-pass protocol so every artifact is
reproducible from the manifest alone: first all crops are drawn with
per-entry seeded generators, then the dataset-global standardization
statistics are computed over every crop, and only then are the
standardized grids decomposed and written. Standardization is global
(one mean/std pair for the whole dataset) because per-image scaling
would break cross-image contrast comparability.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .pipeline import DecompositionConfig, ModelDrivenDecomposer
from .tensorfile import read_tensor, write_tensor

__all__ = [
    "to_luma",
    "seeded_crop",
    "preprocess",
    "generate_ground_truth",
    "load_manifest",
    "verify_manifest",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.json"
_BT601 = np.array([0.299, 0.587, 0.114])


def to_luma(source) -> np.ndarray:
    """Decode an image to float64 grayscale intensities in [0, 255].

    RGB inputs use ITU-R BT.601 luma weights (0.299, 0.587, 0.114)
    applied in float, without 8-bit re-quantization. Grayscale inputs
    pass through unchanged.
    """
    if isinstance(source, (bytes, bytearray)):
        img = Image.open(io.BytesIO(source))
    elif isinstance(source, Image.Image):
        img = source
    else:
        img = Image.open(source)
    if img.mode in ("L", "I", "I;16", "F"):
        return np.asarray(img, dtype=np.float64)
    arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    return arr @ _BT601


def _entry_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


@dataclass
class CropMeta:
    source: str
    crop_offset: tuple[int, int]  # (row, col) in the source image
    crop_size: tuple[int, int]  # size actually cut from the source
    downsample_factor: int  # 1 plain, 2 for the box-mean augmentation
    seed_spawn: int


def seeded_crop(
    gray: np.ndarray,
    crop_size: int,
    rng: np.random.Generator,
    augment: bool,
) -> tuple[np.ndarray, tuple[int, int], int]:
    """Random crop; augmented entries cut 2x and box-mean downsample.

    Returns (crop, (row, col) offset, downsample factor). Raises
    ValueError when the source is smaller than the requested window.
    """
    src = crop_size * 2 if augment else crop_size
    h, w = gray.shape
    if h < src or w < src:
        raise ValueError(f"image {h}x{w} smaller than the {src}-pixel crop window")
    row = int(rng.integers(0, h - src + 1))
    col = int(rng.integers(0, w - src + 1))
    crop = gray[row : row + src, col : col + src]
    if augment:
        crop = crop.reshape(crop_size, 2, crop_size, 2).mean(axis=(1, 3))
        return crop, (row, col), 2
    return crop.copy(), (row, col), 1


def preprocess(
    source,
    crop_size: int,
    seed: int,
    mean: float,
    std: float,
    index: int = 0,
    augment: bool = False,
) -> np.ndarray:
    """Single-entry preprocessing with given dataset statistics."""
    gray = to_luma(source)
    rng = _entry_rng(seed, index)
    rng.random()  # generation draws the augmentation coin first; match it
    crop, _, _ = seeded_crop(gray, crop_size, rng, augment)
    return (crop - mean) / std


def _draw_entries(paths, count, crop_size, seed, augment_fraction):
    crops = []
    metas = []
    for i in range(count):
        path = Path(paths[i % len(paths)])
        gray = to_luma(path)
        rng = _entry_rng(seed, i)
        big_enough = min(gray.shape) >= 2 * crop_size
        augment = bool(rng.random() < augment_fraction) and big_enough
        crop, offset, factor = seeded_crop(gray, crop_size, rng, augment)
        crops.append(crop)
        metas.append(
            CropMeta(
                source=str(path),
                crop_offset=offset,
                crop_size=(crop_size * factor, crop_size * factor),
                downsample_factor=factor,
                seed_spawn=i,
            )
        )
    return crops, metas


def generate_ground_truth(
    image_paths,
    out_dir,
    count: int | None = None,
    config: DecompositionConfig | None = None,
    seed: int = 0,
    crop_size: int = 64,
    augment_fraction: float = 0.25,
) -> dict:
    """Decompose seeded crops of the given images into band tensor files.

    Each entry's tensor holds the standardized input grid as plane 0
    followed by its bands. The manifest records everything needed to
    regenerate the files bit-for-bit from the sources.
    """
    image_paths = [str(p) for p in image_paths]
    if not image_paths:
        raise ValueError("no input images given")
    if count is None:
        count = len(image_paths)
    config = config or DecompositionConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    crops, metas = _draw_entries(image_paths, count, crop_size, seed, augment_fraction)
    stacked = np.stack(crops)
    mean = float(stacked.mean())
    std = float(stacked.std())
    if std < 1e-12:
        std = 1.0

    decomposer = ModelDrivenDecomposer(config)
    entries = []
    for i, (crop, meta) in enumerate(zip(crops, metas)):
        grid = (crop - mean) / std
        result = decomposer.analyze(grid)
        planes = np.concatenate([grid[None], result.bands.bands], axis=0)
        name = f"entry_{i:05d}.btf"
        write_tensor(out_dir / name, planes.astype("<f4"))
        entries.append(
            {
                "source": meta.source,
                "crop_offset": list(meta.crop_offset),
                "crop_size": list(meta.crop_size),
                "downsample_factor": meta.downsample_factor,
                "seed_spawn": meta.seed_spawn,
                "tensor_file": name,
                "solver_warnings": result.warnings,
            }
        )
    n_bands = len(config.schedule)
    manifest = {
        "format_version": 1,
        "master_seed": seed,
        "preprocessing": {
            "crop_size": crop_size,
            "augment_fraction": augment_fraction,
            "mean": mean,
            "std": std,
            "luma": "bt601",
        },
        "decomposition": config.to_dict(),
        "plane_layout": ["input"] + [f"band{k+1}" for k in range(n_bands)],
        "entries": entries,
    }
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def load_manifest(dataset_dir) -> dict:
    with open(Path(dataset_dir) / MANIFEST_NAME) as fh:
        return json.load(fh)


def verify_manifest(dataset_dir) -> None:
    """Check that every referenced tensor exists with the declared shape."""
    dataset_dir = Path(dataset_dir)
    manifest = load_manifest(dataset_dir)
    n_planes = len(manifest["plane_layout"])
    crop = manifest["preprocessing"]["crop_size"]
    for entry in manifest["entries"]:
        path = dataset_dir / entry["tensor_file"]
        if not path.exists():
            raise ValueError(f"missing tensor file: {path}")
        planes = read_tensor(path)
        if planes.shape != (n_planes, crop, crop):
            raise ValueError(
                f"{path}: shape {planes.shape} does not match manifest "
                f"({n_planes}, {crop}, {crop})"
            )
