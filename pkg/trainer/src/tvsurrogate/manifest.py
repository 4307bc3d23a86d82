"""Dataset manifest loading and validation.

The producer writes a directory of tensor files plus a manifest.json
describing provenance and the plane layout. The trainer only relies on
the documented fields: plane_layout (with "input" first and bandK
planes after it), preprocessing.crop_size, and the entries list with
tensor_file names.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .tensorfile import read_tensor

MANIFEST_NAME = "manifest.json"

__all__ = ["DatasetIndex", "load_dataset", "MANIFEST_NAME"]


@dataclass(frozen=True)
class DatasetIndex:
    """Resolved view of a dataset directory."""

    root: Path
    manifest: dict
    tensor_files: tuple[str, ...]
    n_bands: int
    crop_size: int

    def load_entry(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (input grid, band stack) as float32 arrays."""
        planes = read_tensor(self.root / self.tensor_files[i])
        return planes[0], planes[1:]

    def __len__(self) -> int:
        return len(self.tensor_files)

    def content_hash(self) -> str:
        """Order-sensitive digest of the manifest and tensor bytes."""
        digest = hashlib.sha256()
        digest.update(json.dumps(self.manifest, sort_keys=True).encode())
        for name in self.tensor_files:
            digest.update((self.root / name).read_bytes())
        return digest.hexdigest()


def load_dataset(dataset_dir) -> DatasetIndex:
    root = Path(dataset_dir)
    path = root / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} in {root}")
    with open(path) as fh:
        manifest = json.load(fh)
    layout = manifest.get("plane_layout")
    if not layout or layout[0] != "input":
        raise ValueError(f"unsupported plane layout: {layout}")
    n_bands = len(layout) - 1
    if n_bands < 1:
        raise ValueError("manifest declares no band planes")
    entries = manifest.get("entries", [])
    if not entries:
        raise ValueError("manifest has no entries")
    files = tuple(e["tensor_file"] for e in entries)
    for name in files:
        if not (root / name).exists():
            raise FileNotFoundError(f"missing tensor file {name}")
    crop = int(manifest.get("preprocessing", {}).get("crop_size", 0))
    if crop <= 0:
        first = read_tensor(root / files[0])
        crop = first.shape[-1]
    return DatasetIndex(
        root=root,
        manifest=manifest,
        tensor_files=files,
        n_bands=n_bands,
        crop_size=crop,
    )
