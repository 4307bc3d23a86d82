import json

import numpy as np
import pytest

from tvsurrogate.tensorfile import write_tensor

PLANES = ["input", "band1", "band2", "band3", "band4", "band5", "band6"]


def make_entry(rng, size):
    """One synthetic tensor: smooth input split into plane-layout bands."""
    img = rng.standard_normal((size, size))
    img = (img - img.mean()) / max(img.std(), 1e-12)
    # split the image into 6 planes that sum back to it, coarse to fine
    weights = np.array([0.35, 0.25, 0.15, 0.10, 0.10, 0.05])
    bands = weights[:, None, None] * img[None]
    return np.concatenate([img[None], bands]).astype("<f4")


@pytest.fixture
def dataset_dir(tmp_path):
    rng = np.random.default_rng(7)
    entries = []
    for i in range(8):
        name = f"entry_{i:05d}.btf"
        write_tensor(tmp_path / name, make_entry(rng, 16))
        entries.append({"tensor_file": name, "source": f"synthetic_{i}"})
    manifest = {
        "format_version": 1,
        "master_seed": 7,
        "preprocessing": {"crop_size": 16, "mean": 0.0, "std": 1.0},
        "plane_layout": PLANES,
        "entries": entries,
    }
    (tmp_path / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return tmp_path
