import json

import numpy as np
import torch

from tvsurrogate.inference import (
    bench_forward,
    complete_planes,
    export_for_eval,
    export_for_probes,
    predict_bands,
)
from tvsurrogate.model import TVSpecNet
from tvsurrogate.tensorfile import read_tensor, write_tensor


def _model():
    torch.manual_seed(0)
    model = TVSpecNet()
    model.eval()
    return model


def test_predict_bands_shape():
    image = np.random.default_rng(0).standard_normal((16, 20))
    out = predict_bands(_model(), image)
    assert out.shape == (5, 16, 20)
    assert np.isfinite(out).all()


def test_complete_planes_closure():
    rng = np.random.default_rng(1)
    image = rng.standard_normal((8, 8))
    bands = rng.standard_normal((5, 8, 8))
    planes = complete_planes(image, bands)
    assert planes.shape == (7, 8, 8)
    # all band planes together reproduce the input plane
    np.testing.assert_allclose(planes[1:].sum(axis=0), planes[0], atol=1e-5)


def test_export_for_eval_matches_names(dataset_dir, tmp_path):
    out = tmp_path / "pred"
    n = export_for_eval(_model(), dataset_dir, out)
    assert n == 8
    for i in range(8):
        planes = read_tensor(out / f"entry_{i:05d}.btf")
        assert planes.shape == (7, 16, 16)
        gt = read_tensor(dataset_dir / f"entry_{i:05d}.btf")
        np.testing.assert_array_equal(planes[0], gt[0])


def test_export_for_probes(tmp_path):
    probes = tmp_path / "probes"
    probes.mkdir()
    rng = np.random.default_rng(2)
    grid = rng.standard_normal((16, 16)).astype("<f4")
    variants = {
        "": grid,
        "__x2": 2.0 * grid,
        "__shift8_0": np.roll(grid, 8, axis=0),
        "__rot90": np.rot90(grid).copy(),
    }
    for suffix, plane in variants.items():
        write_tensor(probes / f"probe_0000{suffix}.btf", plane[None])
    (probes / "probes.json").write_text(
        json.dumps(
            {
                "ids": ["probe_0000"],
                "variants": ["x2", "shift8_0", "rot90"],
                "shift": [8, 0],
                "rotation_deg": 90,
            }
        )
    )
    out = tmp_path / "pred"
    n = export_for_probes(_model(), probes, out)
    assert n == 4
    assert (out / "probes.json").exists()
    for suffix in variants:
        planes = read_tensor(out / f"probe_0000{suffix}.btf")
        assert planes.shape[0] == 7
    rot = read_tensor(out / "probe_0000__rot90.btf")
    assert rot.shape[1:] == (16, 16)


def test_bench_forward_rows():
    rows = bench_forward(_model(), [16, 24], repeats=1)
    assert [r["size"] for r in rows] == [16, 24]
    assert all(r["seconds"] > 0 for r in rows)
