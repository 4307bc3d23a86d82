"""Command-line front end.

Subcommands: decompose, filter, spectrum, gen-dataset, eval, invariance,
bench. Exit codes: 0 success, 1 usage error, 2 runtime failure. A JSON
config file supplies decomposition/solver settings; explicit flags
override file values, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .dataset import generate_ground_truth, load_manifest, to_luma, verify_manifest
from .invariance import (
    evaluate_homogeneity,
    evaluate_rotation,
    evaluate_translation,
    invariance_table,
    translate,
)
from .metrics import MetricsReport, band_metrics
from .pipeline import DecompositionConfig, ModelDrivenDecomposer
from .solver import SolverConfig
from .tensorfile import read_tensor, write_tensor
from .transform import BandSet, FilterSpec, apply_filter

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _set_thread_cap(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def _build_config(args) -> DecompositionConfig:
    """Defaults < config file < explicit flags."""
    raw: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
    solver_raw = dict(raw.get("solver", {}))
    for flag, key in (("method", "method"), ("max_iters", "max_iters"), ("gap_tol", "gap_tol")):
        value = getattr(args, flag, None)
        if value is not None:
            solver_raw[key] = value
    for flag in ("dt", "n_steps"):
        value = getattr(args, flag, None)
        if value is not None:
            raw[flag] = value
    raw["solver"] = solver_raw
    raw.pop("n_bands", None)
    known = {"dt", "n_steps", "schedule", "solver"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return DecompositionConfig.from_dict(raw)


def _standardize(gray: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(gray.mean())
    std = float(gray.std())
    if std < 1e-12:
        std = 1.0
    return (gray - mean) / std, mean, std


def _save_png(path: Path, plane: np.ndarray) -> dict:
    """Min-max scale a band plane into 8-bit for display; return the scaling."""
    from PIL import Image

    lo = float(plane.min())
    hi = float(plane.max())
    span = hi - lo
    if span < 1e-30:
        data = np.zeros(plane.shape, dtype=np.uint8)
        span = 0.0
    else:
        data = np.clip(np.rint((plane - lo) / span * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path)
    return {"file": path.name, "min": lo, "max": hi, "span": span}


def _write_spectrum_csv(path: Path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scale", "amplitude"])
        for t, s in zip(curve.scales, curve.values):
            writer.writerow([f"{t:.10g}", f"{s:.10g}"])


def _write_spectrum_svg(path: Path, curve) -> None:
    w, h, pad = 640, 240, 20
    smax = max(float(curve.values.max()), 1e-30)
    tmax = float(curve.scales[-1])
    pts = " ".join(
        f"{pad + t / tmax * (w - 2 * pad):.1f},{h - pad - s / smax * (h - 2 * pad):.1f}"
        for t, s in zip(curve.scales, curve.values)
    )
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">'
        f'<rect width="{w}" height="{h}" fill="white"/>'
        f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1"/></svg>\n'
    )


def _decompose_image(path: str, config: DecompositionConfig):
    gray = to_luma(path)
    grid, mean, std = _standardize(gray)
    decomposer = ModelDrivenDecomposer(config)
    result = decomposer.analyze(grid)
    return grid, mean, std, result


def cmd_decompose(args) -> int:
    config = _build_config(args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    grid, mean, std, result = _decompose_image(args.input, config)
    planes = np.concatenate([grid[None], result.bands.bands], axis=0)
    write_tensor(out / "bands.btf", planes.astype("<f4"))
    _write_spectrum_csv(out / "spectrum.csv", result.spectrum)
    pngs = []
    if not args.no_png:
        for k in range(result.bands.bands.shape[0]):
            pngs.append(_save_png(out / f"band{k+1}.png", result.bands.bands[k]))
    manifest = {
        "input": str(args.input),
        "standardization": {"mean": mean, "std": std},
        "decomposition": config.to_dict(),
        "plane_layout": ["input"] + [f"band{k+1}" for k in range(len(config.schedule))],
        "tensor_file": "bands.btf",
        "spectrum_file": "spectrum.csv",
        "band_pngs": pngs,
        "solver_warnings": result.warnings,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"decomposed {args.input} -> {out} ({len(config.schedule)} bands)")
    return 0


def cmd_filter(args) -> int:
    config = _build_config(args)
    weights = [float(w) for w in args.weights.split(",")]
    if len(weights) != len(config.schedule):
        raise ValueError(
            f"got {len(weights)} weights for {len(config.schedule)} bands"
        )
    grid, mean, std, result = _decompose_image(args.input, config)
    filtered = np.tensordot(np.asarray(weights), result.bands.bands, axes=1)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".btf":
        write_tensor(out, filtered[None].astype("<f4"))
    else:
        scaling = _save_png(out, filtered)
        with open(out.with_suffix(out.suffix + ".json"), "w") as fh:
            json.dump(
                {"weights": weights, "standardization": {"mean": mean, "std": std},
                 "png_scaling": scaling},
                fh, indent=2, sort_keys=True,
            )
    print(f"filtered {args.input} -> {out}")
    return 0


def cmd_spectrum(args) -> int:
    config = _build_config(args)
    _, _, _, result = _decompose_image(args.input, config)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_spectrum_csv(out, result.spectrum)
    if args.svg:
        _write_spectrum_svg(Path(args.svg), result.spectrum)
    print(f"spectrum of {args.input} -> {out}")
    return 0


def cmd_gen_dataset(args) -> int:
    config = _build_config(args)
    manifest = generate_ground_truth(
        args.images,
        args.output,
        count=args.count,
        config=config,
        seed=args.seed,
        crop_size=args.crop_size,
        augment_fraction=args.augment_fraction,
    )
    verify_manifest(args.output)
    print(f"wrote {len(manifest['entries'])} entries to {args.output}")
    return 0


def _prediction_bands(path: Path) -> tuple[np.ndarray, np.ndarray]:
    planes = read_tensor(path).astype(np.float64)
    return planes[0], planes[1:]


def cmd_eval(args) -> int:
    gt_dir = Path(args.gt)
    pred_dir = Path(args.pred)
    manifest = load_manifest(gt_dir)
    reports = []
    for entry in manifest["entries"]:
        name = entry["tensor_file"]
        pred_path = pred_dir / name
        if not pred_path.exists():
            raise FileNotFoundError(f"missing prediction: {pred_path}")
        _, gt_bands = _prediction_bands(gt_dir / name)
        _, pred_bands = _prediction_bands(pred_path)
        reports.append(band_metrics(gt_bands, pred_bands))
    merged = MetricsReport.average(reports)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(merged.to_csv())
    out.with_suffix(".json").write_text(merged.to_json())
    s, p, l = merged.averages
    print(f"eval over {len(reports)} entries: SSIM {s:.4f} PSNR {p:.3f} sLMSE {l:.4f}")
    return 0


_PROBE_VARIANTS = ("x2", "shift8_0", "rot90")


def cmd_invariance(args) -> int:
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.probes:
        return _write_probes(args)
    if args.pred:
        reports = _score_prediction_dir(Path(args.pred))
    else:
        if not args.images:
            raise ValueError("give input images or --pred DIR")
        config = _build_config(args)
        decomposer = ModelDrivenDecomposer(config)
        reports = {"one-homogeneity": [], "translation": [], "rotation": []}
        for path in args.images:
            grid, _, _ = _standardize(to_luma(path))
            reports["one-homogeneity"].append(evaluate_homogeneity(decomposer, grid))
            reports["translation"].append(
                evaluate_translation(decomposer, grid, shift=(8, 0))
            )
            reports["rotation"].append(evaluate_rotation(decomposer, grid, angle=90))
    table = invariance_table(reports)
    out.write_text(table)
    for line in table.strip().splitlines():
        print(line)
    return 0


def _write_probes(args) -> int:
    """Emit single-plane input tensors for an external decomposer to consume."""
    probe_dir = Path(args.probes)
    probe_dir.mkdir(parents=True, exist_ok=True)
    if not args.images:
        raise ValueError("--probes requires input images")
    ids = []
    for i, path in enumerate(args.images):
        grid, _, _ = _standardize(to_luma(path))
        stem = f"probe_{i:04d}"
        ids.append(stem)
        variants = {
            "": grid,
            "__x2": 2.0 * grid,
            "__shift8_0": translate(grid, 8, 0),
            "__rot90": np.rot90(grid),
        }
        for suffix, plane in variants.items():
            write_tensor(probe_dir / f"{stem}{suffix}.btf", plane[None].astype("<f4"))
    with open(probe_dir / "probes.json", "w") as fh:
        json.dump({"ids": ids, "variants": list(_PROBE_VARIANTS), "shift": [8, 0],
                   "rotation_deg": 90}, fh, indent=2, sort_keys=True)
    print(f"wrote {len(ids)} probe sets to {probe_dir}")
    return 0


class _Precomputed:
    """decompose() by array lookup, for externally produced band tensors."""

    def __init__(self):
        self._pairs: list[tuple[np.ndarray, BandSet]] = []

    def add(self, f: np.ndarray, bands: BandSet) -> None:
        self._pairs.append((f, bands))

    def decompose(self, f: np.ndarray) -> BandSet:
        for key, bands in self._pairs:
            if key.shape == f.shape and np.array_equal(key, f):
                return bands
        raise KeyError("no precomputed decomposition for this input")


def _score_prediction_dir(pred_dir: Path) -> dict:
    with open(pred_dir / "probes.json") as fh:
        probes = json.load(fh)
    reports = {"one-homogeneity": [], "translation": [], "rotation": []}
    for stem in probes["ids"]:
        sets = {}
        for suffix in ("",) + tuple("__" + v for v in _PROBE_VARIANTS):
            f, bands = _prediction_bands(pred_dir / f"{stem}{suffix}.btf")
            n = bands.shape[0]
            sets[suffix] = (f, BandSet(bands, tuple(range(1, n + 1)), True))
        f = sets[""][0]
        d = _Precomputed()
        d.add(f, sets[""][1])
        d.add(2.0 * f, sets["__x2"][1])
        reports["one-homogeneity"].append(evaluate_homogeneity(d, f))
        reports["translation"].append(
            evaluate_translation(
                d, f, shift=(8, 0), decomposed_shifted=sets["__shift8_0"][1].bands
            )
        )
        reports["rotation"].append(
            evaluate_rotation(
                d, f, angle=90, decomposed_rotated=sets["__rot90"][1].bands
            )
        )
    return reports


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    config = _build_config(args)
    rows = []
    rng = np.random.default_rng(args.seed)
    for size in sizes:
        # smoothed noise: textured content without a pathological solve
        field = rng.standard_normal((size, size))
        kernel = np.ones(5) / 5.0
        field = np.apply_along_axis(lambda r: np.convolve(r, kernel, "same"), 0, field)
        field = np.apply_along_axis(lambda r: np.convolve(r, kernel, "same"), 1, field)
        grid, _, _ = _standardize(field)
        decomposer = ModelDrivenDecomposer(config)
        t0 = time.perf_counter()
        decomposer.analyze(grid)
        seconds = time.perf_counter() - t0
        rows.append((size, size * size, seconds))
        print(f"{size:5d}x{size:<5d} {size*size:8d} px {seconds:10.3f} s", flush=True)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["size", "pixels", "seconds"])
            writer.writerows(rows)
    if len(rows) >= 2 and rows[0][2] > 0:
        print(f"ratio {rows[-1][2] / rows[0][2]:.1f}x over {rows[0][0]} -> {rows[-1][0]}")
    return 0


def _add_config_flags(sub) -> None:
    sub.add_argument("--config", help="JSON config file")
    sub.add_argument("--dt", type=float, help="flow step size")
    sub.add_argument("--n-steps", dest="n_steps", type=int, help="number of flow steps")
    sub.add_argument(
        "--method", choices=("chambolle-projection", "primal-dual"), help="prox solver"
    )
    sub.add_argument("--max-iters", dest="max_iters", type=int, help="solver iteration cap")
    sub.add_argument("--gap-tol", dest="gap_tol", type=float, help="relative duality gap tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spectv", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="BLAS/OpenMP thread cap")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("decompose", help="decompose an image into spectral bands")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--no-png", action="store_true", help="skip band PNG rendering")
    _add_config_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = subs.add_parser("filter", help="recombine bands with per-band weights")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output image (.png or .btf)")
    p.add_argument("--weights", required=True, help="comma-separated per-band weights")
    _add_config_flags(p)
    p.set_defaults(func=cmd_filter)

    p = subs.add_parser("spectrum", help="write the scale spectrum as CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.add_argument("--svg", help="also render a polyline SVG")
    _add_config_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = subs.add_parser("gen-dataset", help="generate a ground-truth band dataset")
    p.add_argument("images", nargs="+")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--count", type=int, help="number of entries (default: one per image)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--crop-size", dest="crop_size", type=int, default=64)
    p.add_argument("--augment-fraction", dest="augment_fraction", type=float, default=0.25)
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen_dataset)

    p = subs.add_parser("eval", help="score predicted band tensors against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth dataset directory")
    p.add_argument("--pred", required=True, help="prediction directory (same file names)")
    p.add_argument("-o", "--output", required=True, help="report CSV path")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("invariance", help="score homogeneity/translation/rotation")
    p.add_argument("images", nargs="*")
    p.add_argument("-o", "--output", required=True, help="report CSV path")
    p.add_argument("--pred", help="directory of externally produced probe predictions")
    p.add_argument("--probes", help="write probe input tensors to this directory and exit")
    _add_config_flags(p)
    p.set_defaults(func=cmd_invariance)

    p = subs.add_parser("bench", help="time the decomposition across image sizes")
    p.add_argument("--sizes", default="64,128,256,512,1024")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", help="CSV output path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _set_thread_cap(args.threads)
    try:
        return args.func(args)
    except (_UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
