"""Invariance evaluation protocol for any band decomposer.

Three properties are scored band-wise with SSIM/PSNR/sLMSE:

* one-homogeneity via the dyadic shift: doubling the input's contrast
  must shift spectral content down by exactly one band (the schedule's
  time edges double), so band k of 2f is compared against 2x band k-1
  of f. Band 1 of f splits across bands 1+2 of 2f, and the top band of
  2f absorbs the two former top bands, so those ends are compared merged.
* translation equivariance for integer in-range shifts, compared on the
  common region with the shift-contaminated strips cropped away.
* rotation equivariance for right-angle rotations (no resampling).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .metrics import psnr, slmse, ssim
from .transform import BandSet

__all__ = [
    "Decomposer",
    "InvarianceReport",
    "evaluate_homogeneity",
    "evaluate_translation",
    "evaluate_rotation",
    "invariance_table",
]


class Decomposer(Protocol):
    """Anything that maps an image to a fixed-schedule band set."""

    def decompose(self, f: np.ndarray) -> BandSet: ...


@dataclass
class InvarianceReport:
    """Scores for one property on one image.

    ``pairs`` maps a comparison label to its (ssim, psnr, slmse) tuple;
    ``averages`` is the mean over compared pairs.
    """

    property: str
    params: dict
    pairs: dict[str, tuple[float, float, float]]
    averages: tuple[float, float, float]


def _score_pairs(property: str, params: dict, pairs) -> InvarianceReport:
    # all pairs of one report share a dynamic range: the largest reference
    # spread. A band that is nearly empty for this image is then scored on
    # the decomposition's content scale rather than on its own noise floor
    pairs = list(pairs)
    rng = max(max((float(r.max() - r.min()) for _, r, _ in pairs), default=0.0), 1e-9)
    scored = {}
    for name, ref, test in pairs:
        scored[name] = (
            ssim(ref, test, data_range=rng),
            psnr(ref, test, max_i=rng),
            slmse(ref, test),
        )
    vals = list(scored.values())
    averages = tuple(sum(v[j] for v in vals) / len(vals) for j in range(3))
    return InvarianceReport(property=property, params=params, pairs=scored, averages=averages)


def _check_dyadic(d: Decomposer) -> None:
    times = getattr(d, "schedule_times", None)
    if times is None:
        return  # tensor-backed decomposers declare their schedule elsewhere
    edges = times() if callable(times) else times
    interior = list(edges)[:-1]
    for a, b in zip(interior, interior[1:]):
        if abs(b - 2.0 * a) > 0.51 * a:
            raise ValueError(
                f"homogeneity test needs doubling band edges, got {interior}"
            )


def evaluate_homogeneity(d: Decomposer, f: np.ndarray) -> InvarianceReport:
    """Dyadic-shift comparison of the decompositions of f and 2f."""
    _check_dyadic(d)
    b1 = d.decompose(f).bands
    b2 = d.decompose(2.0 * f).bands
    k = b1.shape[0]
    if k < 3:
        raise ValueError("dyadic shift test needs at least 3 bands")
    pairs = [("bands1+2", 2.0 * b1[0], b2[0] + b2[1])]
    for j in range(2, k - 1):
        pairs.append((f"band{j+1}", 2.0 * b1[j - 1], b2[j]))
    pairs.append((f"band{k}+res", 2.0 * (b1[k - 2] + b1[k - 1]), b2[k - 1]))
    return _score_pairs("one-homogeneity", {"factor": 2.0}, pairs)


def translate(f: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """In-range integer shift with edge replication in the entering strip."""
    h, w = f.shape
    pad_y = (max(dy, 0), max(-dy, 0))
    pad_x = (max(dx, 0), max(-dx, 0))
    p = np.pad(f, (pad_y, pad_x), mode="edge")
    return p[pad_y[1] : pad_y[1] + h, pad_x[1] : pad_x[1] + w]


def evaluate_translation(
    d: Decomposer,
    f: np.ndarray,
    shift: tuple[int, int] = (8, 0),
    decomposed_shifted: np.ndarray | None = None,
) -> InvarianceReport:
    """Compare decompose(translate(f)) with translate(decompose(f)).

    Scored on the common in-bounds region: the shift-wide strips plus a
    one-pixel boundary ring are cropped, since the Neumann boundary makes
    edge pixels non-equivariant. ``decomposed_shifted`` lets callers
    inject precomputed bands for the shifted image (tensor-backed use).
    """
    dx, dy = shift
    h, w = f.shape
    if abs(dx) > w // 4 or abs(dy) > h // 4:
        raise ValueError("shift magnitude must stay within a quarter of the image")
    bands = d.decompose(f).bands
    if decomposed_shifted is None:
        shifted_bands = d.decompose(translate(f, dx, dy)).bands
    else:
        shifted_bands = decomposed_shifted
    my = abs(dy) + 1
    mx = abs(dx) + 1
    pairs = []
    for k in range(bands.shape[0]):
        ref = translate(bands[k], dx, dy)[my : h - my, mx : w - mx]
        test = shifted_bands[k][my : h - my, mx : w - mx]
        pairs.append((f"band{k+1}", ref, test))
    return _score_pairs("translation", {"shift": [dx, dy]}, pairs)


def evaluate_rotation(
    d: Decomposer,
    f: np.ndarray,
    angle: int = 90,
    decomposed_rotated: np.ndarray | None = None,
) -> InvarianceReport:
    """Compare decompose(rot(f)) with rot(decompose(f)) for right angles."""
    if angle not in (90, 180, 270):
        raise ValueError("angle must be one of 90, 180, 270 degrees")
    turns = angle // 90
    if f.shape[0] != f.shape[1] and turns % 2 == 1:
        raise ValueError("90/270 degree rotation needs a square image")
    bands = d.decompose(f).bands
    if decomposed_rotated is None:
        rotated_bands = d.decompose(np.rot90(f, turns).copy()).bands
    else:
        rotated_bands = decomposed_rotated
    pairs = []
    for k in range(bands.shape[0]):
        pairs.append((f"band{k+1}", np.rot90(bands[k], turns), rotated_bands[k]))
    return _score_pairs("rotation", {"angle": angle}, pairs)


def invariance_table(reports: dict[str, list[InvarianceReport]]) -> str:
    """CSV with one column per property, averaged over a report list."""
    order = [p for p in ("one-homogeneity", "translation", "rotation") if p in reports]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["metric"] + order)
    for j, name in enumerate(("ssim", "psnr", "slmse")):
        row = [name]
        for prop in order:
            vals = [r.averages[j] for r in reports[prop]]
            row.append(f"{sum(vals) / len(vals):.4f}")
        writer.writerow(row)
    return buf.getvalue()
