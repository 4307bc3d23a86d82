"""Image quality metrics for band-wise and averaged scoring.

PSNR, windowed SSIM, and sLMSE (inverted localized MSE on overlapping
patches). All three operate on raw float grids; for spectral bands,
which are signed and standardized, the dynamic range fed to PSNR and
SSIM is the ground-truth band's own max-min range, recorded in the
report.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["psnr", "ssim", "slmse", "MetricsReport", "band_metrics"]

_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11x11 window: int(3.5 * sigma + 0.5) taps each side
_SLMSE_PATCH = 16
_SLMSE_STRIDE = 8


def psnr(b: np.ndarray, bhat: np.ndarray, max_i: float) -> float:
    """10*log10(MAX_I^2 / MSE); +inf sentinel for identical inputs."""
    if b.shape != bhat.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {bhat.shape}")
    if max_i <= 0:
        raise ValueError("max_i must be positive")
    mse = float(np.mean((b - bhat) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_i * max_i / mse)


def _gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _separable_filter(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    r = len(kernel) // 2
    p = np.pad(a, ((0, 0), (r, r)), mode="symmetric")
    out = np.zeros_like(a)
    w = a.shape[1]
    for k, wk in enumerate(kernel):
        out += wk * p[:, k : k + w]
    p = np.pad(out, ((r, r), (0, 0)), mode="symmetric")
    out = np.zeros_like(a)
    h = a.shape[0]
    for k, wk in enumerate(kernel):
        out += wk * p[k : k + h, :]
    return out


def ssim(
    b: np.ndarray,
    bhat: np.ndarray,
    data_range: float,
    windowed: bool = True,
) -> float:
    """Structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Constants c1 = (0.01 L)^2 and c2 = (0.03 L)^2 with L = data_range.
    The windowed map is averaged after cropping the filter-radius border
    strip (edge windows are padding-contaminated). ``windowed=False``
    evaluates the formula once on global moments instead.
    """
    if b.shape != bhat.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {bhat.shape}")
    if data_range <= 0:
        raise ValueError("data_range must be positive")
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    if not windowed:
        mu_b, mu_h = b.mean(), bhat.mean()
        vb = b.var()
        vh = bhat.var()
        cov = float(np.mean((b - mu_b) * (bhat - mu_h)))
        cov = float(np.clip(cov, -math.sqrt(vb * vh), math.sqrt(vb * vh)))
        return float(
            (2 * mu_b * mu_h + c1)
            * (2 * cov + c2)
            / ((mu_b**2 + mu_h**2 + c1) * (vb + vh + c2))
        )
    kernel = _gaussian_kernel(_SSIM_SIGMA, _SSIM_RADIUS)
    ux = _separable_filter(b, kernel)
    uy = _separable_filter(bhat, kernel)
    uxx = _separable_filter(b * b, kernel)
    uyy = _separable_filter(bhat * bhat, kernel)
    uxy = _separable_filter(b * bhat, kernel)
    # one-pass windowed moments cancel catastrophically on near-constant
    # windows (variances come out at -1e-18); project onto the feasible
    # cone (v >= 0, |cov| <= sqrt(vx*vy)) so the score stays in [-1, 1]
    # no matter how small the stabilizing constants are
    vx = np.maximum(uxx - ux * ux, 0.0)
    vy = np.maximum(uyy - uy * uy, 0.0)
    cap = np.sqrt(vx * vy)
    vxy = np.clip(uxy - ux * uy, -cap, cap)
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / (
        (ux * ux + uy * uy + c1) * (vx + vy + c2)
    )
    r = _SSIM_RADIUS
    interior = s[r:-r, r:-r]
    if interior.size == 0:
        raise ValueError("image too small for the 11x11 SSIM window")
    return float(interior.mean())


def _patch_starts(dim: int, patch: int, stride: int) -> list[int]:
    if dim < patch:
        raise ValueError(f"dimension {dim} smaller than the {patch}-pixel patch")
    starts = list(range(0, dim - patch + 1, stride))
    # a final clipped patch covers the tail when stride does not align
    if starts[-1] != dim - patch:
        starts.append(dim - patch)
    return starts


def slmse(b: np.ndarray, bhat: np.ndarray) -> float:
    """Inverted localized MSE: 1 - LMSE(b, bhat) / LMSE(0, bhat).

    LMSE sums squared patch errors over 16x16 windows at stride 8.
    Equals 1 iff b == bhat exactly; 0 for b == 0. A zero prediction with
    nonzero ground truth scores 0 (degenerate denominator).
    """
    if b.shape != bhat.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {bhat.shape}")
    rows = _patch_starts(b.shape[0], _SLMSE_PATCH, _SLMSE_STRIDE)
    cols = _patch_starts(b.shape[1], _SLMSE_PATCH, _SLMSE_STRIDE)
    diff = (b - bhat) ** 2
    ref = bhat * bhat
    num = 0.0
    den = 0.0
    for sy in rows:
        for sx in cols:
            num += float(diff[sy : sy + _SLMSE_PATCH, sx : sx + _SLMSE_PATCH].sum())
            den += float(ref[sy : sy + _SLMSE_PATCH, sx : sx + _SLMSE_PATCH].sum())
    if den == 0.0:
        return 1.0 if num == 0.0 else 0.0
    return 1.0 - num / den


@dataclass
class MetricsReport:
    """Per-band and averaged (ssim, psnr, slmse) scores.

    ``max_i`` records the dynamic range used per band for PSNR and SSIM.
    Averages propagate the +inf PSNR sentinel when any band is exact.
    """

    per_band: list[tuple[float, float, float]]
    averages: tuple[float, float, float]
    max_i: list[float]

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_band": [
                    {"ssim": s, "psnr": p, "slmse": l} for s, p, l in self.per_band
                ],
                "averages": {
                    "ssim": self.averages[0],
                    "psnr": self.averages[1],
                    "slmse": self.averages[2],
                },
                "max_i": self.max_i,
            },
            indent=2,
        )

    @classmethod
    def average(cls, reports: "list[MetricsReport]") -> "MetricsReport":
        """Mean of several reports, band-wise; +inf PSNR propagates."""
        if not reports:
            raise ValueError("no reports to average")
        n = len(reports[0].per_band)
        if any(len(r.per_band) != n for r in reports):
            raise ValueError("reports have differing band counts")
        m = len(reports)
        per_band = [
            tuple(sum(r.per_band[k][j] for r in reports) / m for j in range(3))
            for k in range(n)
        ]
        averages = tuple(sum(v[j] for v in per_band) / n for j in range(3))
        max_i = [sum(r.max_i[k] for r in reports) / m for k in range(n)]
        return cls(per_band=per_band, averages=averages, max_i=max_i)

    def to_csv(self) -> str:
        """Table layout: one row per metric, bands then residual then average."""
        n = len(self.per_band)
        header = ["metric"] + [f"band{k+1}" for k in range(n - 1)] + [
            "residual_band",
            "average",
        ]
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for j, name in enumerate(("ssim", "psnr", "slmse")):
            row = [name] + [f"{self.per_band[k][j]:.4f}" for k in range(n)]
            row.append(f"{self.averages[j]:.4f}")
            writer.writerow(row)
        return buf.getvalue()


def band_metrics(gt_bands: np.ndarray, pred_bands: np.ndarray) -> MetricsReport:
    """Score predicted bands against ground truth, band by band.

    The PSNR/SSIM dynamic range is each ground-truth band's own max-min
    spread (floored away from zero for degenerate constant bands).
    """
    gt = np.asarray(gt_bands, dtype=np.float64)
    pred = np.asarray(pred_bands, dtype=np.float64)
    if gt.shape != pred.shape:
        raise ValueError(f"band stacks differ in shape: {gt.shape} vs {pred.shape}")
    per_band = []
    ranges = []
    for k in range(gt.shape[0]):
        rng = float(gt[k].max() - gt[k].min())
        rng = max(rng, 1e-9)
        ranges.append(rng)
        per_band.append(
            (
                ssim(gt[k], pred[k], data_range=rng),
                psnr(gt[k], pred[k], max_i=rng),
                slmse(gt[k], pred[k]),
            )
        )
    averages = tuple(
        sum(v[j] for v in per_band) / len(per_band) for j in range(3)
    )
    return MetricsReport(per_band=per_band, averages=averages, max_i=ranges)
