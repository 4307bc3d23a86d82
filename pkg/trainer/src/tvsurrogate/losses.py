"""Training losses.

The base loss L is a per-band normalized squared error: each band's
residual is divided by that band's ground-truth energy, so bands of
very different magnitudes contribute comparably and an all-zero
prediction scores exactly 1 per band. Two optional regularizers follow
the same normalize-by-ground-truth pattern:

  sum-constraint  the five predicted bands plus the ground-truth
                  residual band must reassemble the input image
  gradient-huber  Huber distance between predicted and ground-truth
                  band gradients (forward differences, Neumann)

Selectors: "L" = base, "L1" = L + sum, "L2" = L + gradient,
"L3" = all three. Ground-truth bands with zero energy are skipped and
counted in the returned value rather than poisoning the ratio.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F

__all__ = ["LossValue", "compute_loss", "SELECTORS", "HUBER_DELTA"]

log = logging.getLogger(__name__)

SELECTORS = ("L", "L1", "L2", "L3")
HUBER_DELTA = 0.01
_EPS = 0.0  # zero-energy bands are skipped outright, not smoothed


@dataclass(frozen=True)
class LossValue:
    total: torch.Tensor
    mse: torch.Tensor
    sum_constraint: torch.Tensor | None
    gradient_huber: torch.Tensor | None
    skipped_bands: int


def _forward_grad(t: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Forward differences with Neumann boundary, matching the producer."""
    gx = torch.zeros_like(t)
    gy = torch.zeros_like(t)
    gx[..., :, :-1] = t[..., :, 1:] - t[..., :, :-1]
    gy[..., :-1, :] = t[..., 1:, :] - t[..., :-1, :]
    return gx, gy


def compute_loss(
    pred: torch.Tensor,
    gt_bands: torch.Tensor,
    image: torch.Tensor,
    residual_band: torch.Tensor,
    selector: str = "L",
) -> LossValue:
    """Evaluate the selected loss for a batch.

    Parameters
    ----------
    pred : (b, k, h, w)
        Predicted bands.
    gt_bands : (b, k, h, w)
        Ground-truth bands for the same entries.
    image : (b, 1, h, w)
        Standardized input images.
    residual_band : (b, 1, h, w)
        Ground-truth residual band (everything the k predicted bands do
        not carry), needed by the sum constraint.
    selector : str
        One of ``SELECTORS``.
    """
    if selector not in SELECTORS:
        raise ValueError(f"unknown loss selector {selector!r}; choose from {SELECTORS}")
    if pred.shape != gt_bands.shape:
        raise ValueError(f"shape mismatch: pred {tuple(pred.shape)} vs gt {tuple(gt_bands.shape)}")

    k = pred.shape[1]
    gt_energy = gt_bands.pow(2).sum(dim=(-2, -1))  # (b, k)
    valid = gt_energy > _EPS
    skipped = int((~valid).sum().item())
    if skipped:
        log.warning("skipping %d zero-energy ground-truth band terms", skipped)

    res_energy = (pred - gt_bands).pow(2).sum(dim=(-2, -1))
    ratios = res_energy[valid] / gt_energy[valid]
    if ratios.numel() == 0:
        raise ValueError("every ground-truth band has zero energy")
    # mean over bands then images; with no skips this equals the plain
    # mean of all b*k ratios
    mse = ratios.sum() / (pred.shape[0] * k)
    total = mse

    sum_term = None
    if selector in ("L1", "L3"):
        recon = pred.sum(dim=1, keepdim=True) + residual_band
        img_energy = image.pow(2).sum(dim=(-2, -1)).clamp_min(1e-30)
        sum_term = ((recon - image).pow(2).sum(dim=(-2, -1)) / img_energy).mean()
        total = total + sum_term

    grad_term = None
    if selector in ("L2", "L3"):
        pgx, pgy = _forward_grad(pred)
        ggx, ggy = _forward_grad(gt_bands)
        num = F.huber_loss(pgx, ggx, delta=HUBER_DELTA, reduction="none").sum(dim=(-2, -1))
        num = num + F.huber_loss(pgy, ggy, delta=HUBER_DELTA, reduction="none").sum(dim=(-2, -1))
        zeros_x = torch.zeros_like(ggx)
        den = F.huber_loss(zeros_x, ggx, delta=HUBER_DELTA, reduction="none").sum(dim=(-2, -1))
        den = den + F.huber_loss(torch.zeros_like(ggy), ggy, delta=HUBER_DELTA, reduction="none").sum(dim=(-2, -1))
        g_valid = den > _EPS
        g_skipped = int((~g_valid).sum().item())
        if g_skipped:
            log.warning("skipping %d zero-gradient ground-truth band terms", g_skipped)
        skipped += g_skipped
        g_ratios = num[g_valid] / den[g_valid]
        grad_term = g_ratios.sum() / (pred.shape[0] * k) if g_ratios.numel() else pred.new_zeros(())
        total = total + grad_term

    return LossValue(
        total=total,
        mse=mse,
        sum_constraint=sum_term,
        gradient_huber=grad_term,
        skipped_bands=skipped,
    )
