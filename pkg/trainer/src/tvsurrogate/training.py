"""Training loop, checkpointing, and the JSON training log."""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from .data import BandDataset, split_indices
from .losses import SELECTORS, compute_loss
from .manifest import load_dataset
from .model import ARCH_SPEC, TVSpecNet

__all__ = ["TrainConfig", "train", "load_checkpoint"]


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 8
    learning_rate: float = 1e-3
    selector: str = "L"
    seed: int = 0
    holdout: int = 50
    # multi-step decay: multiply lr by decay at these epoch fractions
    milestones: tuple[float, ...] = (0.5, 0.75)
    decay: float = 0.5
    log_every: int = 10

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not all(0.0 < m < 1.0 for m in self.milestones):
            raise ValueError("milestones are epoch fractions in (0, 1)")


def _epoch_pass(model, loader, selector, optimizer=None):
    total = 0.0
    skipped = 0
    n = 0
    for img, gt, res in loader:
        if optimizer is not None:
            optimizer.zero_grad(set_to_none=True)
            value = compute_loss(model(img), gt, img, res, selector)
            value.total.backward()
            optimizer.step()
        else:
            with torch.no_grad():
                value = compute_loss(model(img), gt, img, res, selector)
        total += float(value.total.detach()) * img.shape[0]
        skipped += value.skipped_bands
        n += img.shape[0]
    return total / max(n, 1), skipped


def train(dataset_dir, out_dir, cfg: TrainConfig | None = None) -> dict:
    """Train a surrogate on a producer dataset directory.

    Writes ``checkpoint.pt`` and ``train_log.json`` into out_dir and
    returns the log dictionary. The held-out split never contributes a
    gradient; its loss is tracked per epoch for the log.
    """
    cfg = cfg or TrainConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = load_dataset(dataset_dir)
    if len(index) <= cfg.holdout:
        raise ValueError(
            f"dataset has {len(index)} entries, need more than holdout={cfg.holdout}"
        )
    train_ids, held_ids = split_indices(len(index), cfg.holdout, cfg.seed)

    torch.manual_seed(cfg.seed)
    model = TVSpecNet(out_bands=index.n_bands - 1)
    train_set = BandDataset(index, train_ids)
    held_set = BandDataset(index, held_ids)
    gen = torch.Generator()
    gen.manual_seed(cfg.seed)
    train_loader = DataLoader(
        train_set, batch_size=cfg.batch_size, shuffle=True, generator=gen
    )
    held_loader = DataLoader(held_set, batch_size=cfg.batch_size, shuffle=False)

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    boundaries = sorted(max(1, int(round(m * cfg.epochs))) for m in cfg.milestones)
    scheduler = torch.optim.lr_scheduler.MultiStepLR(
        optimizer, milestones=boundaries, gamma=cfg.decay
    )

    history = []
    skipped_total = 0
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        train_loss, skipped = _epoch_pass(model, train_loader, cfg.selector, optimizer)
        model.eval()
        held_loss, _ = _epoch_pass(model, held_loader, cfg.selector)
        scheduler.step()
        skipped_total += skipped
        history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "held_loss": held_loss,
                "lr": optimizer.param_groups[0]["lr"],
                "elapsed_s": round(time.perf_counter() - t0, 2),
            }
        )
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            print(
                f"epoch {epoch:4d}/{cfg.epochs}  train {train_loss:.5f}  "
                f"held {held_loss:.5f}  lr {optimizer.param_groups[0]['lr']:.2e}",
                flush=True,
            )

    # freeze batch-norm statistics: eval() uses the running estimates,
    # and the checkpoint stores exactly those
    model.eval()
    checkpoint = {
        "arch": dict(ARCH_SPEC, out_bands=index.n_bands - 1),
        "state_dict": model.state_dict(),
        "config": asdict(cfg),
        "dataset_hash": index.content_hash(),
        "plane_layout": index.manifest.get("plane_layout"),
        "torch_version": torch.__version__,
    }
    torch.save(checkpoint, out_dir / "checkpoint.pt")

    log = {
        "config": asdict(cfg),
        "dataset": {
            "dir": str(dataset_dir),
            "entries": len(index),
            "train": len(train_ids),
            "held_out": len(held_ids),
            "hash": checkpoint["dataset_hash"],
        },
        "determinism": {
            "torch_seed": cfg.seed,
            "note": "single-process CPU training; results are reproducible "
            "for a fixed torch build, not across BLAS/backend changes",
            "platform": platform.platform(),
            "torch": torch.__version__,
        },
        "held_out_ids": held_ids,
        "skipped_band_terms": skipped_total,
        "history": history,
        "total_seconds": round(time.perf_counter() - t0, 2),
    }
    with open(out_dir / "train_log.json", "w") as fh:
        json.dump(log, fh, indent=2)
    return log


def load_checkpoint(path) -> tuple[TVSpecNet, dict]:
    """Rebuild the frozen model from a checkpoint file."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    arch = payload["arch"]
    model = TVSpecNet(
        depth=arch["depth"], channels=arch["channels"], out_bands=arch["out_bands"]
    )
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
