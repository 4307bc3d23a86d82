"""Torch-facing dataset over a producer dataset directory."""

from __future__ import annotations

import numpy as np
import torch
from torch.utils.data import Dataset

from .manifest import DatasetIndex

__all__ = ["BandDataset", "split_indices"]


class BandDataset(Dataset):
    """Maps dataset entries to (image, first-k bands, residual band).

    The last ground-truth band plays the residual role: it is the plane
    the network never predicts, consumed only by the sum-constraint
    loss and by band-6 reconstruction checks. Tensors are cached in
    memory; a desk-scale dataset is a few hundred small grids.
    """

    def __init__(self, index: DatasetIndex, entry_ids: list[int] | None = None):
        self.index = index
        self.entry_ids = list(range(len(index))) if entry_ids is None else list(entry_ids)
        if not self.entry_ids:
            raise ValueError("empty dataset split")
        self.out_bands = index.n_bands - 1
        if self.out_bands < 1:
            raise ValueError("need at least two band planes (predicted + residual)")
        self._cache: dict[int, tuple[torch.Tensor, torch.Tensor, torch.Tensor]] = {}

    def __len__(self) -> int:
        return len(self.entry_ids)

    def __getitem__(self, i: int):
        eid = self.entry_ids[i]
        hit = self._cache.get(eid)
        if hit is None:
            image, bands = self.index.load_entry(eid)
            # copy: memory-mapped planes are read-only and torch wants
            # writable backing
            img = torch.from_numpy(np.array(image, dtype=np.float32))[None]
            gt = torch.from_numpy(np.array(bands[:-1], dtype=np.float32))
            res = torch.from_numpy(np.array(bands[-1:], dtype=np.float32))
            hit = (img, gt, res)
            self._cache[eid] = hit
        return hit


def split_indices(n: int, holdout: int, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic train/held-out split."""
    if not 0 < holdout < n:
        raise ValueError(f"holdout {holdout} must be in (0, {n})")
    order = np.random.default_rng(seed).permutation(n)
    return sorted(int(i) for i in order[holdout:]), sorted(int(i) for i in order[:holdout])
