"""Spectral decomposition of a TV-flow trajectory.

The spectral response at scale t_i = i*dt is

    phi_i = t_i * (u_{i+1} - 2 u_i + u_{i-1}) / dt^2,

the residual is f_r = u_N - N * (u_N - u_{N-1}), and bands are sums of
phi_i * dt over contiguous index ranges. This discretization is chosen so
that Abel summation telescopes exactly:

    sum_{i=1}^{N-1} phi_i * dt + f_r = u_0,

giving machine-precision reconstruction for any trajectory, not just in
the dt -> 0 limit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .solver import FlowTrajectory

__all__ = [
    "SpectralResponse",
    "SpectrumCurve",
    "BandSet",
    "FilterSpec",
    "tv_transform",
    "spectrum",
    "residual",
    "extract_bands",
    "apply_filter",
    "dyadic_schedule",
]


@dataclass(frozen=True)
class SpectralResponse:
    """Spectral responses phi at scales t_1 ... t_{N-1}.

    phi is undefined at i = 0 and i = N (central second difference), so
    ``phis`` has length N-1; ``phis[i-1]`` is the response at t = i*dt.
    """

    phis: np.ndarray  # shape (N-1, height, width)
    dt: float

    @property
    def scales(self) -> np.ndarray:
        return self.dt * np.arange(1, self.phis.shape[0] + 1)


@dataclass(frozen=True)
class SpectrumCurve:
    """Sampled amplitude spectrum S(t_i) with strictly increasing scales."""

    scales: np.ndarray
    values: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "S"])
            for t, s in zip(self.scales, self.values):
                writer.writerow([f"{t:.10g}", f"{s:.10g}"])


@dataclass(frozen=True)
class BandSet:
    """Spectral bands whose sum reconstructs the decomposed image.

    ``schedule`` holds the inclusive end index (into the fine time grid)
    of each band; the last band carries the residual when
    ``includes_residual`` is set, which is what makes the band sum equal
    the input exactly.
    """

    bands: np.ndarray  # shape (n_bands, height, width)
    schedule: tuple[int, ...]
    includes_residual: bool

    @property
    def n_bands(self) -> int:
        return self.bands.shape[0]

    def reconstruction(self) -> np.ndarray:
        return self.bands.sum(axis=0)


@dataclass(frozen=True)
class FilterSpec:
    """Per-scale filter weights h(t_i) plus a weight for the residual."""

    h: np.ndarray
    residual_weight: float = 1.0


def tv_transform(traj: FlowTrajectory) -> SpectralResponse:
    """Spectral responses of a trajectory via central second differences."""
    states = traj.states
    n = states.shape[0] - 1
    if n < 2:
        raise ValueError("trajectory must contain at least 2 steps")
    idx = np.arange(1, n, dtype=np.float64).reshape(-1, 1, 1)
    second = states[2:] - 2.0 * states[1:-1] + states[:-2]
    # t_i * u_tt / dt^2 = i * (second difference) / dt
    phis = idx * second / traj.dt
    return SpectralResponse(phis=phis, dt=traj.dt)


def spectrum(resp: SpectralResponse) -> SpectrumCurve:
    """Amplitude spectrum S(t_i): the discrete L1 norm of each response."""
    values = np.abs(resp.phis).sum(axis=(1, 2))
    return SpectrumCurve(scales=resp.scales.copy(), values=values)


def residual(traj: FlowTrajectory) -> np.ndarray:
    """Coarse remainder f_r = u_N - N * (u_N - u_{N-1}).

    Uses the backward difference for u_t(T), matching the telescoping
    identity of the band discretization.
    """
    states = traj.states
    n = states.shape[0] - 1
    return states[n] - n * (states[n] - states[n - 1])


def _check_schedule(schedule, n_responses: int) -> tuple[int, ...]:
    schedule = tuple(int(e) for e in schedule)
    if len(schedule) < 1:
        raise ValueError("schedule must contain at least one band")
    prev = 0
    for e in schedule:
        if e <= prev:
            raise ValueError(f"schedule indices must be strictly increasing, got {schedule}")
        prev = e
    if schedule[-1] != n_responses:
        raise ValueError(
            f"schedule must cover fine indices 1..{n_responses}, last entry is {schedule[-1]}"
        )
    return schedule


def extract_bands(
    resp: SpectralResponse,
    fr: np.ndarray,
    schedule,
    includes_residual: bool = True,
) -> BandSet:
    """Sum responses into contiguous bands; the last band absorbs fr.

    ``schedule`` lists each band's inclusive end index on the fine time
    grid 1..N-1; bands partition that range, so the band sum telescopes
    back to the decomposed image when the residual is included.
    """
    n_resp = resp.phis.shape[0]
    schedule = _check_schedule(schedule, n_resp)
    bands = np.zeros((len(schedule),) + resp.phis.shape[1:], dtype=np.float64)
    lo = 0
    for k, e in enumerate(schedule):
        # summation stays sequential in time for bit-reproducibility
        for i in range(lo, e):
            bands[k] += resp.phis[i]
        bands[k] *= resp.dt
        lo = e
    if includes_residual:
        bands[-1] += fr
    return BandSet(bands=bands, schedule=schedule, includes_residual=includes_residual)


def apply_filter(resp: SpectralResponse, fr: np.ndarray, spec: FilterSpec) -> np.ndarray:
    """Reconstruct with per-scale weights: sum_i h_i * phi_i * dt + w_r * fr."""
    h = np.asarray(spec.h, dtype=np.float64)
    if h.shape != (resp.phis.shape[0],):
        raise ValueError(
            f"filter length {h.shape} does not match {resp.phis.shape[0]} responses"
        )
    out = np.tensordot(h, resp.phis, axes=(0, 0)) * resp.dt
    out += spec.residual_weight * fr
    return out


def dyadic_schedule(dt: float, n_steps: int, first_edge_time: float = 0.4, n_bands: int = 6):
    """Band schedule with doubling time edges, ending at the grid top.

    Edges fall at first_edge_time * 2^k, so doubling an image's contrast
    shifts its spectral content by exactly one band. The first edge must
    be at least 2 fine steps in; the last band runs to N-1 and carries
    the residual.
    """
    if n_bands < 2:
        raise ValueError("need at least 2 bands")
    edges = []
    t = first_edge_time
    for _ in range(n_bands - 1):
        idx = int(round(t / dt))
        edges.append(idx)
        t *= 2.0
    edges.append(n_steps - 1)
    if edges[0] < 2:
        raise ValueError("first band edge falls below 2 fine steps; decrease dt")
    if edges[-2] >= n_steps - 1:
        raise ValueError("band edges exceed the time grid; increase n_steps or decrease edges")
    return tuple(edges)
