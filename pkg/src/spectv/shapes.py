"""Synthetic shape scenes with known spectral behavior.

Disk and ellipse indicators approximate nonlinear eigenfunctions of the
TV functional: the flow shrinks them at a constant rate, producing an
impulse in the spectral response at a predictable scale. Rendering is a
hard (non-anti-aliased) indicator because anti-aliased rims would add
spurious fine-scale content to the spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt

import numpy as np

__all__ = ["ShapeSpec", "render_scene", "predicted_scale", "random_scene"]

_MARGIN = 2.0  # pixels a shape must keep clear of the grid border
_MIN_GAP = 2  # pixels of clearance required between shapes


@dataclass(frozen=True)
class ShapeSpec:
    """One disk or ellipse: center (x, y), radii (rx, ry), signed height."""

    kind: str  # "disk" or "ellipse"
    center: tuple[float, float]
    radii: tuple[float, float]
    height: float

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise ValueError(f"unknown shape kind: {self.kind!r}")
        rx, ry = self.radii
        if rx <= 0 or ry <= 0:
            raise ValueError("radii must be positive")
        if self.kind == "disk" and rx != ry:
            raise ValueError("a disk needs rx == ry")
        if self.height == 0:
            raise ValueError("height must be nonzero")

    def area(self) -> float:
        """Continuum area."""
        return pi * self.radii[0] * self.radii[1]

    def perimeter(self) -> float:
        """Continuum perimeter; Ramanujan's approximation for ellipses."""
        a, b = self.radii
        if a == b:
            return 2.0 * pi * a
        return pi * (3.0 * (a + b) - sqrt((3.0 * a + b) * (a + 3.0 * b)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": list(self.center),
            "radii": list(self.radii),
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeSpec":
        return cls(
            kind=d["kind"],
            center=tuple(d["center"]),
            radii=tuple(d["radii"]),
            height=d["height"],
        )


def _mask(shape: ShapeSpec, width: int, height: int) -> np.ndarray:
    cx, cy = shape.center
    rx, ry = shape.radii
    yy, xx = np.mgrid[0:height, 0:width]
    return ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0


def _dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    out = mask.copy()
    for _ in range(iterations):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        out = grown
    return out


def render_scene(
    shapes: list[ShapeSpec],
    width: int,
    height: int,
    background: float = 0.0,
    allow_overlap: bool = False,
) -> np.ndarray:
    """Background plus hard shape indicators scaled by their heights.

    Shapes must sit fully inside the grid with a 2-pixel margin, and
    pairwise at least 2 pixels apart unless ``allow_overlap`` is set.
    """
    img = np.full((height, width), background, dtype=np.float64)
    masks = []
    for s in shapes:
        cx, cy = s.center
        rx, ry = s.radii
        if (
            cx - rx < _MARGIN
            or cy - ry < _MARGIN
            or cx + rx > width - 1 - _MARGIN
            or cy + ry > height - 1 - _MARGIN
        ):
            raise ValueError(f"shape {s} exceeds the grid margin of {_MARGIN} pixels")
        masks.append(_mask(s, width, height))
    if not allow_overlap:
        for i in range(len(masks)):
            grown = _dilate(masks[i], _MIN_GAP)
            for j in range(i + 1, len(masks)):
                if np.any(grown & masks[j]):
                    raise ValueError(
                        f"shapes {i} and {j} are closer than {_MIN_GAP} pixels"
                    )
    for s, m in zip(shapes, masks):
        img[m] += s.height
    return img


def predicted_scale(shape: ShapeSpec, domain_area: float) -> float:
    """Scale at which an isolated shape produces its spectral impulse.

    An indicator of area S, perimeter P and contrast h shrinks under the
    TV flow at rate P/S inside while the complement absorbs the lost mass
    (mean preservation), rising at rate P/(A - S). The two levels meet at

        t* = |h| * (S / P) * (1 - S / A),

    which for a disk is (r |h| / 2) * (1 - pi r^2 / A). On an infinite
    domain the correction factor tends to 1 and t* to the continuum
    eigenvalue scale r |h| / 2.
    """
    s = shape.area()
    p = shape.perimeter()
    if domain_area <= s:
        raise ValueError("domain area must exceed the shape area")
    return abs(shape.height) * (s / p) * (1.0 - s / domain_area)


def random_scene(
    rng: np.random.Generator,
    width: int = 64,
    height: int = 64,
    max_shapes: int = 6,
    radius_range: tuple[float, float] = (3.0, 20.0),
    height_range: tuple[float, float] = (0.3, 2.5),
    max_tries: int = 200,
) -> tuple[np.ndarray, list[ShapeSpec]]:
    """Non-overlapping random disk scene for synthetic datasets.

    Rejection-samples disk placements; returns the rendered grid and the
    specs actually placed (possibly fewer than requested when the grid
    fills up).
    """
    target = int(rng.integers(1, max_shapes + 1))
    placed: list[ShapeSpec] = []
    tries = 0
    while len(placed) < target and tries < max_tries:
        tries += 1
        r = float(rng.uniform(*radius_range))
        max_r = (min(width, height) - 1) / 2.0 - _MARGIN - 1.0
        r = min(r, max_r)
        cx = float(rng.uniform(r + _MARGIN, width - 1 - _MARGIN - r))
        cy = float(rng.uniform(r + _MARGIN, height - 1 - _MARGIN - r))
        h = float(rng.uniform(*height_range))
        cand = ShapeSpec("disk", (cx, cy), (r, r), h)
        ok = True
        for other in placed:
            dist = np.hypot(cx - other.center[0], cy - other.center[1])
            if dist < r + other.radii[0] + _MIN_GAP + 1.0:
                ok = False
                break
        if ok:
            placed.append(cand)
    return render_scene(placed, width, height), placed
