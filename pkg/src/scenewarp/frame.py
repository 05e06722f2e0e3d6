"""Frame container shared by warping, inpainting, and the pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth import DepthMap
from .errors import InvalidInput

# per-pixel provenance codes, stored as uint8 and exported verbatim
PROV_ORIGINAL = 0
PROV_WARPED = 1
PROV_TELEA = 2
PROV_EXTERNAL = 3
PROV_COPIED_PREV_T = 4

PROVENANCE_NAMES = {
    PROV_ORIGINAL: "original",
    PROV_WARPED: "warped",
    PROV_TELEA: "telea",
    PROV_EXTERNAL: "external",
    PROV_COPIED_PREV_T: "copied_prev_t",
}


@dataclass(eq=False)
class Frame:
    """One view-time cell: color, depth, missing-pixel mask, provenance.

    Invariant: wherever hole_mask is set the depth mask is cleared (the
    constructor enforces it). The converse need not hold; a pixel can be
    color-complete while its depth is still being resolved.
    """

    color: np.ndarray
    depth: DepthMap
    hole_mask: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        self.color = np.asarray(self.color, dtype=np.uint8)
        if self.color.ndim != 3 or self.color.shape[2] != 3:
            raise InvalidInput("color must be HxWx3")
        h, w = self.color.shape[:2]
        self.hole_mask = np.asarray(self.hole_mask, dtype=bool)
        self.provenance = np.asarray(self.provenance, dtype=np.uint8)
        if self.depth.shape != (h, w) or self.hole_mask.shape != (h, w) or self.provenance.shape != (h, w):
            raise InvalidInput("frame channel shapes disagree")
        if np.any(self.depth.mask & self.hole_mask):
            self.depth = DepthMap(self.depth.values, self.depth.mask & ~self.hole_mask)

    @property
    def shape(self):
        return self.color.shape[:2]

    @classmethod
    def from_color_depth(cls, color: np.ndarray, depth: DepthMap, provenance: int = PROV_ORIGINAL) -> "Frame":
        """Hole-free frame, e.g. an ingested source-video timestamp."""
        color = np.asarray(color, dtype=np.uint8)
        h, w = color.shape[:2]
        return cls(
            color=color,
            depth=depth,
            hole_mask=np.zeros((h, w), dtype=bool),
            provenance=np.full((h, w), provenance, dtype=np.uint8),
        )

    def copy(self) -> "Frame":
        return Frame(
            color=self.color.copy(),
            depth=DepthMap(self.depth.values.copy(), self.depth.mask.copy()),
            hole_mask=self.hole_mask.copy(),
            provenance=self.provenance.copy(),
        )


def frames_equal(a: Frame, b: Frame) -> bool:
    """Bitwise equality across every channel."""
    return (
        a.color.shape == b.color.shape
        and np.array_equal(a.color, b.color)
        and np.array_equal(a.depth.values, b.depth.values)
        and np.array_equal(a.depth.mask, b.depth.mask)
        and np.array_equal(a.hole_mask, b.hole_mask)
        and np.array_equal(a.provenance, b.provenance)
    )
