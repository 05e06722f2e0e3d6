"""Hole filling: component classification, fast-marching fill, external fill.

Holes are 4-connected components split by area. Small ones are closed by
a native fast-marching inpainter in the style of the classic FMM
formulation: the hole boundary carries distance T = 0, hole pixels are
filled in increasing (T, row-major index) order, and each fill is a
normalized weighted sum of the non-hole pixels inside a disc, with
direction, distance, and level weight factors (d0 = T0 = 1, direction
taken in absolute value so every fill stays a convex combination).
Large components go to an external generative backend, best candidate
of n picked by a scorer, with the fast-marching fill as the fallback
when the backend is unreachable.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AdapterUnavailable, InvalidConfig, NothingToInpaintFrom, ProtocolViolation
from .frame import PROV_EXTERNAL, PROV_TELEA, Frame

# hole-area split between generative and fast-marching fills, in px^2,
# quoted at the 160x96 working resolution and scaled with pixel count
HOLE_AREA_THRESHOLD_BASE = 64
HOLE_AREA_BASE_RESOLUTION = 160 * 96

_KNOWN, _BAND, _INSIDE = 0, 1, 2
_FOUR = ((-1, 0), (1, 0), (0, -1), (0, 1))


def scaled_hole_threshold(width: int, height: int, base: int = HOLE_AREA_THRESHOLD_BASE) -> int:
    return max(1, int(round(base * (width * height) / HOLE_AREA_BASE_RESOLUTION)))


@dataclass(frozen=True, eq=False)
class Component:
    """One 4-connected hole component; pixels are (row, col) in row-major order."""

    pixels: np.ndarray

    @property
    def area(self) -> int:
        return len(self.pixels)

    def mask(self, shape) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        m[self.pixels[:, 0], self.pixels[:, 1]] = True
        return m


@dataclass(frozen=True, eq=False)
class HolePartition:
    large: tuple
    small: tuple
    threshold: int

    @property
    def components(self) -> tuple:
        return self.large + self.small

    @property
    def total_area(self) -> int:
        return sum(c.area for c in self.components)


@dataclass(frozen=True)
class InpaintRequestSpec:
    prompt: str = ""
    n_candidates: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_candidates < 1:
            raise InvalidConfig("n_candidates must be >= 1")


def partition_holes(mask: np.ndarray, threshold: int) -> HolePartition:
    """Label 4-connected hole components and split them by area."""
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask)
    large, small = [], []
    for lab in range(1, n + 1):
        pixels = np.argwhere(labels == lab).astype(np.int32)
        comp = Component(pixels)
        (large if comp.area >= threshold else small).append(comp)
    return HolePartition(tuple(large), tuple(small), threshold)


def _march(values: np.ndarray, mask: np.ndarray, radius: int):
    """Shared fast-marching fill over a float (H, W, C) stack; in place."""
    h, w = mask.shape
    flags = np.where(mask, _INSIDE, _KNOWN).astype(np.int8)
    t = np.where(mask, np.inf, 0.0)

    heap = []
    known = ~mask
    boundary = known & (
        np.pad(mask[1:, :], ((0, 1), (0, 0)))
        | np.pad(mask[:-1, :], ((1, 0), (0, 0)))
        | np.pad(mask[:, 1:], ((0, 0), (0, 1)))
        | np.pad(mask[:, :-1], ((0, 0), (1, 0)))
    )
    for y, x in np.argwhere(boundary):
        flags[y, x] = _BAND
        heapq.heappush(heap, (0.0, int(y) * w + int(x)))

    r2 = radius * radius
    offsets = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
        if 0 < dy * dy + dx * dx <= r2
    ]

    def eikonal(y, x):
        best = np.inf
        for hx in (x - 1, x + 1):
            a = t[y, hx] if 0 <= hx < w and flags[y, hx] != _INSIDE else None
            for vy in (y - 1, y + 1):
                b = t[vy, x] if 0 <= vy < h and flags[vy, x] != _INSIDE else None
                if a is not None and b is not None:
                    if abs(a - b) < 1.0:
                        s = (a + b + math.sqrt(2.0 - (a - b) ** 2)) / 2.0
                    else:
                        s = min(a, b) + 1.0
                elif a is not None:
                    s = a + 1.0
                elif b is not None:
                    s = b + 1.0
                else:
                    continue
                best = min(best, s)
        return best

    def grad_t(y, x):
        def axis(back_ok, back, fwd_ok, fwd, center):
            if back_ok and fwd_ok:
                return (fwd - back) / 2.0
            if fwd_ok:
                return fwd - center
            if back_ok:
                return center - back
            return 0.0

        l_ok = x - 1 >= 0 and flags[y, x - 1] != _INSIDE
        r_ok = x + 1 < w and flags[y, x + 1] != _INSIDE
        u_ok = y - 1 >= 0 and flags[y - 1, x] != _INSIDE
        d_ok = y + 1 < h and flags[y + 1, x] != _INSIDE
        gy = axis(u_ok, t[y - 1, x] if u_ok else 0.0, d_ok, t[y + 1, x] if d_ok else 0.0, t[y, x])
        gx = axis(l_ok, t[y, x - 1] if l_ok else 0.0, r_ok, t[y, x + 1] if r_ok else 0.0, t[y, x])
        return gy, gx

    while heap:
        _, idx = heapq.heappop(heap)
        py, px = divmod(idx, w)
        for dy, dx in _FOUR:
            qy, qx = py + dy, px + dx
            if not (0 <= qy < h and 0 <= qx < w) or flags[qy, qx] != _INSIDE:
                continue
            t[qy, qx] = eikonal(qy, qx)

            gy, gx = grad_t(qy, qx)
            gnorm = math.hypot(gy, gx)
            num = np.zeros(values.shape[2])
            den = 0.0
            tq = t[qy, qx]
            for ody, odx in offsets:
                yy, xx = qy + ody, qx + odx
                if not (0 <= yy < h and 0 <= xx < w) or flags[yy, xx] == _INSIDE:
                    continue
                d2 = ody * ody + odx * odx
                if gnorm == 0.0:
                    direction = 1.0
                else:
                    direction = max(abs(ody * gy + odx * gx) / (math.sqrt(d2) * gnorm), 1e-6)
                wgt = direction * (1.0 / d2) * (1.0 / (1.0 + abs(tq - t[yy, xx])))
                num += wgt * values[yy, xx]
                den += wgt
            values[qy, qx] = num / den
            flags[qy, qx] = _BAND
            heapq.heappush(heap, (float(tq), qy * w + qx))


def telea_inpaint(image: np.ndarray, mask: np.ndarray, radius: int = 3) -> np.ndarray:
    """Fast-marching fill of `mask` in an 8-bit image; known pixels untouched."""
    if radius < 1:
        raise InvalidConfig("inpaint radius must be >= 1")
    image = np.asarray(image)
    mask = np.asarray(mask, dtype=bool)
    if image.shape[:2] != mask.shape:
        raise InvalidConfig("mask shape does not match image")
    if not (~mask).any():
        raise NothingToInpaintFrom("mask leaves no known pixels")
    if not mask.any():
        return image.copy()

    single = image.ndim == 2
    work = image.astype(np.float64)
    if single:
        work = work[:, :, None]
    _march(work, mask, radius)
    out = np.clip(np.rint(work), 0, 255).astype(np.uint8)
    if single:
        out = out[:, :, 0]
    # known pixels are bit-identical by construction; restore exactly anyway
    out[~mask] = image[~mask]
    return out


def fmm_fill_float(values: np.ndarray, invalid: np.ndarray, radius: int = 3) -> np.ndarray:
    """Fast-marching continuation of a float field into its invalid region."""
    values = np.asarray(values, dtype=np.float64).copy()
    invalid = np.asarray(invalid, dtype=bool)
    if not (~invalid).any():
        raise NothingToInpaintFrom("no valid samples to continue from")
    if invalid.any():
        work = values[:, :, None]
        _march(work, invalid, radius)
        values = work[:, :, 0]
    return values


@dataclass(frozen=True)
class ExternalFillResult:
    frame: Frame
    selected: int | None
    fallback: bool


def external_inpaint(
    frame: Frame,
    component: Component,
    spec: InpaintRequestSpec,
    client,
    scorer,
    telea_radius: int = 3,
) -> ExternalFillResult:
    """Best-of-n generative fill of one component, fast-marching on failure.

    Writes only inside the component; every other pixel of the frame is
    returned bit-identical.
    """
    comp_mask = component.mask(frame.shape)
    out = frame.copy()
    try:
        candidates = []
        for i in range(spec.n_candidates):
            cand = client.inpaint(frame.color, comp_mask, prompt=spec.prompt, seed=spec.seed + i)
            cand = np.asarray(cand)
            if cand.shape != frame.color.shape or cand.dtype != np.uint8:
                raise ProtocolViolation("inpaint candidate has wrong shape or dtype")
            candidates.append(cand)
        scores = np.asarray(scorer.score(spec.prompt, candidates), dtype=np.float64)
        if scores.shape != (spec.n_candidates,):
            raise ProtocolViolation("scorer returned wrong number of scores")
        selected = int(np.argmax(scores))  # ties resolve to the lowest index
        out.color[comp_mask] = candidates[selected][comp_mask]
        out.provenance[comp_mask] = PROV_EXTERNAL
        out.hole_mask[comp_mask] = False
        return ExternalFillResult(out, selected, fallback=False)
    except AdapterUnavailable:
        filled = telea_inpaint(frame.color, comp_mask, telea_radius)
        out.color[comp_mask] = filled[comp_mask]
        out.provenance[comp_mask] = PROV_TELEA
        out.hole_mask[comp_mask] = False
        return ExternalFillResult(out, None, fallback=True)
