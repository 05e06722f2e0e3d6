"""Temporal routing of hole fills.

Once the first timestamp is complete, repainting the same region from
scratch at every later timestamp would flicker: a generative inpainter
answers differently every time. Holes whose content existed at the
previous timestamp are therefore copied forward bit-exactly; only
genuinely new content (regions that belonged to the moving foreground
before) goes back to the generative backend, and small cracks use the
fast-marching fill.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapters import StubSegment
from .depth import DepthMap
from .errors import AdapterUnavailable, InvalidConfig, InvalidInput
from .frame import PROV_COPIED_PREV_T, PROV_TELEA, Frame
from .inpaint import (
    Component,
    ExternalFillResult,
    HolePartition,
    InpaintRequestSpec,
    external_inpaint,
    telea_inpaint,
)

ROUTE_COPY = "copy_prev_t"
ROUTE_EXTERNAL = "external"
ROUTE_TELEA = "telea"

# fraction of a component that must be stable background before the
# whole component is copied from the previous timestamp
DEFAULT_BACKGROUND_MAJORITY = 0.8


@dataclass(frozen=True, eq=False)
class SegMask:
    """Foreground mask plus a note of which backend produced it."""

    mask: np.ndarray
    source: str

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))


def segment_fg(frame: Frame, adapters=None, prompt: str = "foreground", alpha: float = 0.35) -> SegMask:
    """Foreground mask of a frame, via the segmentation backend.

    Without adapters (or when the backend is unreachable) the depth
    threshold rule applies: foreground is everything closer than
    min_valid + alpha * depth_range; a zero range means no foreground.
    """
    stub = StubSegment(alpha=alpha)
    if adapters is None:
        return SegMask(stub.segment(frame.color, prompt=prompt, depth_hint=frame.depth), "depth_threshold_stub")
    try:
        mask = adapters.segment(frame.color, prompt=prompt, depth_hint=frame.depth)
        return SegMask(mask, "adapter")
    except AdapterUnavailable:
        return SegMask(
            stub.segment(frame.color, prompt=prompt, depth_hint=frame.depth),
            "depth_threshold_stub_fallback",
        )


@dataclass(frozen=True, eq=False)
class ComponentRoute:
    component: Component
    route: str
    copy_pixels: np.ndarray | None = None  # (N, 2) subset when route == copy


@dataclass(frozen=True, eq=False)
class FillPlan:
    """Per-component routing; every hole pixel belongs to exactly one route."""

    routes: tuple
    shape: tuple

    def __post_init__(self):
        seen = np.zeros(self.shape, dtype=bool)
        for r in self.routes:
            if r.route not in (ROUTE_COPY, ROUTE_EXTERNAL, ROUTE_TELEA):
                raise InvalidConfig(f"unknown route {r.route!r}")
            m = r.component.mask(self.shape)
            if (seen & m).any():
                raise InvalidInput("fill plan routes overlap")
            seen |= m

    def route_counts(self) -> dict:
        counts = {ROUTE_COPY: 0, ROUTE_EXTERNAL: 0, ROUTE_TELEA: 0}
        for r in self.routes:
            counts[r.route] += 1
        return counts

    @property
    def total_pixels(self) -> int:
        return sum(r.component.area for r in self.routes)


def bootstrap_plan(holes: HolePartition, shape: tuple) -> FillPlan:
    """First-timestamp routing: large components external, the rest FMM."""
    routes = [ComponentRoute(c, ROUTE_EXTERNAL) for c in holes.large]
    routes += [ComponentRoute(c, ROUTE_TELEA) for c in holes.small]
    return FillPlan(tuple(routes), shape)


def plan_fills(
    holes: HolePartition,
    seg_t: SegMask,
    seg_prev: SegMask,
    frame_prev: Frame,
    rho: float = DEFAULT_BACKGROUND_MAJORITY,
) -> FillPlan:
    """Route each hole component for a timestamp t >= 1.

    A large component goes to the previous-timestamp copy when at least
    `rho` of its pixels are background now, background at the previous
    timestamp, and known at the previous timestamp; other large
    components were foreground territory before, so they go back to the
    generative backend. Small components are always cracks for the
    fast-marching fill, whatever their surroundings.
    """
    if not (0.0 < rho <= 1.0):
        raise InvalidConfig("rho must lie in (0, 1]")
    shape = frame_prev.shape
    if seg_t.mask.shape != shape or seg_prev.mask.shape != shape:
        raise InvalidInput("segmentation masks do not match the frame")
    eligible = ~seg_t.mask & ~seg_prev.mask & ~frame_prev.hole_mask
    large_ids = {id(c) for c in holes.large}
    routes = []
    for comp in holes.components:
        rows, cols = comp.pixels[:, 0], comp.pixels[:, 1]
        if id(comp) not in large_ids:
            routes.append(ComponentRoute(comp, ROUTE_TELEA))
        elif float(eligible[rows, cols].mean()) >= rho:
            routes.append(ComponentRoute(comp, ROUTE_COPY, comp.pixels[~frame_prev.hole_mask[rows, cols]]))
        else:
            routes.append(ComponentRoute(comp, ROUTE_EXTERNAL))
    return FillPlan(tuple(routes), shape)


@dataclass
class FillOutcome:
    frame: Frame
    copied_pixels: int
    external_pixels: int
    telea_pixels: int
    fallbacks: int


def execute_plan(
    frame: Frame,
    plan: FillPlan,
    frame_prev: Frame | None,
    adapters,
    request: InpaintRequestSpec,
    telea_radius: int = 3,
) -> FillOutcome:
    """Apply a fill plan: copies, then fast-marching fills, then external.

    Copies are bit-exact color and depth transfers from the previous
    timestamp. Fast-marching components are filled independently against
    the post-copy frame (disjoint writes, scheduling independent).
    External components run in plan order and see all earlier fills.
    """
    out = frame.copy()
    copied = external_px = telea_px = fallbacks = 0

    # copy pass
    leftovers = []
    for r in plan.routes:
        if r.route != ROUTE_COPY:
            continue
        if frame_prev is None:
            raise InvalidInput("copy route needs a previous frame")
        px = r.copy_pixels if r.copy_pixels is not None else r.component.pixels
        rows, cols = px[:, 0], px[:, 1]
        out.color[rows, cols] = frame_prev.color[rows, cols]
        vals = out.depth.values.copy()
        mask = out.depth.mask.copy()
        vals[rows, cols] = frame_prev.depth.values[rows, cols]
        mask[rows, cols] = frame_prev.depth.mask[rows, cols]
        out.depth = DepthMap(vals, mask)
        out.provenance[rows, cols] = PROV_COPIED_PREV_T
        out.hole_mask[rows, cols] = False
        copied += len(px)
        if len(px) < r.component.area:
            rest = r.component.pixels[frame_prev.hole_mask[r.component.pixels[:, 0], r.component.pixels[:, 1]]]
            leftovers.append(Component(rest))

    # fast-marching pass: each component against the post-copy frame
    telea_units = [r.component for r in plan.routes if r.route == ROUTE_TELEA] + leftovers
    base_color = out.color.copy()
    for comp in telea_units:
        m = comp.mask(out.shape)
        filled = telea_inpaint(base_color, m, telea_radius)
        out.color[m] = filled[m]
        out.provenance[m] = PROV_TELEA
        out.hole_mask[m] = False
        telea_px += comp.area

    # external pass, sequential in plan order
    comp_index = 0
    for r in plan.routes:
        if r.route != ROUTE_EXTERNAL:
            continue
        comp_request = InpaintRequestSpec(
            prompt=request.prompt,
            n_candidates=request.n_candidates,
            seed=request.seed + comp_index * request.n_candidates,
        )
        result: ExternalFillResult = external_inpaint(
            out, r.component, comp_request, adapters, adapters, telea_radius
        )
        out = result.frame
        external_px += r.component.area
        if result.fallback:
            fallbacks += 1
            external_px -= r.component.area
            telea_px += r.component.area
        comp_index += 1

    return FillOutcome(out, copied, external_px, telea_px, fallbacks)
