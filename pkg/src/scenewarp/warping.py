"""Forward depth warping with z-buffered splatting, fusion, and scheduling.

Each valid source pixel is lifted by its depth, rigidly moved into the
target camera, and scattered onto the nearest integer target pixel.
Collisions keep the smallest target-space depth; residual ties keep the
lowest source pixel index, which makes the result independent of the
iteration order. Target pixels no source pixel reaches become holes for
the inpainting stages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraNetwork, Intrinsics, Pose, relative_transform
from .depth import DepthMap
from .errors import InvalidConfig, InvalidInput
from .frame import PROV_WARPED, Frame

# candidates closer than this are considered the same surface when merging
MERGE_DEPTH_TIE = 1e-6


def warp(src: Frame, pose_src: Pose, pose_dst: Pose, k: Intrinsics) -> Frame:
    """Splat `src` into the target camera; unhit pixels become holes."""
    h, w = src.shape
    valid = src.depth.mask & ~src.hole_mask
    src_idx = np.flatnonzero(valid.ravel())

    out_color = np.zeros((h, w, 3), dtype=np.uint8)
    out_depth = np.zeros((h, w))
    out_prov = np.zeros((h, w), dtype=np.uint8)
    hit = np.zeros(h * w, dtype=bool)

    if src_idx.size:
        vs, us = np.divmod(src_idx, w)
        z = src.depth.values.ravel()[src_idx]

        # backproject -> rigid move -> project, all in float64
        x = (us - k.cx) * z / k.fx
        y = (vs - k.cy) * z / k.fy
        rel = relative_transform(pose_src, pose_dst)
        pts = np.stack([x, y, z], axis=1) @ rel.rotation.T + rel.translation
        zd = pts[:, 2]

        front = zd > 0
        pts = pts[front]
        zd = zd[front]
        src_idx = src_idx[front]
        if src_idx.size:
            ud = np.rint(k.fx * pts[:, 0] / zd + k.cx).astype(np.int64)
            vd = np.rint(k.fy * pts[:, 1] / zd + k.cy).astype(np.int64)
            inb = (ud >= 0) & (ud < w) & (vd >= 0) & (vd < h)
            ud, vd, zd, src_idx = ud[inb], vd[inb], zd[inb], src_idx[inb]

        if src_idx.size:
            tgt = vd * w + ud
            # z-buffer: sort by target pixel, then depth, then source index,
            # and keep the first entry of every target run
            order = np.lexsort((src_idx, zd, tgt))
            tgt = tgt[order]
            keep = np.ones(tgt.size, dtype=bool)
            keep[1:] = tgt[1:] != tgt[:-1]
            tgt_w = tgt[keep]
            zd_w = zd[order][keep]
            src_w = src_idx[order][keep]

            flat_color = src.color.reshape(-1, 3)
            out_color.reshape(-1, 3)[tgt_w] = flat_color[src_w]
            out_depth.ravel()[tgt_w] = zd_w
            hit[tgt_w] = True

    hit = hit.reshape(h, w)
    out_prov[hit] = PROV_WARPED
    return Frame(
        color=out_color,
        depth=DepthMap(out_depth, hit),
        hole_mask=~hit,
        provenance=out_prov,
    )


def merge_warps(warps: list) -> Frame:
    """Fuse warped candidates; nearest surface wins, near-ties keep list order."""
    if not warps:
        raise InvalidInput("merge_warps needs at least one candidate")
    shape = warps[0].shape
    for c in warps[1:]:
        if c.shape != shape:
            raise InvalidInput("merge candidates have mismatched shapes")

    first = warps[0]
    color = first.color.copy()
    depth = first.depth.values.copy()
    prov = first.provenance.copy()
    covered = first.depth.mask & ~first.hole_mask

    for cand in warps[1:]:
        cand_cov = cand.depth.mask & ~cand.hole_mask
        better = cand_cov & (~covered | (cand.depth.values <= depth - MERGE_DEPTH_TIE))
        color[better] = cand.color[better]
        depth[better] = cand.depth.values[better]
        prov[better] = cand.provenance[better]
        covered |= better

    return Frame(
        color=color,
        depth=DepthMap(np.where(covered, depth, 0.0), covered),
        hole_mask=~covered,
        provenance=np.where(covered, prov, 0).astype(np.uint8),
    )


def overlap(completed: list, target: Pose, k: Intrinsics) -> float:
    """Fraction of the target view already covered by the completed views.

    `completed` holds (frame, pose) pairs. The scheduler minimizes this
    value so the inpainter always receives the largest contiguous holes.
    """
    if not completed:
        raise InvalidInput("overlap needs at least one completed view")
    warped = [warp(f, p, target, k) for f, p in completed]
    merged = merge_warps(warped)
    return float((~merged.hole_mask).sum()) / merged.hole_mask.size


@dataclass(frozen=True)
class WarpStep:
    target: int
    sources: tuple


@dataclass(frozen=True)
class WarpSchedule:
    """Completion order for the non-base views; one step per target."""

    steps: tuple
    base_index: int
    num_views: int

    def __post_init__(self):
        targets = [s.target for s in self.steps]
        expected = sorted(set(range(self.num_views)) - {self.base_index})
        if sorted(targets) != expected:
            raise InvalidConfig("schedule must cover every non-base view exactly once")
        done = {self.base_index}
        for s in self.steps:
            if not set(s.sources) <= done:
                raise InvalidConfig("schedule step consumes a view that is not completed yet")
            done.add(s.target)

    def to_jsonable(self) -> list:
        return [{"target": s.target, "sources": list(s.sources)} for s in self.steps]

    @classmethod
    def from_jsonable(cls, data: list, base_index: int, num_views: int) -> "WarpSchedule":
        steps = tuple(WarpStep(int(d["target"]), tuple(int(x) for x in d["sources"])) for d in data)
        return cls(steps, base_index, num_views)


def schedule(network: CameraNetwork, overlap_fn) -> WarpSchedule:
    """Greedy farthest-first completion order.

    At each step the next target is the uncompleted view with minimal
    overlap from everything completed so far; ties prefer the larger
    index distance from the base view, then the lower index. overlap_fn
    is called as overlap_fn(completed_indices, target_index) with the
    completed tuple growing monotonically in schedule order.
    """
    n = len(network)
    base = network.base_index
    completed = [base]
    remaining = [v for v in range(n) if v != base]
    steps = []
    while remaining:
        scored = [
            (overlap_fn(tuple(completed), v), -abs(v - base), v) for v in remaining
        ]
        best = min(scored)[2]
        steps.append(WarpStep(target=best, sources=tuple(completed)))
        completed.append(best)
        remaining.remove(best)
    return WarpSchedule(tuple(steps), base, n)
