"""Synthetic dynamic scene with exact per-pixel geometry.

A handful of analytic primitives (an enclosing textured box, moving
quads and spheres) rendered by per-pixel ray casting. Every depth is an
exact ray-intersection distance, which makes these renders usable as
ground truth for the warping and inpainting stages, and as an ML-free
stand-in for the generative video source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import Intrinsics, Pose
from .depth import DepthMap
from .frame import PROV_ORIGINAL, Frame

_EPS = 1e-9


@dataclass(frozen=True)
class QuadSpec:
    """Textured rectangle; moves linearly and optionally spins over t in [0,1]."""

    center: tuple
    half_u: float
    half_v: float
    velocity: tuple = (0.0, 0.0, 0.0)
    spin_axis: tuple = (0.0, 1.0, 0.0)
    spin_deg: float = 0.0
    texture_key: int = 10


@dataclass(frozen=True)
class SphereSpec:
    center: tuple
    radius: float
    velocity: tuple = (0.0, 0.0, 0.0)
    texture_key: int = 20


@dataclass(frozen=True)
class SceneSpec:
    """Enclosing box plus foreground objects; `seed` fixes every texture."""

    box_center: tuple = (0.0, 0.0, 4.0)
    box_half: tuple = (8.0, 5.0, 6.0)
    objects: tuple = field(default=())
    seed: int = 0


def standard_scene(seed: int = 0, moving: bool = True) -> SceneSpec:
    """Near quad over a far enclosing box; the scene used across the tests."""
    velocity = (-0.5, 0.0, 0.0) if moving else (0.0, 0.0, 0.0)
    quad = QuadSpec(center=(0.4, 0.1, 2.3), half_u=0.55, half_v=0.45, velocity=velocity, texture_key=10)
    return SceneSpec(objects=(quad,), seed=seed)


def _pattern(seed: int, key: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Smooth deterministic RGB field over local surface coordinates."""
    rng = np.random.default_rng([seed & 0x7FFFFFFF, key])
    base = rng.uniform(85.0, 165.0, size=3)
    amp = rng.uniform(14.0, 26.0, size=3)
    freq = rng.uniform(0.7, 1.3, size=(3, 2)) * (2.0 * math.pi / 2.2)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=(3, 2))
    out = np.empty(a.shape + (3,))
    for c in range(3):
        out[..., c] = base[c] + amp[c] * np.sin(freq[c, 0] * a + phase[c, 0]) * np.cos(
            freq[c, 1] * b + phase[c, 1]
        )
    return out


def _axis_angle(axis, deg: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0 or deg == 0.0:
        return np.eye(3)
    x, y, z = axis / n
    th = math.radians(deg)
    c, s = math.cos(th), math.sin(th)
    cc = 1.0 - c
    return np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )


def _rays(pose: Pose, k: Intrinsics):
    """World-space ray set; the parameter along each ray equals camera depth."""
    us = np.arange(k.width, dtype=np.float64)
    vs = np.arange(k.height, dtype=np.float64)
    uu, vv = np.meshgrid(us, vs)
    d_cam = np.stack([(uu - k.cx) / k.fx, (vv - k.cy) / k.fy, np.ones_like(uu)], axis=-1)
    d_world = d_cam @ pose.rotation  # row-vector form of R^T @ d
    return pose.center, d_world


def _box_hit(scene: SceneSpec, origin: np.ndarray, d_world: np.ndarray):
    """Interior ray-box exit distance plus the face index that was hit."""
    center = np.asarray(scene.box_center)
    half = np.asarray(scene.box_half)
    s_exit = np.full(d_world.shape[:2], np.inf)
    face = np.full(d_world.shape[:2], -1, dtype=np.int8)
    for axis in range(3):
        da = d_world[..., axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = (center[axis] + half[axis] - origin[axis]) / da
            neg = (center[axis] - half[axis] - origin[axis]) / da
        s_axis = np.where(da > 0, pos, np.where(da < 0, neg, np.inf))
        hit_face = np.where(da > 0, axis * 2, axis * 2 + 1).astype(np.int8)
        closer = s_axis < s_exit
        s_exit = np.where(closer, s_axis, s_exit)
        face = np.where(closer, hit_face, face)
    return s_exit, face


def _quad_frame(q: QuadSpec, t: float):
    m = _axis_angle(q.spin_axis, q.spin_deg * t)
    center = np.asarray(q.center) + np.asarray(q.velocity) * t
    return center, m @ np.array([1.0, 0.0, 0.0]), m @ np.array([0.0, 1.0, 0.0])


def _quad_hit(q: QuadSpec, t: float, origin: np.ndarray, d_world: np.ndarray):
    center, eu, ev = _quad_frame(q, t)
    n = np.cross(eu, ev)
    denom = d_world @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(np.abs(denom) > _EPS, np.dot(center - origin, n) / denom, np.inf)
        p_local = origin + np.where(np.isfinite(s), s, 0.0)[..., None] * d_world - center
    a = p_local @ eu
    b = p_local @ ev
    inside = np.isfinite(s) & (s > _EPS) & (np.abs(a) <= q.half_u) & (np.abs(b) <= q.half_v)
    return np.where(inside, s, np.inf), a, b


def _sphere_hit(sp: SphereSpec, t: float, origin: np.ndarray, d_world: np.ndarray):
    center = np.asarray(sp.center) + np.asarray(sp.velocity) * t
    oc = origin - center
    a = np.sum(d_world * d_world, axis=-1)
    b = 2.0 * (d_world @ oc)
    c0 = float(oc @ oc) - sp.radius * sp.radius
    disc = b * b - 4.0 * a * c0
    ok = disc >= 0
    root = np.sqrt(np.where(ok, disc, 0.0))
    s = (-b - root) / (2.0 * a)
    s = np.where(ok & (s > _EPS), s, np.inf)
    p_local = origin + np.where(np.isfinite(s), s, 0.0)[..., None] * d_world - center
    theta = np.arctan2(p_local[..., 1], p_local[..., 0])
    phi = np.arccos(np.clip(p_local[..., 2] / sp.radius, -1.0, 1.0))
    return s, theta * sp.radius, phi * sp.radius


def _cast(scene: SceneSpec, pose: Pose, k: Intrinsics, t: float):
    """Float64 depth, per-pixel winning primitive id (-1 = box), texture coords."""
    origin, d_world = _rays(pose, k)
    s_best, face = _box_hit(scene, origin, d_world)
    prim = np.full(s_best.shape, -1, dtype=np.int8)
    coords = []
    for i, obj in enumerate(scene.objects):
        if isinstance(obj, QuadSpec):
            s, a, b = _quad_hit(obj, t, origin, d_world)
        elif isinstance(obj, SphereSpec):
            s, a, b = _sphere_hit(obj, t, origin, d_world)
        else:
            raise TypeError(f"unknown primitive {type(obj)!r}")
        closer = s < s_best
        s_best = np.where(closer, s, s_best)
        prim = np.where(closer, np.int8(i), prim)
        coords.append((a, b))
    return origin, d_world, s_best, face, prim, coords


def render_depth(scene: SceneSpec, pose: Pose, k: Intrinsics, t: float) -> np.ndarray:
    """Exact float64 camera-space depth of the visible surface per pixel."""
    return _cast(scene, pose, k, t)[2]


def render_oracle(scene: SceneSpec, pose: Pose, k: Intrinsics, t: float):
    """Render (frame, object_mask) from an arbitrary pose at time t.

    The frame is hole-free; depth is the analytic intersection distance
    quantized to the float32 storage grid. object_mask is True on pixels
    covered by a foreground object.
    """
    origin, d_world, s_best, face, prim, coords = _cast(scene, pose, k, t)
    h, w = s_best.shape
    color = np.zeros((h, w, 3))

    hit_pts = origin + s_best[..., None] * d_world
    face_uv_axes = {0: (1, 2), 1: (1, 2), 2: (0, 2), 3: (0, 2), 4: (0, 1), 5: (0, 1)}
    for f in range(6):
        m = (prim == -1) & (face == f)
        if not np.any(m):
            continue
        ax_a, ax_b = face_uv_axes[f]
        color[m] = _pattern(scene.seed, f, hit_pts[m][:, ax_a], hit_pts[m][:, ax_b])
    for i, obj in enumerate(scene.objects):
        m = prim == i
        if not np.any(m):
            continue
        a, b = coords[i]
        color[m] = _pattern(scene.seed, obj.texture_key, a[m], b[m])

    color8 = np.clip(np.rint(color), 0, 255).astype(np.uint8)
    depth = DepthMap.full(s_best).quantized()
    return Frame.from_color_depth(color8, depth, PROV_ORIGINAL), prim >= 0


def occlusion_mask(scene: SceneSpec, p_src: Pose, p_dst: Pose, k: Intrinsics, t: float) -> np.ndarray:
    """True where the destination view sees geometry invisible from the source.

    A destination pixel counts as occluded when its world point lands
    behind the source camera, outside the source frame, or measurably
    behind the surface the source sees along the same ray.
    """
    origin_d, rays_d = _rays(p_dst, k)
    s_dst = render_depth(scene, p_dst, k, t)
    x_world = origin_d + s_dst[..., None] * rays_d

    x_src = x_world @ p_src.rotation.T + p_src.translation
    z = x_src[..., 2]
    occluded = z <= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * x_src[..., 0] / z + k.cx
        v = k.fy * x_src[..., 1] / z + k.cy
    iu = np.rint(u).astype(np.int64)
    iv = np.rint(v).astype(np.int64)
    out = (iu < 0) | (iu >= k.width) | (iv < 0) | (iv >= k.height)
    occluded |= out

    src_depth = render_depth(scene, p_src, k, t)
    iu_c = np.clip(iu, 0, k.width - 1)
    iv_c = np.clip(iv, 0, k.height - 1)
    visible_depth = src_depth[iv_c, iu_c]
    occluded |= ~out & (z > visible_depth * 1.02 + 0.02)
    return occluded


def base_video(scene: SceneSpec, pose: Pose, k: Intrinsics, times) -> list:
    """Source-camera frame sequence, the stand-in for a generated video."""
    return [render_oracle(scene, pose, k, float(t))[0] for t in times]


def time_grid(num_timestamps: int) -> np.ndarray:
    """Evenly spaced times over [0, 1]; a single timestamp sits at 0."""
    if num_timestamps < 1:
        raise ValueError("need at least one timestamp")
    if num_timestamps == 1:
        return np.array([0.0])
    return np.linspace(0.0, 1.0, num_timestamps)
