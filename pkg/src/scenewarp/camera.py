"""Pinhole camera model, pose algebra, and virtual rig construction.

Coordinate conventions (OpenCV style):
  - camera frame: x right, y down, z forward; the camera looks along +z
  - pixel frame: u right, v down, origin at the top-left corner
  - poses are world-to-camera maps  x_cam = R @ x_world + t
  - world frame: y is down as well, so a level camera has R = I

All types are immutable values; every operation here is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, InvalidConfig, InvalidDepth

_ORTHO_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Intrinsics:
    """Shared pinhole intrinsics for the whole rig."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidConfig(f"focal lengths must be positive, got fx={self.fx} fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise InvalidConfig("principal point outside the image")
        if self.width < 1 or self.height < 1:
            raise InvalidConfig("image size must be at least 1x1")

    @property
    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(d["fx"], d["fy"], d["cx"], d["cy"], int(d["width"]), int(d["height"]))


@dataclass(frozen=True, eq=False)
class Pose:
    """World-to-camera rigid transform, rotation row-major."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen(self.rotation))
        object.__setattr__(self, "translation", _frozen(self.translation).reshape(3))
        r = self.rotation
        if r.shape != (3, 3):
            raise InvalidConfig("rotation must be 3x3")
        if np.max(np.abs(r.T @ r - np.eye(3))) > _ORTHO_TOL:
            raise InvalidConfig("rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > _ORTHO_TOL:
            raise InvalidConfig("rotation must have determinant +1")

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates (-R^T t)."""
        return -self.rotation.T @ self.translation

    @property
    def matrix4(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @classmethod
    def from_matrix4(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidConfig("pose matrix must be 4x4")
        return cls(m[:3, :3], m[:3, 3])

    def apply(self, x_world: np.ndarray) -> np.ndarray:
        """Map world points (..., 3) into this camera's frame."""
        x = np.asarray(x_world, dtype=np.float64)
        return x @ self.rotation.T + self.translation


def look_at_pose(center, target, up_world=(0.0, -1.0, 0.0)) -> Pose:
    """Pose of a camera sitting at `center` with its optical axis through `target`.

    `up_world` points up in world coordinates; the default matches the
    y-down world convention. Degenerate when the view direction is
    parallel to `up_world`.
    """
    center = np.asarray(center, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - center
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise InvalidConfig("look-at target coincides with the camera center")
    forward = forward / norm
    down = -np.asarray(up_world, dtype=np.float64)
    right = np.cross(down, forward)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-12:
        raise InvalidConfig("view direction parallel to the up vector")
    right = right / rnorm
    down = np.cross(forward, right)
    rot = np.stack([right, down, forward], axis=0)
    return Pose(rot, -rot @ center)


@dataclass(frozen=True)
class TrajectorySpec:
    """Virtual rig layout.

    kind:
      - "orbit-arc": cameras on a horizontal circular arc of `radius`
        around `look_at`, spanning `total_angle` degrees, all aimed at
        `look_at`.
      - "lateral-line": cameras on a horizontal line of total extent
        `baseline`, all facing +z in parallel.
      - "custom-list": `poses` given explicitly.
    """

    kind: str = "orbit-arc"
    num_views: int = 25
    radius: float = 3.0
    baseline: float = 1.0
    total_angle: float = 40.0
    look_at: tuple = (0.0, 0.0, 3.0)
    poses: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("orbit-arc", "lateral-line", "custom-list"):
            raise InvalidConfig(f"unknown trajectory kind {self.kind!r}")
        if self.num_views < 1:
            raise InvalidConfig("num_views must be >= 1")
        if self.kind == "orbit-arc" and not self.radius > 0:
            raise InvalidConfig("orbit-arc requires radius > 0")


@dataclass(frozen=True)
class CameraNetwork:
    """Ordered posed cameras sharing one set of intrinsics."""

    intrinsics: Intrinsics
    poses: tuple
    base_index: int

    def __post_init__(self):
        if not (0 <= self.base_index < len(self.poses)):
            raise InvalidConfig("base_index out of range")

    def __len__(self) -> int:
        return len(self.poses)


def make_intrinsics(fov_h_deg: float, width: int, height: int) -> Intrinsics:
    """Intrinsics from a horizontal field of view; square pixels, centered."""
    if not (0.0 < fov_h_deg < 180.0):
        raise InvalidConfig(f"horizontal fov must be in (0, 180), got {fov_h_deg}")
    if width < 1 or height < 1:
        raise InvalidConfig("image size must be at least 1x1")
    fx = (width / 2.0) / math.tan(math.radians(fov_h_deg) / 2.0)
    return Intrinsics(fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0, width=width, height=height)


def build_trajectory(spec: TrajectorySpec, intrinsics: Intrinsics, base_fraction: float = 0.5) -> CameraNetwork:
    """Lay out the virtual rig and pick which camera holds the source video."""
    if not (0.0 <= base_fraction <= 1.0):
        raise InvalidConfig("base_fraction must lie in [0, 1]")
    n = spec.num_views
    base_index = int(round(base_fraction * (n - 1)))

    if spec.kind == "custom-list":
        if len(spec.poses) != n:
            raise InvalidConfig(f"custom-list has {len(spec.poses)} poses, expected {n}")
        return CameraNetwork(intrinsics, tuple(spec.poses), base_index)

    if spec.kind == "lateral-line":
        poses = []
        for i in range(n):
            frac = i / (n - 1) - 0.5 if n > 1 else 0.0
            c = np.array([frac * spec.baseline, 0.0, 0.0])
            poses.append(Pose(np.eye(3), -c))
        return CameraNetwork(intrinsics, tuple(poses), base_index)

    # orbit-arc
    look = np.asarray(spec.look_at, dtype=np.float64)
    poses = []
    for i in range(n):
        frac = i / (n - 1) - 0.5 if n > 1 else 0.0
        a = math.radians(frac * spec.total_angle)
        c = look + spec.radius * np.array([math.sin(a), 0.0, -math.cos(a)])
        poses.append(look_at_pose(c, look))
    return CameraNetwork(intrinsics, tuple(poses), base_index)


def backproject(p, z: float, k: Intrinsics) -> np.ndarray:
    """Lift pixel `p` at depth `z` to a camera-frame 3D point."""
    if not z > 0:
        raise InvalidDepth(f"depth must be positive, got {z}")
    px, py = float(p[0]), float(p[1])
    return np.array([(px - k.cx) * z / k.fx, (py - k.cy) * z / k.fy, z])


def project(x, k: Intrinsics):
    """Project a camera-frame point; returns (pixel, depth).

    Points at or behind the image plane raise BehindCamera so callers
    cull instead of emitting garbage pixels.
    """
    x = np.asarray(x, dtype=np.float64)
    z = float(x[2])
    if not z > 0:
        raise BehindCamera(f"point has non-positive depth {z}")
    return np.array([k.fx * x[0] / z + k.cx, k.fy * x[1] / z + k.cy]), z


def relative_transform(pose_i: Pose, pose_j: Pose) -> Pose:
    """Rigid map taking camera-i coordinates into camera-j coordinates."""
    rot = pose_j.rotation @ pose_i.rotation.T
    t = pose_j.translation - rot @ pose_i.translation
    return Pose(rot, t)
