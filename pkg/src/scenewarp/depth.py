"""Depth-map conditioning: affine alignment and bilateral edge sharpening.

Predicted depth from a monocular estimator is at best affine-related to
the depth already committed in the scene; `align_depth` recovers that
scale/shift in closed form. `sharpen_depth` tightens depth boundaries
before warping so occluded regions do not smear into trailing streaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, InvalidInput, SingularSystem


@dataclass(frozen=True, eq=False)
class DepthMap:
    """H x W depth raster in world units; `mask` marks valid entries.

    Values are float64 in memory and canonically zero wherever invalid,
    so equal maps compare bit-equal regardless of how the invalid
    entries were produced.
    """

    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise InvalidInput("depth values must be 2D")
        if self.mask is None:
            m = np.ones(v.shape, dtype=bool)
        else:
            m = np.asarray(self.mask, dtype=bool)
        if m.shape != v.shape:
            raise InvalidInput("depth mask shape mismatch")
        m = m & np.isfinite(v) & (v > 0)
        object.__setattr__(self, "values", np.where(m, v, 0.0))
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, values: np.ndarray) -> "DepthMap":
        return cls(values, None)

    @property
    def shape(self):
        return self.values.shape

    def quantized(self) -> "DepthMap":
        """Round values to float32 precision (the dataset storage grid)."""
        return DepthMap(self.values.astype(np.float32).astype(np.float64), self.mask)


@dataclass(frozen=True)
class AlignmentResult:
    gamma: float
    beta: float
    rms_residual: float
    n_pixels: int

    def __post_init__(self):
        if self.n_pixels < 2:
            raise InvalidInput("alignment needs at least 2 pixels")
        if self.rms_residual < 0:
            raise InvalidInput("rms residual cannot be negative")

    @classmethod
    def identity(cls, n_pixels: int = 2) -> "AlignmentResult":
        return cls(1.0, 0.0, 0.0, n_pixels)


def _as_depth_arrays(d):
    if isinstance(d, DepthMap):
        return d.values, d.mask
    v = np.asarray(d, dtype=np.float64)
    return v, np.isfinite(v)


def align_depth(d_hat, d_ref, mask=None) -> AlignmentResult:
    """Closed-form least-squares fit of gamma*d_hat + beta to d_ref.

    The selected pixels are brought into a canonical (x, y) order before
    any sum is taken, so the result is exactly invariant to mask-preserving
    pixel permutations of the inputs. Raises SingularSystem when fewer
    than two pixels are selected or the selected d_hat values carry no
    variance.
    """
    x_all, mx = _as_depth_arrays(d_hat)
    y_all, my = _as_depth_arrays(d_ref)
    if x_all.shape != y_all.shape:
        raise InvalidInput("depth maps must share a shape")
    m = mx & my
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != m.shape:
            raise InvalidInput("alignment mask shape mismatch")
        m = m & mask

    x = x_all[m]
    y = y_all[m]
    n = int(x.size)
    if n < 2:
        raise SingularSystem(f"only {n} pixels selected for alignment")
    order = np.lexsort((y, x))
    x = x[order]
    y = y[order]

    mean_x = float(x.sum()) / n
    mean_y = float(y.sum()) / n
    dx = x - mean_x
    sxx = float(np.sum(dx * dx))
    scale = max(float(np.max(np.abs(x))), 1.0)
    if not sxx > n * (1e-9 * scale) ** 2:
        raise SingularSystem("selected predicted depths have no variance")
    sxy = float(np.sum(dx * (y - mean_y)))

    gamma = sxy / sxx
    beta = mean_y - gamma * mean_x
    res = gamma * x + beta - y
    sq = float(np.sum(res * res))
    return AlignmentResult(gamma=gamma, beta=beta, rms_residual=math.sqrt(max(sq, 0.0) / n), n_pixels=n)


def apply_alignment(d_hat: DepthMap, a: AlignmentResult) -> DepthMap:
    """Per-pixel gamma*d + beta; results that leave (0, inf) drop out of the mask."""
    values = a.gamma * d_hat.values + a.beta
    return DepthMap(values, d_hat.mask)


def sharpen_depth(d: DepthMap, filter_size: int = 3, sigma_space: float = 2.0, sigma_range: float = 0.5) -> DepthMap:
    """Bilateral filter of depth guided by depth itself, over valid pixels only.

    Invalid pixels pass through unchanged and contribute to no kernel;
    the output validity mask equals the input mask. Each output is a
    convex combination of valid inputs, so values stay inside the input
    range and the result is independent of row scheduling.
    """
    if filter_size % 2 == 0 or filter_size < 1:
        raise InvalidConfig(f"filter_size must be odd, got {filter_size}")
    if sigma_space <= 0 or sigma_range <= 0:
        raise InvalidConfig("bilateral sigmas must be positive")

    half = filter_size // 2
    vals = d.values
    mask = d.mask
    h, w = vals.shape
    pad_v = np.zeros((h + 2 * half, w + 2 * half))
    pad_m = np.zeros((h + 2 * half, w + 2 * half), dtype=bool)
    pad_v[half : half + h, half : half + w] = vals
    pad_m[half : half + h, half : half + w] = mask

    num = np.zeros((h, w))
    den = np.zeros((h, w))
    inv_2ss = 1.0 / (2.0 * sigma_space * sigma_space)
    inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range)
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            w_s = math.exp(-(dy * dy + dx * dx) * inv_2ss)
            nb_v = pad_v[half + dy : half + dy + h, half + dx : half + dx + w]
            nb_m = pad_m[half + dy : half + dy + h, half + dx : half + dx + w]
            w_r = np.exp(-np.square(vals - nb_v) * inv_2sr)
            wgt = np.where(nb_m, w_s * w_r, 0.0)
            num += wgt * nb_v
            den += wgt
    out = np.where(mask, num / np.where(den > 0, den, 1.0), vals)
    return DepthMap(out, mask.copy())
