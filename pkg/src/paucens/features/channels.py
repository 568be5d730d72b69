"""Per-pixel low-level statistics and the LUV color transform.

Intensities are on a 0..255 scale. Derivatives use the fixed kernels
``[-1, 0, 1]`` (first order) and ``[1, -2, 1]`` (second order) with
replicate padding, so on integer images they are integers.

Every channel is rounded to a fixed-point grid of step ``1 / FIXED_SCALE``
(stored both as integers and as floats). Patch statistics are then computed
from exact integer sums, which makes pooled features bit-identical under
translation of the image content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError

__all__ = [
    "FIXED_SCALE",
    "BASE_NAMES",
    "ChannelStack",
    "to_gray",
    "derivatives",
    "orientation_o2",
    "rgb_to_luv",
    "compute_base_channels",
    "compute_luv_channels",
]

FIXED_SCALE = 256

BASE_NAMES = ("abs_ix", "abs_iy", "abs_ixx", "abs_iyy", "mag", "o1", "o2")
LUV_NAMES = ("L", "U", "V")

# sRGB primaries, D65 white
_RGB_TO_XYZ = np.array([
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
])
_WHITE = _RGB_TO_XYZ.sum(axis=1)
_UN = 4 * _WHITE[0] / (_WHITE[0] + 15 * _WHITE[1] + 3 * _WHITE[2])
_VN = 9 * _WHITE[1] / (_WHITE[0] + 15 * _WHITE[1] + 3 * _WHITE[2])


@dataclass(frozen=True)
class ChannelStack:
    """Named per-pixel planes on the fixed-point grid.

    Attributes
    ----------
    names : tuple of str
    ints : int64 array, shape (C, H, W)
        ``round(value * FIXED_SCALE)``.
    """

    names: tuple
    ints: np.ndarray

    @property
    def planes(self) -> np.ndarray:
        """Channel values as floats, exactly ``ints / FIXED_SCALE``."""
        return self.ints / FIXED_SCALE

    @property
    def height(self) -> int:
        return self.ints.shape[1]

    @property
    def width(self) -> int:
        return self.ints.shape[2]

    def __len__(self):
        return len(self.names)

    def channel(self, name) -> np.ndarray:
        return self.planes[self.names.index(name)]


def _check_image(image, min_size=3):
    img = np.asarray(image, dtype=np.float64)
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] not in (1, 3)):
        raise DataError(f"expected an (H, W) or (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < min_size or img.shape[1] < min_size:
        raise DataError(f"image is {img.shape[1]}x{img.shape[0]}; need at least {min_size}x{min_size}")
    if not np.isfinite(img).all():
        raise DataError("image contains non-finite values")
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    return img


def to_gray(image) -> np.ndarray:
    """Luma ``0.299 R + 0.587 G + 0.114 B``; grayscale input passes through."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[:, :, :3] @ np.array([0.299, 0.587, 0.114])


def derivatives(gray):
    """``(I_x, I_y, I_xx, I_yy)`` with replicate padding."""
    p = np.pad(np.asarray(gray, dtype=np.float64), 1, mode="edge")
    c = p[1:-1, 1:-1]
    ix = p[1:-1, 2:] - p[1:-1, :-2]
    iy = p[2:, 1:-1] - p[:-2, 1:-1]
    ixx = p[1:-1, 2:] - 2 * c + p[1:-1, :-2]
    iyy = p[2:, 1:-1] - 2 * c + p[:-2, 1:-1]
    return ix, iy, ixx, iyy


def orientation_o2(ix, iy) -> np.ndarray:
    """Signed orientation folded into ``(0, pi]``.

    ``atan2(I_y, I_x)`` where it is positive, ``atan2 + pi`` otherwise.
    Zero gradients therefore map to ``pi``.
    """
    a = np.arctan2(iy, ix)
    return np.where(a > 0, a, a + np.pi)


def _fixed(values):
    return np.rint(np.asarray(values) * FIXED_SCALE).astype(np.int64)


def compute_base_channels(image) -> ChannelStack:
    """The seven non-coordinate statistics of every pixel.

    Order: ``|I_x|, |I_y|, |I_xx|, |I_yy|, M, O_1, O_2`` with
    ``M = sqrt(I_x^2 + I_y^2)`` and ``O_1 = arctan(|I_y| / |I_x|)``
    (``pi/2`` when only ``I_x`` vanishes, 0 when both do). Color images are
    converted to gray first.
    """
    img = _check_image(image)
    ix, iy, ixx, iyy = derivatives(to_gray(img))
    mag = np.hypot(ix, iy)
    o1 = np.arctan2(np.abs(iy), np.abs(ix))
    o2 = orientation_o2(ix, iy)
    planes = [np.abs(ix), np.abs(iy), np.abs(ixx), np.abs(iyy), mag, o1, o2]
    return ChannelStack(BASE_NAMES, np.stack([_fixed(p) for p in planes]))


def rgb_to_luv(image) -> np.ndarray:
    """CIE L*u*v* of an RGB image with 0..255 intensities, shape (H, W, 3).

    Inputs are scaled to [0, 1] and treated as linear RGB (no gamma
    expansion); the reference white is D65. Black pixels get ``u = v = 0``.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    rgb = img[:, :, :3] / 255.0
    xyz = rgb @ _RGB_TO_XYZ.T
    X, Y, Z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    yr = Y / _WHITE[1]
    eps = (6.0 / 29.0) ** 3
    L = np.where(yr > eps, 116.0 * np.cbrt(yr) - 16.0, (29.0 / 3.0) ** 3 * yr)
    den = X + 15.0 * Y + 3.0 * Z
    safe = np.where(den > 0, den, 1.0)
    up = np.where(den > 0, 4.0 * X / safe, _UN)
    vp = np.where(den > 0, 9.0 * Y / safe, _VN)
    u = 13.0 * L * (up - _UN)
    v = 13.0 * L * (vp - _VN)
    return np.stack([L, u, v], axis=-1)


def compute_luv_channels(image) -> ChannelStack:
    img = _check_image(image, min_size=1)
    luv = rgb_to_luv(img)
    return ChannelStack(LUV_NAMES, np.stack([_fixed(luv[..., k]) for k in range(3)]))
