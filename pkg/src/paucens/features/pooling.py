"""Spatially pooled covariance (sp-Cov) and LBP (sp-LBP) feature maps.

Grid geometry
-------------
Patches of size ``p`` are evaluated at every pixel (stride 1) and indexed by
their top-left anchor, giving ``A = H - p + 1`` anchor rows. Pooling cell
``r`` takes the maximum over the ``R`` anchors ``s*r, ..., s*r + R - 1``
(``s`` is the pooling stride), so a map has::

    rows = (A - R) // s + 1        (0 if A < R)

cells, and likewise for columns. Cell ``r`` depends only on pixel rows
``s*r .. s*r + R + p - 2``. Shifting the image content by ``s`` pixels thus
shifts every cell by exactly one position.

The per-cell mean maps (base statistics and LUV) are the special case
``p = s``, ``R = 1``: each cell averages one ``s x s`` block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError
from .channels import BASE_NAMES, FIXED_SCALE, LUV_NAMES, _check_image, compute_base_channels, compute_luv_channels, to_gray
from .integral import COV_NAMES, IntegralChannels, box_sums, integral_image, pair_index, patch_statistics
from .lbp import N_LBP_BINS, lbp_codes, uniform_bins

__all__ = [
    "PooledFeatureMap",
    "grid_size",
    "max_pool",
    "cell_means",
    "sp_cov",
    "sp_lbp",
    "extract_maps",
    "window_features",
    "window_length",
    "channel_layout",
    "COV_SCALES",
    "LBP_SCALES",
    "FEATURE_KINDS",
]

COV_SCALES = (8, 16, 32)
LBP_SCALES = (4, 8, 16)
POOL_STRIDE = 4
COV_POOL = 4
LBP_POOL = 8

FEATURE_KINDS = ("sp-cov", "sp-lbp", "luv", "mag", "orient")

# descriptor kept per scale: the 7 non-coordinate variances and every
# correlation except corr(x, y)
_KEEP_VAR = tuple(range(2, 9))
_KEEP_CORR = tuple(k for k, ab in enumerate(pair_index()) if ab != (0, 1))


@dataclass(frozen=True)
class PooledFeatureMap:
    """One family of pooled channels on a common cell grid.

    Attributes
    ----------
    name : str
    channels : tuple of str
    values : array, shape (C, rows, cols)
    patch : int
        Patch side ``p``.
    pool : int
        Pooling region side ``R``, in anchors.
    stride : int
        Pooling stride ``s`` in pixels.
    """

    name: str
    channels: tuple
    values: np.ndarray
    patch: int
    pool: int
    stride: int = POOL_STRIDE

    @property
    def grid(self):
        return self.values.shape[1:]

    def footprint(self) -> int:
        """Pixel extent of one cell along each axis, ``R + p - 1``."""
        return self.pool + self.patch - 1


def grid_size(size: int, patch: int, pool: int, stride: int = POOL_STRIDE) -> int:
    """Number of pooling cells along an axis of ``size`` pixels."""
    anchors = size - patch + 1
    if anchors < pool:
        return 0
    return (anchors - pool) // stride + 1


def max_pool(values, pool: int, stride: int = POOL_STRIDE) -> np.ndarray:
    """Maximum over ``pool x pool`` anchor blocks taken every ``stride`` anchors.

    ``values`` has shape (C, A_h, A_w); the result (C, rows, cols).
    """
    v = np.asarray(values)
    rows = grid_size(v.shape[1], 1, pool, stride)
    cols = grid_size(v.shape[2], 1, pool, stride)
    if rows == 0 or cols == 0:
        return np.zeros((v.shape[0], rows, cols), dtype=v.dtype)
    win = sliding_window_view(v, (pool, pool), axis=(1, 2))
    return win[:, : (rows - 1) * stride + 1 : stride, : (cols - 1) * stride + 1 : stride].max(axis=(-2, -1))


def cell_means(ints, stride: int = POOL_STRIDE) -> np.ndarray:
    """Mean of each ``stride x stride`` block of fixed-point channel integers."""
    T = np.stack([integral_image(c) for c in ints])
    S = box_sums(T, stride)[:, ::stride, ::stride]
    return S / float(stride * stride * FIXED_SCALE)


def _mean_map(name, stack, keep=None):
    idx = list(range(len(stack))) if keep is None else [stack.names.index(k) for k in keep]
    return PooledFeatureMap(
        name, tuple(f"{name}:{stack.names[i]}" for i in idx),
        cell_means(stack.ints[idx]), patch=POOL_STRIDE, pool=1,
    )


def _cov_channel_names(p):
    names = [f"cov{p}:var_{COV_NAMES[k]}" for k in _KEEP_VAR]
    pairs = pair_index()
    names += [f"cov{p}:corr_{COV_NAMES[pairs[k][0]]}_{COV_NAMES[pairs[k][1]]}" for k in _KEEP_CORR]
    return tuple(names)


def sp_cov(image, scales=COV_SCALES, pool: int = COV_POOL, stride: int = POOL_STRIDE):
    """Base-statistic cell means plus pooled covariance descriptors per scale.

    Returns a list of :class:`PooledFeatureMap`: ``base`` (7 channels) and one
    ``cov<p>`` map (7 variances + 35 correlations) for each patch size that
    fits; scales larger than the image are skipped with a warning.
    """
    img = _check_image(image)
    stack = compute_base_channels(img)
    maps = [_mean_map("base", stack)]
    ic = IntegralChannels.from_stack(stack)
    for p in scales:
        if grid_size(stack.height, p, pool, stride) == 0 or grid_size(stack.width, p, pool, stride) == 0:
            warnings.warn(f"image {stack.width}x{stack.height} too small for {p}x{p} patches; scale skipped")
            continue
        var, corr = patch_statistics(ic, p)
        desc = np.concatenate([var[list(_KEEP_VAR)], corr[list(_KEEP_CORR)]])
        maps.append(PooledFeatureMap(f"cov{p}", _cov_channel_names(p), max_pool(desc, pool, stride), p, pool, stride))
    return maps


def sp_lbp(image, scales=LBP_SCALES, pool: int = LBP_POOL, stride: int = POOL_STRIDE):
    """Pooled uniform-LBP histograms, one ``lbp<p>`` map of 59 channels per patch size.

    Each patch histogram is normalized by the patch area.
    """
    img = _check_image(image)
    gray = to_gray(img)
    if min(gray.shape) < min(scales):
        raise DataError(f"image {gray.shape[1]}x{gray.shape[0]} smaller than the {min(scales)}px LBP patch")
    bins = uniform_bins(lbp_codes(gray))
    tables = np.stack([integral_image((bins == b).astype(np.int64)) for b in range(N_LBP_BINS)])
    maps = []
    for p in scales:
        if grid_size(gray.shape[0], p, pool, stride) == 0 or grid_size(gray.shape[1], p, pool, stride) == 0:
            warnings.warn(f"image {gray.shape[1]}x{gray.shape[0]} too small for {p}x{p} LBP patches; scale skipped")
            continue
        hist = box_sums(tables, p) / float(p * p)
        names = tuple(f"lbp{p}:bin{b}" for b in range(N_LBP_BINS))
        maps.append(PooledFeatureMap(f"lbp{p}", names, max_pool(hist, pool, stride), p, pool, stride))
    return maps


def extract_maps(image, kinds=("sp-cov", "luv")):
    """Feature maps for the requested kinds, in :data:`FEATURE_KINDS` order.

    ``mag`` and ``orient`` are the cell means of ``M`` and ``O_1, O_2``;
    they duplicate part of ``sp-cov`` when both are requested.
    """
    kinds = list(dict.fromkeys(kinds))
    unknown = [k for k in kinds if k not in FEATURE_KINDS]
    if unknown:
        from ..errors import ConfigError
        raise ConfigError(f"unknown feature kinds {unknown}; choose from {', '.join(FEATURE_KINDS)}")
    img = _check_image(image)
    maps = []
    for kind in FEATURE_KINDS:
        if kind not in kinds:
            continue
        if kind == "sp-cov":
            maps += sp_cov(img)
        elif kind == "sp-lbp":
            maps += sp_lbp(img)
        elif kind == "luv":
            maps.append(_mean_map("luv", compute_luv_channels(img)))
        elif kind == "mag":
            maps.append(_mean_map("mag", compute_base_channels(img), keep=("mag",)))
        else:
            maps.append(_mean_map("orient", compute_base_channels(img), keep=("o1", "o2")))
    return maps


def channel_layout(kinds=("sp-cov", "luv"), cov_scales=COV_SCALES, lbp_scales=LBP_SCALES) -> list:
    """Names of all pooled channels a configuration produces, in output order."""
    names = []
    for kind in FEATURE_KINDS:
        if kind not in kinds:
            continue
        if kind == "sp-cov":
            names += [f"base:{n}" for n in BASE_NAMES]
            for p in cov_scales:
                names += list(_cov_channel_names(p))
        elif kind == "sp-lbp":
            for p in lbp_scales:
                names += [f"lbp{p}:bin{b}" for b in range(N_LBP_BINS)]
        elif kind == "luv":
            names += [f"luv:{n}" for n in LUV_NAMES]
        elif kind == "mag":
            names.append("mag:mag")
        else:
            names += ["orient:o1", "orient:o2"]
    return names


def _window_cells(fmap, start, length):
    s = fmap.stride
    first = start // s
    # cells whose whole footprint lies inside [start, start + length)
    last = (start + length - fmap.footprint()) // s
    return first, max(first, last + 1)


def window_features(maps, window, image_shape=None):
    """Flatten the pooled cells that lie inside ``window = (x, y, w, h)``.

    A cell is kept when its entire pixel footprint lies inside the window.
    Values are concatenated map by map, then channel by channel, then in
    row-major cell order. ``x`` and ``y`` must be multiples of the pooling
    stride so that every window sees the same cell alignment.
    """
    x, y, w, h = (int(v) for v in window)
    if w < 1 or h < 1 or x < 0 or y < 0:
        raise DataError(f"invalid window {window}")
    if image_shape is not None and (x + w > image_shape[1] or y + h > image_shape[0]):
        raise DataError(f"window {window} leaves the {image_shape[1]}x{image_shape[0]} image")
    parts = []
    for fmap in maps:
        s = fmap.stride
        if x % s or y % s:
            raise DataError(f"window origin ({x}, {y}) must be a multiple of the pooling stride {s}")
        r0, r1 = _window_cells(fmap, y, h)
        c0, c1 = _window_cells(fmap, x, w)
        rows, cols = fmap.grid
        if image_shape is None and (r1 > rows or c1 > cols):
            raise DataError(f"window {window} exceeds the {fmap.name} cell grid")
        parts.append(fmap.values[:, r0:min(r1, rows), c0:min(c1, cols)].ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def window_length(maps_or_kinds, width: int, height: int) -> int:
    """Length of :func:`window_features` output for a ``width x height`` window."""
    total = 0
    for fmap in maps_or_kinds:
        n_r = max(0, (height - fmap.footprint()) // fmap.stride + 1)
        n_c = max(0, (width - fmap.footprint()) // fmap.stride + 1)
        total += len(fmap.channels) * n_r * n_c
    return total
