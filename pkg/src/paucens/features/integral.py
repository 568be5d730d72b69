"""Integral images of channel values and channel products.

Tables are int64 over the fixed-point channel integers, so rectangle sums
are exact. Covariance numerators ``N * S_ab - S_a * S_b`` are formed in
integers as well; only the final division is floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..errors import DataError
from .channels import FIXED_SCALE, ChannelStack

__all__ = [
    "COV_NAMES",
    "IntegralChannels",
    "integral_image",
    "box_sums",
    "patch_covariance",
    "patch_statistics",
    "pair_index",
]

COV_NAMES = ("x", "y", "abs_ix", "abs_iy", "abs_ixx", "abs_iyy", "mag", "o1", "o2")

# products and their sums must stay below this in magnitude
_INT_LIMIT = 2 ** 62


def integral_image(plane) -> np.ndarray:
    """Zero-padded cumulative sum, shape (H + 1, W + 1)."""
    a = np.asarray(plane)
    out = np.zeros((a.shape[0] + 1, a.shape[1] + 1), dtype=np.result_type(a, np.int64))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=out[1:, 1:])
    return out


def box_sums(table, p: int, q: int | None = None) -> np.ndarray:
    """Sums over every ``p x q`` (rows x cols) window, indexed by top-left corner."""
    q = p if q is None else q
    T = table
    return T[..., p:, q:] - T[..., :-p, q:] - T[..., p:, :-q] + T[..., :-p, :-q]


def pair_index(n: int = len(COV_NAMES)):
    """Upper-triangular off-diagonal pairs ``(a, b)``, ``a < b``, row-major."""
    return list(combinations(range(n), 2))


@dataclass(frozen=True)
class IntegralChannels:
    """Integral tables of the nine covariance statistics.

    The statistics are the pixel coordinates ``x`` (column) and ``y`` (row)
    followed by the seven base channels, all in fixed-point integers.

    Attributes
    ----------
    values : int64 array, shape (9, H, W)
    sums : int64 array, shape (9, H + 1, W + 1)
    products : dict mapping ``(a, b)``, ``a <= b``, to an (H + 1, W + 1) table
    """

    values: np.ndarray
    sums: np.ndarray
    products: dict

    @classmethod
    def from_stack(cls, stack: ChannelStack) -> "IntegralChannels":
        H, W = stack.height, stack.width
        yy, xx = np.mgrid[0:H, 0:W].astype(np.int64)
        vals = np.concatenate([
            np.stack([xx * FIXED_SCALE, yy * FIXED_SCALE]),
            stack.ints.astype(np.int64),
        ])
        big = int(np.abs(vals).max()) if vals.size else 0
        if big and H * W * big * big >= _INT_LIMIT:
            raise DataError(
                f"image of {W}x{H} pixels with channel magnitude {big / FIXED_SCALE:g} "
                "overflows the integral tables"
            )
        sums = np.stack([integral_image(v) for v in vals])
        products = {}
        for a in range(len(vals)):
            for b in range(a, len(vals)):
                products[(a, b)] = integral_image(vals[a] * vals[b])
        return cls(vals, sums, products)

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def rect_sum(self, channel: int, rect) -> int:
        x, y, w, h = self._check_rect(rect)
        T = self.sums[channel]
        return int(T[y + h, x + w] - T[y, x + w] - T[y + h, x] + T[y, x])

    def rect_product_sum(self, a: int, b: int, rect) -> int:
        x, y, w, h = self._check_rect(rect)
        T = self.products[(min(a, b), max(a, b))]
        return int(T[y + h, x + w] - T[y, x + w] - T[y + h, x] + T[y, x])

    def check_area(self, N: int):
        """Reject patch areas whose covariance numerators could overflow int64."""
        big = int(np.abs(self.values).max()) if self.values.size else 0
        if N * N * big * big >= _INT_LIMIT:
            raise DataError(f"patch area {N} too large for exact covariance at this channel range")

    def _check_rect(self, rect):
        x, y, w, h = (int(v) for v in rect)
        if w < 1 or h < 1 or w * h < 2:
            raise DataError(f"degenerate rectangle {rect}; need area >= 2")
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise DataError(f"rectangle {rect} leaves the {self.width}x{self.height} image")
        return x, y, w, h


def _cov_from_sums(N, Sa, Sb, Sab):
    # exact integer numerator of (N - 1) * N * cov
    return N * Sab - Sa * Sb


def _corr(num_ab, num_aa, num_bb):
    den = np.sqrt(num_aa.astype(np.float64)) * np.sqrt(num_bb.astype(np.float64))
    ok = (num_aa > 0) & (num_bb > 0)
    r = np.divide(num_ab.astype(np.float64), np.where(ok, den, 1.0))
    return np.clip(np.where(ok, r, 0.0), -1.0, 1.0)


def patch_covariance(ic: IntegralChannels, rect):
    """Variances and correlations of the nine statistics over one rectangle.

    Returns
    -------
    variances : array, shape (9,)
        Sample variances (``N - 1`` denominator) in channel units.
    correlations : array, shape (36,)
        ``cov_ab / (sigma_a sigma_b)`` for the pairs of :func:`pair_index`;
        0 when either variance is zero.
    """
    x, y, w, h = ic._check_rect(rect)
    N = w * h
    ic.check_area(N)
    S = [ic.rect_sum(k, rect) for k in range(9)]
    diag = [_cov_from_sums(N, S[k], S[k], ic.rect_product_sum(k, k, rect)) for k in range(9)]
    variances = np.array(diag, dtype=np.float64) / (N * (N - 1) * FIXED_SCALE ** 2)
    num = [_cov_from_sums(N, S[a], S[b], ic.rect_product_sum(a, b, rect)) for a, b in pair_index()]
    first, second = zip(*pair_index())
    d = np.array(diag, dtype=np.int64)
    corr = _corr(np.array(num, dtype=np.int64), d[list(first)], d[list(second)])
    return variances, corr


def patch_statistics(ic: IntegralChannels, p: int):
    """Variances and correlations of every ``p x p`` patch at stride 1.

    Returns arrays of shape (9, A_h, A_w) and (36, A_h, A_w), indexed by the
    patch's top-left corner, with ``A = size - p + 1``.
    """
    if p < 2:
        raise DataError("patch size must be >= 2")
    N = p * p
    ic.check_area(N)
    S = box_sums(ic.sums, p)
    diag = np.stack([_cov_from_sums(N, S[k], S[k], box_sums(ic.products[(k, k)], p)) for k in range(9)])
    variances = diag / float(N * (N - 1) * FIXED_SCALE ** 2)
    corr = np.stack([
        _corr(_cov_from_sums(N, S[a], S[b], box_sums(ic.products[(a, b)], p)), diag[a], diag[b])
        for a, b in pair_index()
    ])
    return variances, corr
