"""8-neighbour local binary patterns and the uniform-pattern binning."""

from __future__ import annotations

import numpy as np

__all__ = ["NEIGHBOURS", "N_LBP_BINS", "lbp_codes", "transitions", "is_uniform", "uniform_bins", "UNIFORM_TABLE"]

# clockwise from the top-left neighbour, as (row, col) offsets; neighbour k sets bit k
NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))

N_LBP_BINS = 59


def lbp_codes(gray) -> np.ndarray:
    """Per-pixel code: bit ``k`` is set when neighbour ``k`` is ``>=`` the centre.

    Borders use replicate padding.
    """
    g = np.asarray(gray, dtype=np.float64)
    p = np.pad(g, 1, mode="edge")
    H, W = g.shape
    code = np.zeros((H, W), dtype=np.uint8)
    for k, (dr, dc) in enumerate(NEIGHBOURS):
        nb = p[1 + dr : 1 + dr + H, 1 + dc : 1 + dc + W]
        code |= (nb >= g).astype(np.uint8) << k
    return code


def transitions(code: int) -> int:
    """Number of 0/1 changes around the circular 8-bit pattern."""
    c = int(code) & 0xFF
    rot = ((c >> 1) | ((c & 1) << 7)) & 0xFF
    return bin(c ^ rot).count("1")


def is_uniform(code: int) -> bool:
    return transitions(code) <= 2


def _table():
    table = np.full(256, N_LBP_BINS - 1, dtype=np.int64)
    uniform = [c for c in range(256) if is_uniform(c)]
    table[uniform] = np.arange(len(uniform))
    return table


# code -> bin; the 58 uniform codes in ascending order, then the catch-all
UNIFORM_TABLE = _table()


def uniform_bins(codes) -> np.ndarray:
    return UNIFORM_TABLE[np.asarray(codes, dtype=np.int64)]
