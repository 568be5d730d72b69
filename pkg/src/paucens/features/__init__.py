"""Pooled covariance and LBP image features."""

from .channels import ChannelStack, compute_base_channels, compute_luv_channels, orientation_o2, rgb_to_luv
from .imageio import read_image, read_pnm, read_raw, write_pnm, write_raw
from .integral import IntegralChannels, patch_covariance, patch_statistics
from .lbp import lbp_codes, uniform_bins
from .pooling import (
    PooledFeatureMap,
    channel_layout,
    extract_maps,
    grid_size,
    max_pool,
    sp_cov,
    sp_lbp,
    window_features,
    window_length,
)

__all__ = [
    "ChannelStack",
    "IntegralChannels",
    "PooledFeatureMap",
    "channel_layout",
    "compute_base_channels",
    "compute_luv_channels",
    "extract_maps",
    "grid_size",
    "lbp_codes",
    "max_pool",
    "orientation_o2",
    "patch_covariance",
    "patch_statistics",
    "read_image",
    "read_pnm",
    "read_raw",
    "rgb_to_luv",
    "sp_cov",
    "sp_lbp",
    "uniform_bins",
    "window_features",
    "window_length",
    "write_pnm",
    "write_raw",
]
