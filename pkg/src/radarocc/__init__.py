"""Radar occupancy prediction with lidar supervision.

Polar BEV grids, radar-visibility-filtered ground truth, Tversky-loss U-Net
training, polar sliding-window inference, range-binned evaluation, and a
synthetic radar/lidar simulator for desk-scale verification.
"""

from .grids import CartesianGrid, PolarGrid, RegionSpec

__version__ = "0.1.0"

__all__ = ["PolarGrid", "CartesianGrid", "RegionSpec", "__version__"]
