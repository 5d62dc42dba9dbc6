"""Geometry-based UAV placement with line-of-sight guarantees for two users."""

__version__ = "0.1.0"

from .environment import Building, Environment, find_initial_double_los
from .geometry import Frame, build_frame, cap_region, deviation_angle, link_distances

__all__ = [
    "Building",
    "Environment",
    "Frame",
    "build_frame",
    "cap_region",
    "deviation_angle",
    "find_initial_double_los",
    "link_distances",
    "__version__",
]
