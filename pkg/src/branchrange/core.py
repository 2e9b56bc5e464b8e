"""Rectified stereo geometry: rig description, disparity/depth conversion,
back-projection.

Data conventions used across the toolkit
----------------------------------------

Grayscale image   ``(H, W) uint8`` row-major array.
Disparity map     ``(H, W) float32``; invalid pixels hold
                  :data:`INVALID_DISPARITY` (-1.0).  Any negative entry is
                  treated as invalid; valid entries are >= 0 and bounded by
                  the ``d_max`` of the run that produced them.
Depth map         ``(H, W) float32`` in meters; invalid pixels hold
                  :data:`INVALID_DEPTH` (0.0).  Valid entries are strictly
                  positive and finite.
Points            ``(N, 2) float64`` arrays of (x, y) pixel coordinates;
                  3-D points are plain ``(X, Y, Z)`` float tuples in the
                  left-camera frame (x right, y down, z forward).

The geometry is the standard rectified pinhole pair:

    Z = focal_px * baseline_m / d          (depth from disparity)
    X = (x - cx_px) * Z / focal_px         (back-projection)
    Y = (y - cy_px) * Z / focal_px
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonPositiveDepth,
    ZeroOrNegativeDisparity,
)

INVALID_DISPARITY = -1.0
INVALID_DEPTH = 0.0


@dataclass(frozen=True)
class CameraRig:
    """Calibrated rectified stereo rig.

    :param focal_px: shared focal length in pixels (> 0)
    :param baseline_m: distance between the camera centers in meters (> 0)
    :param cx_px: principal point x in pixels, inside the image
    :param cy_px: principal point y in pixels, inside the image
    :param width_px: image width in pixels (> 0)
    :param height_px: image height in pixels (> 0)
    """

    focal_px: float
    baseline_m: float
    cx_px: float
    cy_px: float
    width_px: int
    height_px: int

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError(f"focal_px must be > 0, got {self.focal_px}")
        if self.baseline_m <= 0:
            raise ValueError(f"baseline_m must be > 0, got {self.baseline_m}")
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError(
                f"image size must be positive, got {self.width_px}x{self.height_px}"
            )
        if not (0 <= self.cx_px < self.width_px):
            raise ValueError(f"cx_px {self.cx_px} outside [0, {self.width_px})")
        if not (0 <= self.cy_px < self.height_px):
            raise ValueError(f"cy_px {self.cy_px} outside [0, {self.height_px})")

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width) for comparing against array shapes."""
        return (self.height_px, self.width_px)


def disparity_to_depth(d: float, rig: CameraRig) -> float:
    """Convert a single disparity (pixels) to depth (meters).

    Raises :class:`ZeroOrNegativeDisparity` when ``d <= 0``: a zero disparity
    corresponds to a point at infinity and negative values are the invalid
    sentinel.
    """
    if d <= 0:
        raise ZeroOrNegativeDisparity(f"disparity must be > 0, got {d}")
    return rig.focal_px * rig.baseline_m / d


def depth_to_disparity(z: float, rig: CameraRig) -> float:
    """Inverse of :func:`disparity_to_depth` (raises on z <= 0)."""
    if z <= 0:
        raise NonPositiveDepth(f"depth must be > 0, got {z}")
    return rig.focal_px * rig.baseline_m / z


def depth_map_from_disparity(disp: np.ndarray, rig: CameraRig) -> np.ndarray:
    """Convert a disparity map to a depth map, element-wise.

    Valid (strictly positive) disparities map through Z = f*B/d; everything
    else (the -1.0 sentinel, and zero disparity, which has no finite depth)
    becomes :data:`INVALID_DEPTH`.

    Raises :class:`DimensionMismatch` when the map shape disagrees with the
    rig's ``width_px``/``height_px``.
    """
    if disp.ndim != 2 or disp.shape != rig.shape:
        raise DimensionMismatch(
            f"disparity map shape {disp.shape} does not match rig {rig.shape}"
        )
    fb = rig.focal_px * rig.baseline_m
    valid = disp > 0
    depth = np.zeros(disp.shape, dtype=np.float32)
    with np.errstate(divide="ignore"):
        depth[valid] = (fb / disp[valid].astype(np.float64)).astype(np.float32)
    return depth


def pixel_to_point(
    xy: tuple[float, float], depth_m: float, rig: CameraRig
) -> tuple[float, float, float]:
    """Back-project pixel (x, y) at the given depth to a 3-D camera-frame point.

    Raises :class:`NonPositiveDepth` when ``depth_m <= 0``.
    """
    if depth_m <= 0:
        raise NonPositiveDepth(f"depth must be > 0, got {depth_m}")
    x, y = xy
    big_x = (x - rig.cx_px) * depth_m / rig.focal_px
    big_y = (y - rig.cy_px) * depth_m / rig.focal_px
    return (big_x, big_y, depth_m)


def valid_disparity_mask(disp: np.ndarray) -> np.ndarray:
    """Boolean mask of non-sentinel disparity entries (>= 0)."""
    return disp >= 0


def valid_depth_mask(depth: np.ndarray) -> np.ndarray:
    """Boolean mask of valid depth entries (> 0)."""
    return depth > 0
