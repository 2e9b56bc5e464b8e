"""Robust camera-to-branch distance estimation from a mask and a depth map.

The estimator turns a boundary sample of the branch mask into a cloud of
probe points, reads depths at those points, rejects outliers with a
median-absolute-deviation band, and averages what survives:

    boundary samples P  (|P| = n)
      -> centroids of consecutive disjoint triplets P'   (floor(n/3) points)
      -> each centroid expanded into m ring points P''   (radius r pixels)
      -> probe set P''' = P'' then P'  (expanded first, stable order)
      -> nearest-pixel depth lookup, skipping invalid pixels
      -> keep values within k_mad * MAD of the median
      -> distance = arithmetic mean of the kept values

Ring points sit at angles 2*pi*j/m measured from the +x axis turning
counter-clockwise on screen (y grows downward, so the pixel offset is
(r cos a, -r sin a)), rounded to the nearest pixel and clamped to the
frame; duplicates after rounding are kept.

The MAD band uses median(|v - median(v)|); medians of even-sized sets
average the two middle values.  A zero MAD (at least half the values
identical to the median) degenerates the band to exact equality with the
median, which makes the estimate immune to any minority of outliers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NoValidDepths, TooFewPoints
from .maskio import SegMask, sample_contour


@dataclass
class RangerParams:
    """Distance estimator parameters.

    :param m: ring points per centroid (0 disables expansion)
    :param expand_radius_px: ring radius in pixels (>= 1 when m > 0)
    :param k_mad: MAD band half-width in MAD units (> 0)
    """

    m: int = 4
    expand_radius_px: float = 2.0
    k_mad: float = 3.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.m > 0 and self.expand_radius_px < 1:
            raise ValueError(
                f"expand_radius_px must be >= 1 when m > 0, got {self.expand_radius_px}"
            )
        if self.k_mad <= 0:
            raise ValueError(f"k_mad must be > 0, got {self.k_mad}")


@dataclass
class RangeEstimate:
    """Estimator result with its accounting.

    distance_m       arithmetic mean of the retained depth values
    n_points         boundary samples |P|
    n_centroids      triplet centroids |P'|
    n_total          probe points |P'''| = n_centroids * (m + 1)
    n_valid_depths   probes that hit a valid depth pixel
    n_retained       values inside the MAD band
    retained_values  kept depths, input order
    rejected_values  dropped depths, input order
    """

    distance_m: float
    n_points: int
    n_centroids: int
    n_total: int
    n_valid_depths: int
    n_retained: int
    retained_values: list[float] = field(default_factory=list)
    rejected_values: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "distance_m": self.distance_m,
            "n_points": self.n_points,
            "n_centroids": self.n_centroids,
            "n_total": self.n_total,
            "n_valid_depths": self.n_valid_depths,
            "n_retained": self.n_retained,
            "retained_values": list(self.retained_values),
            "rejected_values": list(self.rejected_values),
        }


def centroids_of_triplets(points: np.ndarray) -> np.ndarray:
    """Componentwise means of consecutive disjoint point triplets.

    floor(n/3) centroids; the 0..2 leftover points are dropped.  Raises
    :class:`TooFewPoints` for n < 3.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n < 3:
        raise TooFewPoints(f"need >= 3 points, got {n}")
    k = n // 3
    return pts[: 3 * k].reshape(k, 3, 2).mean(axis=1)


def expand_centroids(
    centroids: np.ndarray, m: int, radius: float, width: int, height: int
) -> np.ndarray:
    """Ring points around each centroid, centroid-major order.

    Point j of a centroid (cx, cy) is (cx + r cos a, cy - r sin a) with
    a = 2*pi*j/m, rounded half-up to the nearest pixel and clamped to the
    frame.  Duplicates are kept.  m = 0 yields an empty (0, 2) array.
    """
    cents = np.asarray(centroids, dtype=np.float64)
    if m == 0 or len(cents) == 0:
        return np.zeros((0, 2), dtype=np.float64)
    out = np.empty((len(cents) * m, 2), dtype=np.float64)
    i = 0
    for cx, cy in cents:
        for j in range(m):
            a = 2.0 * math.pi * j / m
            px = math.floor(cx + radius * math.cos(a) + 0.5)
            py = math.floor(cy - radius * math.sin(a) + 0.5)
            out[i, 0] = min(max(px, 0), width - 1)
            out[i, 1] = min(max(py, 0), height - 1)
            i += 1
    return out


def total_point_set(centroids: np.ndarray, expanded: np.ndarray) -> np.ndarray:
    """Multiset union of probe points: expanded points first, then the
    centroids themselves.  Duplicates are kept — each is a separate depth
    sample."""
    cents = np.asarray(centroids, dtype=np.float64).reshape(-1, 2)
    exp = np.asarray(expanded, dtype=np.float64).reshape(-1, 2)
    return np.concatenate([exp, cents], axis=0)


def collect_depths(points: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """Depth values at the nearest pixel of each point, invalid skipped.

    Raises :class:`NoValidDepths` when every lookup hits an invalid
    (zero) depth pixel.
    """
    pts = np.asarray(points, dtype=np.float64)
    h, w = depth.shape
    ix = np.floor(pts[:, 0] + 0.5).astype(np.int64)
    iy = np.floor(pts[:, 1] + 0.5).astype(np.int64)
    if (ix < 0).any() or (ix >= w).any() or (iy < 0).any() or (iy >= h).any():
        raise ValueError("probe point outside the depth map")
    vals = depth[iy, ix].astype(np.float64)
    vals = vals[vals > 0]
    if vals.size == 0:
        raise NoValidDepths("every probe point hit an invalid depth pixel")
    return vals


def mad_filter(values: np.ndarray, k_mad: float) -> tuple[np.ndarray, np.ndarray]:
    """Split values into (retained, rejected) by the MAD band.

    retained = { v : |v - median| <= k_mad * MAD } with
    MAD = median(|v - median|); when MAD is 0 only values exactly equal
    to the median are retained.  Input order is preserved in both parts.
    Raises :class:`EmptyInput` on an empty list.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise EmptyInput("mad_filter needs at least one value")
    med = float(np.median(vals))
    dev = np.abs(vals - med)
    mad = float(np.median(dev))
    if mad == 0.0:
        keep = vals == med
    else:
        keep = dev <= k_mad * mad
    return vals[keep], vals[~keep]


def estimate_distance(
    mask: SegMask | np.ndarray, depth: np.ndarray, params: RangerParams
) -> RangeEstimate:
    """Full ranging pipeline: contour -> centroids -> rings -> MAD -> mean."""
    bitmap = mask.bitmap if isinstance(mask, SegMask) else np.asarray(mask, dtype=bool)
    if bitmap.shape != depth.shape:
        raise DimensionMismatch(
            f"mask {bitmap.shape} and depth map {depth.shape} differ in size"
        )
    h, w = depth.shape
    points = sample_contour(bitmap)
    centroids = centroids_of_triplets(points)
    expanded = expand_centroids(centroids, params.m, params.expand_radius_px, w, h)
    probes = total_point_set(centroids, expanded)
    depths = collect_depths(probes, depth)
    retained, rejected = mad_filter(depths, params.k_mad)
    if retained.size == 0:
        # Cannot happen (the median itself is always in band), kept as a
        # guard for future band definitions.
        raise NoValidDepths("no depth values survived the MAD band")
    return RangeEstimate(
        distance_m=float(np.mean(retained)),
        n_points=len(points),
        n_centroids=len(centroids),
        n_total=len(probes),
        n_valid_depths=int(depths.size),
        n_retained=int(retained.size),
        retained_values=[float(v) for v in retained],
        rejected_values=[float(v) for v in rejected],
    )
