"""Dense stereo matching: block matching and semi-global matching.

Cost volumes are ``(H, W, d_max + 1) uint16`` arrays indexed [y][x][d];
``COST_INVALID`` (65535, the maximum representable cost) marks
correspondences that would leave the frame (x - d < 0).  Aggregation uses
saturating 16-bit arithmetic so invalid entries stay invalid and nothing
wraps around.

The full pipeline (:func:`sgbm`) is

    matching_cost -> sgm_aggregate -> wta_disparity (left view)
                                   -> mirrored volume -> wta (right view)
    -> lr_consistency -> postprocess

The right-view disparity is read out of the already-aggregated left
volume via C_R(y, x, d) = C_L(y, x + d, d) instead of running a second
aggregation pass; the reuse is exact and costs half as much.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage

from . import _kernels as kernels
from .core import INVALID_DISPARITY
from .errors import DimensionMismatch, WindowTooLarge

COST_INVALID = kernels.COST_INVALID

METRIC_SAD = "sad"
METRIC_CENSUS = "census"

# Widest census window whose neighbor count still fits a 64-bit code:
# (2*3+1)^2 - 1 = 48 bits.
MAX_CENSUS_RADIUS = 3

# Open-interval clamp for subpixel offsets: keeps refined disparities
# strictly between the two neighboring integer candidates.
_SUBPIXEL_LIMIT = 0.5 - 1e-6


@dataclass
class MatchParams:
    """Stereo matching parameters.

    :param d_max: largest disparity candidate; the volume holds levels
        0..d_max inclusive
    :param window_radius: matching window radius (window side 2r+1)
    :param metric: ``"sad"`` or ``"census"``
    :param p1: small-jump smoothness penalty (|dd| = 1); default 8,
        scaled by the window area for SAD so it stays commensurate with
        the cost magnitudes, unscaled for census Hamming costs
    :param p2: large-jump penalty (|dd| > 1); default 32, scaled like p1
    :param paths: number of aggregation directions, 4 or 8
    :param lr_tol: left/right consistency tolerance in pixels
    :param speckle_max_size: components smaller than this are speckle
        candidates
    :param speckle_diff: a speckle candidate is removed when its internal
        disparity range exceeds this
    """

    d_max: int = 64
    window_radius: int = 2
    metric: str = METRIC_CENSUS
    p1: int | None = None
    p2: int | None = None
    paths: int = 8
    lr_tol: float = 1.0
    speckle_max_size: int = 64
    speckle_diff: float = 1.0

    def __post_init__(self):
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")
        if self.window_radius < 1:
            raise ValueError(f"window_radius must be >= 1, got {self.window_radius}")
        if self.metric not in (METRIC_SAD, METRIC_CENSUS):
            raise ValueError(f"metric must be 'sad' or 'census', got {self.metric!r}")
        area = (2 * self.window_radius + 1) ** 2
        scale = area if self.metric == METRIC_SAD else 1
        if self.p1 is None:
            self.p1 = 8 * scale
        if self.p2 is None:
            self.p2 = 32 * scale
        if not (0 <= self.p1 <= self.p2):
            raise ValueError(f"need 0 <= p1 <= p2, got p1={self.p1} p2={self.p2}")
        if self.paths not in (4, 8):
            raise ValueError(f"paths must be 4 or 8, got {self.paths}")
        if self.lr_tol < 0:
            raise ValueError(f"lr_tol must be >= 0, got {self.lr_tol}")
        if self.speckle_max_size < 0 or self.speckle_diff < 0:
            raise ValueError("speckle parameters must be >= 0")


def _check_pair(left: np.ndarray, right: np.ndarray) -> None:
    if left.ndim != 2 or right.ndim != 2:
        raise DimensionMismatch("stereo images must be 2-D grayscale arrays")
    if left.shape != right.shape:
        raise DimensionMismatch(
            f"left {left.shape} and right {right.shape} differ in size"
        )


def census_transform(img: np.ndarray, radius: int) -> np.ndarray:
    """64-bit census code image (see kernel contract for the bit layout).

    Border pixels use the available neighbors; missing bits stay 0.
    Raises :class:`WindowTooLarge` when the window does not fit in the
    image or exceeds the 64-bit code capacity (radius > 3).
    """
    h, w = img.shape
    side = 2 * radius + 1
    if radius < 1 or side > min(h, w):
        raise WindowTooLarge(f"census window {side}x{side} does not fit {h}x{w}")
    if radius > MAX_CENSUS_RADIUS:
        raise WindowTooLarge(
            f"census window {side}x{side} needs {side * side - 1} bits; "
            f"codes are 64-bit (radius <= {MAX_CENSUS_RADIUS})"
        )
    return kernels.census_transform(np.ascontiguousarray(img, dtype=np.uint8), radius)


def matching_cost(
    left: np.ndarray, right: np.ndarray, params: MatchParams
) -> np.ndarray:
    """Raw matching cost volume for the configured metric.

    SAD sums absolute differences over the (truncated-at-borders) window;
    census computes the Hamming distance between census codes built with
    the same window radius.  Entries whose correspondence leaves the frame
    (x - d < 0) hold COST_INVALID.
    """
    _check_pair(left, right)
    h, w = left.shape
    side = 2 * params.window_radius + 1
    if side > min(h, w):
        raise WindowTooLarge(f"window {side}x{side} does not fit image {h}x{w}")
    left = np.ascontiguousarray(left, dtype=np.uint8)
    right = np.ascontiguousarray(right, dtype=np.uint8)
    if params.metric == METRIC_SAD:
        return kernels.sad_cost_volume(left, right, params.d_max, params.window_radius)
    cl = census_transform(left, params.window_radius)
    cr = census_transform(right, params.window_radius)
    return kernels.hamming_cost_volume(cl, cr, params.d_max)


def sgm_aggregate(cost: np.ndarray, params: MatchParams) -> np.ndarray:
    """Sum of directional path costs (4 or 8 paths).

    Along each direction r:

        L_r(p, d) = C(p, d) + min(L_r(p-r, d),
                                  L_r(p-r, d-1) + p1,
                                  L_r(p-r, d+1) + p1,
                                  min_k L_r(p-r, k) + p2)
                            - min_k L_r(p-r, k)

    with L_r = C at the image border.  Each directional term and the final
    sum saturate at 65535.  With p1 = p2 = 0 the recursion collapses to
    L_r = C, so the per-pixel argmin of the output equals that of the raw
    volume wherever the sum does not saturate.
    """
    if cost.ndim != 3:
        raise DimensionMismatch("cost volume must be (H, W, D)")
    return kernels.sgm_aggregate(
        np.ascontiguousarray(cost, dtype=np.uint16), params.p1, params.p2, params.paths
    )


def wta_disparity(cost: np.ndarray, subpixel: bool = True) -> np.ndarray:
    """Winner-take-all disparity with optional parabola refinement.

    Per pixel, d* = argmin_d cost (ties go to the lowest index).  With
    subpixel enabled and 0 < d* < d_max the parabola through the three
    neighboring costs adds (c- - c+) / (2 (c- - 2 c0 + c+)), clamped to
    the open interval (-0.5, 0.5); a flat parabola contributes 0.
    Pixels whose minimum cost is COST_INVALID become invalid.
    """
    if cost.ndim != 3:
        raise DimensionMismatch("cost volume must be (H, W, D)")
    h, w, nd = cost.shape
    d_star = np.argmin(cost, axis=2)
    c0 = np.take_along_axis(cost, d_star[:, :, None], axis=2)[:, :, 0]
    disp = d_star.astype(np.float64)
    if subpixel and nd >= 3:
        interior = (d_star > 0) & (d_star < nd - 1)
        iy, ix = np.nonzero(interior)
        dd = d_star[iy, ix]
        a = cost[iy, ix, dd - 1].astype(np.int64) - c0[iy, ix]
        b = cost[iy, ix, dd + 1].astype(np.int64) - c0[iy, ix]
        denom = a + b
        offset = np.zeros(a.shape, dtype=np.float64)
        nz = denom > 0
        offset[nz] = (a[nz] - b[nz]) / (2.0 * denom[nz])
        np.clip(offset, -_SUBPIXEL_LIMIT, _SUBPIXEL_LIMIT, out=offset)
        disp[iy, ix] += offset
    out = disp.astype(np.float32)
    out[c0 == COST_INVALID] = INVALID_DISPARITY
    return out


def mirror_cost_volume(cost: np.ndarray) -> np.ndarray:
    """Right-view cost volume read out of a left-view one.

    C_R(y, x, d) = C_L(y, x + d, d); entries with x + d >= W hold
    COST_INVALID.
    """
    h, w, nd = cost.shape
    out = np.full_like(cost, COST_INVALID)
    for d in range(min(nd, w)):
        if d == 0:
            out[:, :, 0] = cost[:, :, 0]
        else:
            out[:, : w - d, d] = cost[:, d:, d]
    return out


def lr_consistency(
    disp_left: np.ndarray, disp_right: np.ndarray, lr_tol: float
) -> np.ndarray:
    """Invalidate left-view disparities that the right view does not confirm.

    A valid left disparity d at column x survives iff x - round(d) is in
    frame, the right map is valid there, and |d - d_R(x - round(d))| <=
    lr_tol.  Already-invalid pixels stay invalid.
    """
    if disp_left.shape != disp_right.shape:
        raise DimensionMismatch("left/right disparity maps differ in size")
    h, w = disp_left.shape
    out = disp_left.astype(np.float32, copy=True)
    valid = disp_left >= 0
    iy, ix = np.nonzero(valid)
    d = disp_left[iy, ix].astype(np.float64)
    xr = ix - np.floor(d + 0.5).astype(np.int64)
    keep = (xr >= 0) & (xr < w)
    dr = np.full(d.shape, -1.0)
    dr[keep] = disp_right[iy[keep], xr[keep]]
    bad = (dr < 0) | (np.abs(d - dr) > lr_tol)
    out[iy[bad], ix[bad]] = INVALID_DISPARITY
    return out


def _remove_speckles(disp: np.ndarray, max_size: int, diff: float) -> np.ndarray:
    """Invalidate small 4-connected valid components with a wide internal
    disparity range (> diff)."""
    out = disp.copy()
    valid = disp >= 0
    labels, n = scipy.ndimage.label(valid)
    if n == 0:
        return out
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=n + 1)
    lo = np.full(n + 1, np.inf)
    hi = np.full(n + 1, -np.inf)
    np.minimum.at(lo, flat, np.where(valid, disp, np.inf).ravel())
    np.maximum.at(hi, flat, np.where(valid, disp, -np.inf).ravel())
    kill = np.zeros(n + 1, dtype=bool)
    comp = np.arange(1, n + 1)
    kill[comp] = (sizes[comp] < max_size) & ((hi[comp] - lo[comp]) > diff)
    out[kill[labels]] = INVALID_DISPARITY
    return out


def postprocess(disp: np.ndarray, params: MatchParams) -> np.ndarray:
    """3x3 invalid-aware median filter, then speckle removal.

    The median is taken over valid window entries only (mean of the two
    middle values for even counts); invalid pixels never become valid.
    Speckle removal drops 4-connected valid components smaller than
    ``speckle_max_size`` whose internal disparity range exceeds
    ``speckle_diff``.
    """
    disp = np.ascontiguousarray(disp, dtype=np.float32)
    med = kernels.median3x3(disp)
    return _remove_speckles(med, params.speckle_max_size, params.speckle_diff)


def block_match(
    left: np.ndarray, right: np.ndarray, params: MatchParams, subpixel: bool = True
) -> np.ndarray:
    """Plain winner-take-all block matching (no aggregation, no checks).

    Exactly wta_disparity(matching_cost(left, right, params), subpixel).
    """
    return wta_disparity(matching_cost(left, right, params), subpixel)


def sgbm(
    left: np.ndarray, right: np.ndarray, params: MatchParams, subpixel: bool = True
) -> np.ndarray:
    """Full semi-global matching pipeline.

    Returns a float32 disparity map with invalid pixels at -1.0; valid
    refined disparities lie in [0, d_max] with subpixel offsets strictly
    inside (-0.5, 0.5).  The right-view map used for the consistency check
    is the winner-take-all readout of the mirrored aggregated volume
    (integer precision, which the default lr_tol of 1 px absorbs).
    """
    cost = matching_cost(left, right, params)
    agg = sgm_aggregate(cost, params)
    disp_left = wta_disparity(agg, subpixel)
    disp_right = wta_disparity(mirror_cost_volume(agg), subpixel=False)
    checked = lr_consistency(disp_left, disp_right, params.lr_tol)
    return postprocess(checked, params)
