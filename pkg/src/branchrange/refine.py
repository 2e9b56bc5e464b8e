"""Edge-aware weighted least-squares disparity refinement.

The smoother minimizes

    E(u) = sum_p c_p (u_p - disp_p)^2
         + lam * sum_{4-neighbors p~q} w_pq (u_p - u_q)^2

where c_p is 1 for valid input pixels and 0 for invalid ones, and the
guide-image weights are w_pq = exp(-|g_p - g_q| / sigma_color).  The
minimizer is approximated by a fixed number of Gauss-Seidel sweeps in
row-major forward order, which is deterministic and decreases E at every
sweep (each pointwise update solves its own 1-D quadratic exactly).

Invalid pixels participate as unconstrained unknowns, so they relax to
the smoothly interpolated value; ``fill_invalid`` decides whether the
output keeps those values or re-marks the pixels invalid.  To keep early
sweeps inside the data range, unknowns start from a row-scan hole fill
(:func:`fill_holes`) rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .core import INVALID_DISPARITY
from .errors import DimensionMismatch

# Default smoothness weight: the conventional 8000 for unit-range guides,
# rescaled for 8-bit intensity differences.
DEFAULT_LAMBDA = 8000.0 / (255.0 * 255.0)


@dataclass
class WlsParams:
    """Weighted least-squares smoother parameters.

    :param lam: smoothness weight (>= 0)
    :param sigma_color: guide edge scale in intensity levels (> 0)
    :param iterations: number of Gauss-Seidel sweeps (>= 1)
    :param fill_invalid: keep the relaxed values at invalid input pixels
        (True) or re-mark them invalid in the output (False)
    """

    lam: float = DEFAULT_LAMBDA
    sigma_color: float = 8.0
    iterations: int = 60
    fill_invalid: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.sigma_color <= 0:
            raise ValueError(f"sigma_color must be > 0, got {self.sigma_color}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


def fill_holes(disp: np.ndarray) -> np.ndarray:
    """Row-scan hole filling.

    Each invalid pixel takes the smaller of the nearest valid values to
    its left and right in the same row (the far side of an occlusion);
    with only one side available that value is used.  Rows with no valid
    pixel stay invalid.
    """
    if disp.ndim != 2:
        raise DimensionMismatch("disparity map must be 2-D")
    h, w = disp.shape
    out = disp.astype(np.float32, copy=True)
    valid = disp >= 0
    cols = np.arange(w)

    # Nearest valid index to the left (running maximum of valid columns).
    left_idx = np.where(valid, cols, -1)
    left_idx = np.maximum.accumulate(left_idx, axis=1)
    # Nearest valid index to the right (mirror trick).
    right_idx = np.where(valid[:, ::-1], cols, -1)
    right_idx = np.maximum.accumulate(right_idx, axis=1)[:, ::-1]
    right_idx = np.where(right_idx >= 0, w - 1 - right_idx, -1)

    rows = np.arange(h)[:, None].repeat(w, axis=1)
    lv = np.where(left_idx >= 0, disp[rows, np.maximum(left_idx, 0)], np.inf)
    rv = np.where(right_idx >= 0, disp[rows, np.maximum(right_idx, 0)], np.inf)
    fill = np.minimum(lv, rv).astype(np.float32)
    hole = ~valid & np.isfinite(fill)
    out[hole] = fill[hole]
    return out


def _guide_weights(guide: np.ndarray, sigma_color: float):
    """Horizontal and vertical coupling weights from the guide image.

    w_right[y, x] couples (y, x)-(y, x+1) (last column 0); w_down[y, x]
    couples (y, x)-(y+1, x) (last row 0).
    """
    g = guide.astype(np.float64)
    h, w = g.shape
    w_right = np.zeros((h, w), dtype=np.float64)
    w_down = np.zeros((h, w), dtype=np.float64)
    w_right[:, :-1] = np.exp(-np.abs(g[:, 1:] - g[:, :-1]) / sigma_color)
    w_down[:-1, :] = np.exp(-np.abs(g[1:, :] - g[:-1, :]) / sigma_color)
    return w_right, w_down


def _initial_guess(disp: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Complete starting field: row-fill, then the global valid mean for
    rows the scan could not fill.  Values stay inside the valid range, so
    the sweeps never step outside it either."""
    u0 = fill_holes(disp).astype(np.float64)
    still = u0 < 0
    if still.any():
        u0[still] = float(disp[valid].astype(np.float64).mean())
    return u0


def wls_energy(
    u: np.ndarray, disp: np.ndarray, guide: np.ndarray, params: WlsParams
) -> float:
    """E(u) for the refinement objective (used to verify monotonicity)."""
    valid = disp >= 0
    w_right, w_down = _guide_weights(guide, params.sigma_color)
    uu = u.astype(np.float64)
    data = np.where(valid, (uu - disp) ** 2, 0.0).sum()
    dx = (uu[:, :-1] - uu[:, 1:]) ** 2
    dy = (uu[:-1, :] - uu[1:, :]) ** 2
    smooth = (w_right[:, :-1] * dx).sum() + (w_down[:-1, :] * dy).sum()
    return float(data + params.lam * smooth)


def wls_refine(
    disp: np.ndarray, guide: np.ndarray, params: WlsParams
) -> np.ndarray:
    """Smooth a disparity map against a grayscale guide image.

    Returns a float32 map.  Valid outputs stay within the [min, max]
    range of the valid inputs (every Gauss-Seidel update is a convex
    combination of in-range quantities).  An all-invalid map is returned
    unchanged.
    """
    if disp.shape != guide.shape:
        raise DimensionMismatch(
            f"disparity {disp.shape} and guide {guide.shape} differ in size"
        )
    valid = disp >= 0
    if not valid.any():
        return disp.astype(np.float32, copy=True)
    u0 = _initial_guess(disp, valid)
    conf = valid.astype(np.float64)
    data = np.where(valid, disp, 0.0).astype(np.float64)
    w_right, w_down = _guide_weights(guide, params.sigma_color)
    u = kernels.gauss_seidel(
        u0, data, conf, w_right, w_down, float(params.lam), params.iterations
    )
    out = u.astype(np.float32)
    if not params.fill_invalid:
        out[~valid] = INVALID_DISPARITY
    return out
