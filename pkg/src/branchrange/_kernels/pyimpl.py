"""Reference numpy implementations of the per-pixel kernels.

This module defines the exact semantics of every hot loop; the compiled
twin in ``cyimpl.pyx`` must produce bit-identical results (integer kernels
exactly, float kernels operation-for-operation in IEEE double/single
precision).  The functions are written as vectorized scans rather than
per-pixel Python loops so the fallback stays usable at VGA resolution.

Kernel contracts
----------------

* Cost volumes are ``(H, W, d_max + 1) uint16`` arrays indexed [y][x][d];
  :data:`COST_INVALID` (65535) marks correspondences that leave the frame.
  Real costs are clamped to :data:`COST_MAX_VALID` so the sentinel stays
  reserved.
* Census codes are 64-bit: bit k is set when the k-th window neighbor
  (row-major order, center excluded) is strictly less than the center.
  Out-of-frame neighbors contribute a 0 bit.
* Path aggregation uses saturating 16-bit arithmetic: each directional
  term and the final sum are clamped to 65535 instead of wrapping.
* The smoother is plain Gauss-Seidel with a row-major forward sweep
  order; the numpy version runs the equivalent anti-diagonal wavefront
  (for a 4-neighbor stencil both orders read identical values).
"""

from __future__ import annotations

import numpy as np

COST_INVALID = 65535
COST_MAX_VALID = 65534

# Directional scan set: (dx, dy) per path, 4-path subset first.
PATH_DIRS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
PATH_DIRS_8 = PATH_DIRS_4 + ((1, 1), (-1, -1), (1, -1), (-1, 1))


def census_transform(img: np.ndarray, radius: int) -> np.ndarray:
    """Per-pixel census code over a (2*radius+1)^2 window.

    Bit k of the code is 1 iff the k-th neighbor (row-major over the
    window, center excluded, out-of-frame positions keep their bit index
    but contribute 0) is strictly less than the center pixel.
    """
    h, w = img.shape
    code = np.zeros((h, w), dtype=np.uint64)
    k = 0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dy == 0 and dx == 0:
                continue
            # Destination region whose neighbor (y+dy, x+dx) is in frame.
            y0, y1 = max(0, -dy), h - max(0, dy)
            x0, x1 = max(0, -dx), w - max(0, dx)
            bit = np.zeros((h, w), dtype=bool)
            bit[y0:y1, x0:x1] = (
                img[y0 + dy : y1 + dy, x0 + dx : x1 + dx] < img[y0:y1, x0:x1]
            )
            code |= bit.astype(np.uint64) << np.uint64(k)
            k += 1
    return code


def hamming_cost_volume(
    census_left: np.ndarray, census_right: np.ndarray, d_max: int
) -> np.ndarray:
    """Hamming-distance cost volume between census code images.

    cost[y, x, d] = popcount(left[y, x] XOR right[y, x - d]); entries with
    x - d < 0 hold COST_INVALID.
    """
    h, w = census_left.shape
    cost = np.full((h, w, d_max + 1), COST_INVALID, dtype=np.uint16)
    for d in range(min(d_max + 1, w)):
        ham = np.bitwise_count(census_left[:, d:] ^ census_right[:, : w - d])
        cost[:, d:, d] = ham.astype(np.uint16)
    return cost


def sad_cost_volume(
    left: np.ndarray, right: np.ndarray, d_max: int, radius: int
) -> np.ndarray:
    """Sum-of-absolute-differences cost volume with truncated windows.

    cost[y, x, d] sums |left(y+j, x+i) - right(y+j, x-d+i)| over window
    offsets (i, j) where both samples are in frame; entries with x - d < 0
    hold COST_INVALID, real sums are clamped to COST_MAX_VALID.
    """
    h, w = left.shape
    il = left.astype(np.int32)
    ir = right.astype(np.int32)
    cost = np.full((h, w, d_max + 1), COST_INVALID, dtype=np.uint16)
    ys = np.arange(h)
    y0 = np.maximum(ys - radius, 0)
    y1 = np.minimum(ys + radius, h - 1) + 1
    for d in range(min(d_max + 1, w)):
        wd = w - d
        diff = np.abs(il[:, d:] - ir[:, :wd])
        ii = np.zeros((h + 1, wd + 1), dtype=np.int64)
        np.cumsum(diff, axis=0, out=ii[1:, 1:])
        np.cumsum(ii[1:, 1:], axis=1, out=ii[1:, 1:])
        xs = np.arange(wd)
        x0 = np.maximum(xs - radius, 0)
        x1 = np.minimum(xs + radius, wd - 1) + 1
        box = (
            ii[np.ix_(y1, x1)]
            - ii[np.ix_(y0, x1)]
            - ii[np.ix_(y1, x0)]
            + ii[np.ix_(y0, x0)]
        )
        cost[:, d:, d] = np.minimum(box, COST_MAX_VALID).astype(np.uint16)
    return cost


def _path_step(c: np.ndarray, prev: np.ndarray, p1: int, p2: int) -> np.ndarray:
    """One recursion step along a path for a (N, D) slab.

    L(d) = C(d) + min(prev(d), prev(d-1)+p1, prev(d+1)+p1, min_k prev(k)+p2)
           - min_k prev(k),  clamped to 65535.
    """
    pmin = prev.min(axis=1, keepdims=True)
    m = prev.copy()
    m[:, 1:] = np.minimum(m[:, 1:], prev[:, :-1] + p1)
    m[:, :-1] = np.minimum(m[:, :-1], prev[:, 1:] + p1)
    np.minimum(m, pmin + p2, out=m)
    return np.minimum(c + m - pmin, COST_INVALID)


def _path_cost(c: np.ndarray, dx: int, dy: int, p1: int, p2: int) -> np.ndarray:
    """Directional cost L_r for direction (dx, dy); c is int32 (H, W, D)."""
    h, w, _ = c.shape
    ell = np.empty_like(c)
    if dy == 0:
        xs = range(w) if dx > 0 else range(w - 1, -1, -1)
        first = True
        for x in xs:
            if first:
                ell[:, x, :] = c[:, x, :]
                first = False
            else:
                ell[:, x, :] = _path_step(c[:, x, :], ell[:, x - dx, :], p1, p2)
    elif dx == 0:
        ys = range(h) if dy > 0 else range(h - 1, -1, -1)
        first = True
        for y in ys:
            if first:
                ell[y, :, :] = c[y, :, :]
                first = False
            else:
                ell[y, :, :] = _path_step(c[y, :, :], ell[y - dy, :, :], p1, p2)
    else:
        xs = range(w) if dx > 0 else range(w - 1, -1, -1)
        first = True
        for x in xs:
            if first:
                ell[:, x, :] = c[:, x, :]
                first = False
                continue
            if dy > 0:
                ell[0, x, :] = c[0, x, :]
                ell[1:, x, :] = _path_step(c[1:, x, :], ell[: h - 1, x - dx, :], p1, p2)
            else:
                ell[h - 1, x, :] = c[h - 1, x, :]
                ell[: h - 1, x, :] = _path_step(c[: h - 1, x, :], ell[1:, x - dx, :], p1, p2)
    return ell


def sgm_aggregate(cost: np.ndarray, p1: int, p2: int, paths: int) -> np.ndarray:
    """Sum of directional path costs with saturating 16-bit storage.

    Border pixels (no predecessor along a direction) start with L = C.
    The per-direction term and the final sum are both clamped to 65535, so
    invalid entries stay invalid and nothing wraps around.
    """
    dirs = PATH_DIRS_4 if paths == 4 else PATH_DIRS_8
    c = cost.astype(np.int32)
    total = np.zeros(c.shape, dtype=np.int32)
    for dx, dy in dirs:
        total += _path_cost(c, dx, dy, p1, p2)
    return np.minimum(total, COST_INVALID).astype(np.uint16)


def median3x3(disp: np.ndarray) -> np.ndarray:
    """Invalid-aware 3x3 median filter for disparity maps.

    The median is taken over the valid (>= 0) entries of the truncated
    3x3 window; an even count averages the two middle values.  Pixels that
    are invalid on input stay invalid and never spread.
    """
    h, w = disp.shape
    padded = np.full((h + 2, w + 2), np.inf, dtype=np.float32)
    padded[1:-1, 1:-1] = np.where(disp >= 0, disp, np.float32(np.inf))
    stack = np.empty((h, w, 9), dtype=np.float32)
    k = 0
    for dy in range(3):
        for dx in range(3):
            stack[:, :, k] = padded[dy : dy + h, dx : dx + w]
            k += 1
    stack.sort(axis=2)
    count = np.isfinite(stack).sum(axis=2)
    mid = count // 2
    hi = np.take_along_axis(stack, mid[:, :, None], axis=2)[:, :, 0]
    lo_idx = np.maximum(mid - 1, 0)
    lo = np.take_along_axis(stack, lo_idx[:, :, None], axis=2)[:, :, 0]
    even = (count % 2 == 0) & (count > 0)
    med = np.where(even, (lo + hi) * np.float32(0.5), hi)
    out = np.where(disp >= 0, med, disp.astype(np.float32))
    return out.astype(np.float32)


def gauss_seidel(
    u0: np.ndarray,
    data: np.ndarray,
    conf: np.ndarray,
    w_right: np.ndarray,
    w_down: np.ndarray,
    lam: float,
    sweeps: int,
) -> np.ndarray:
    """Fixed-count Gauss-Seidel sweeps of the weighted least-squares system.

    Minimizes  sum_p conf_p (u_p - data_p)^2
             + lam * sum_{p~q} w_pq (u_p - u_q)^2
    over the 4-neighbor grid, where w_right[y, x] couples (y, x)-(y, x+1)
    (last column 0) and w_down[y, x] couples (y, x)-(y+1, x) (last row 0).

    The update order is row-major forward; this implementation runs the
    equivalent anti-diagonal wavefront so each diagonal is one vector
    operation.  Pixels with a zero diagonal (conf 0 and no coupling) are
    left at their initial value.  All arrays are float64.
    """
    h, w = u0.shape
    pad = np.zeros((h + 2, w + 2), dtype=np.float64)
    pad[1:-1, 1:-1] = u0
    wr = w_right
    wd = w_down
    wl = np.zeros_like(wr)
    wl[:, 1:] = wr[:, :-1]
    wu = np.zeros_like(wd)
    wu[1:, :] = wd[:-1, :]

    # Per-pixel denominator, computed once: conf + lam*(((wl+wr)+wu)+wd).
    den_w = wl + wr
    den_w = den_w + wu
    den_w = den_w + wd
    den = conf + lam * den_w

    diagonals = []
    for k in range(h + w - 1):
        ys = np.arange(max(0, k - w + 1), min(h - 1, k) + 1)
        xs = k - ys
        keep = den[ys, xs] > 0
        ys, xs = ys[keep], xs[keep]
        if ys.size == 0:
            continue
        diagonals.append(
            (
                ys,
                xs,
                wl[ys, xs],
                wr[ys, xs],
                wu[ys, xs],
                wd[ys, xs],
                conf[ys, xs] * data[ys, xs],
                den[ys, xs],
            )
        )

    for _ in range(sweeps):
        for ys, xs, dwl, dwr, dwu, dwd, cf, dden in diagonals:
            num = dwl * pad[ys + 1, xs]
            num += dwr * pad[ys + 1, xs + 2]
            num += dwu * pad[ys, xs + 1]
            num += dwd * pad[ys + 2, xs + 1]
            val = cf + lam * num
            pad[ys + 1, xs + 1] = val / dden
    return pad[1:-1, 1:-1].copy()
