# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics are pinned by the numpy twin in pyimpl.py.

Integer kernels are required to match pyimpl bit-exactly; the float
kernels perform the same IEEE operations in the same order (the extension
is built with -ffp-contract=off so nothing gets fused or reassociated).
"""

import numpy as np

COST_INVALID = 65535
COST_MAX_VALID = 65534

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cdef int _COST_INVALID = 65535
cdef int _COST_MAX_VALID = 65534


def census_transform(const unsigned char[:, ::1] img, int radius):
    h = img.shape[0]
    w = img.shape[1]
    out = np.zeros((h, w), dtype=np.uint64)
    cdef unsigned long long[:, ::1] code = out
    cdef Py_ssize_t y, x, ny, nx
    cdef int dy, dx, k
    cdef unsigned char center
    cdef unsigned long long c
    cdef Py_ssize_t hh = h, ww = w
    for y in range(hh):
        for x in range(ww):
            center = img[y, x]
            c = 0
            k = 0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    if dy == 0 and dx == 0:
                        continue
                    ny = y + dy
                    nx = x + dx
                    if 0 <= ny < hh and 0 <= nx < ww:
                        if img[ny, nx] < center:
                            c |= (<unsigned long long>1) << k
                    k += 1
            code[y, x] = c
    return out


def hamming_cost_volume(const unsigned long long[:, ::1] census_left,
                        const unsigned long long[:, ::1] census_right,
                        int d_max):
    h = census_left.shape[0]
    w = census_left.shape[1]
    out = np.full((h, w, d_max + 1), COST_INVALID, dtype=np.uint16)
    cdef unsigned short[:, :, ::1] cost = out
    cdef Py_ssize_t y, x, hh = h, ww = w
    cdef int d
    for y in range(hh):
        for x in range(ww):
            for d in range(d_max + 1):
                if x - d < 0:
                    break
                cost[y, x, d] = <unsigned short>__builtin_popcountll(
                    census_left[y, x] ^ census_right[y, x - d])
    return out


def sad_cost_volume(const unsigned char[:, ::1] left,
                    const unsigned char[:, ::1] right,
                    int d_max, int radius):
    h = left.shape[0]
    w = left.shape[1]
    out = np.full((h, w, d_max + 1), COST_INVALID, dtype=np.uint16)
    cdef unsigned short[:, :, ::1] cost = out
    cdef Py_ssize_t hh = h, ww = w
    cdef Py_ssize_t y, x
    cdef int d, wd, y0, y1, x0, x1
    cdef long long box
    # Integral image over |left[:, d:] - right[:, :w-d]| per disparity level,
    # zero-padded by one row/column, exactly as the numpy twin builds it.
    ii_arr = np.zeros((h + 1, w + 1), dtype=np.int64)
    cdef long long[:, ::1] ii = ii_arr
    for d in range(d_max + 1):
        if d >= ww:
            break
        wd = <int>ww - d
        for y in range(hh):
            for x in range(wd):
                ii[y + 1, x + 1] = (
                    <long long>(left[y, x + d] - right[y, x]
                                if left[y, x + d] >= right[y, x]
                                else right[y, x] - left[y, x + d])
                    + ii[y, x + 1] + ii[y + 1, x] - ii[y, x]
                )
        for y in range(hh):
            y0 = <int>y - radius
            if y0 < 0:
                y0 = 0
            y1 = <int>y + radius
            if y1 > hh - 1:
                y1 = <int>hh - 1
            y1 += 1
            for x in range(wd):
                x0 = x - radius
                if x0 < 0:
                    x0 = 0
                x1 = x + radius
                if x1 > wd - 1:
                    x1 = wd - 1
                x1 += 1
                box = ii[y1, x1] - ii[y0, x1] - ii[y1, x0] + ii[y0, x0]
                if box > _COST_MAX_VALID:
                    box = _COST_MAX_VALID
                cost[y, x + d, d] = <unsigned short>box
    return out


def sgm_aggregate(const unsigned short[:, :, ::1] cost, int p1, int p2, int paths):
    h = cost.shape[0]
    w = cost.shape[1]
    dd = cost.shape[2]
    cdef Py_ssize_t hh = h, ww = w, nd = dd
    total_arr = np.zeros((h, w, dd), dtype=np.int32)
    ell_arr = np.empty((h, w, dd), dtype=np.int32)
    cdef int[:, :, ::1] total = total_arr
    cdef int[:, :, ::1] ell = ell_arr
    cdef int dirs4[4][2]
    cdef int dirs8[8][2]
    dirs4[0][0], dirs4[0][1] = 1, 0
    dirs4[1][0], dirs4[1][1] = -1, 0
    dirs4[2][0], dirs4[2][1] = 0, 1
    dirs4[3][0], dirs4[3][1] = 0, -1
    dirs8[0][0], dirs8[0][1] = 1, 0
    dirs8[1][0], dirs8[1][1] = -1, 0
    dirs8[2][0], dirs8[2][1] = 0, 1
    dirs8[3][0], dirs8[3][1] = 0, -1
    dirs8[4][0], dirs8[4][1] = 1, 1
    dirs8[5][0], dirs8[5][1] = -1, -1
    dirs8[6][0], dirs8[6][1] = 1, -1
    dirs8[7][0], dirs8[7][1] = -1, 1
    cdef int ndirs = 4 if paths == 4 else 8
    cdef int idir, dx, dy, d
    cdef Py_ssize_t y, x, py, px
    cdef Py_ssize_t ys, ye, ystep, xs, xe, xstep
    cdef int pmin, m, t, val, s
    for idir in range(ndirs):
        if paths == 4:
            dx = dirs4[idir][0]
            dy = dirs4[idir][1]
        else:
            dx = dirs8[idir][0]
            dy = dirs8[idir][1]
        if dy >= 0:
            ys, ye, ystep = 0, hh, 1
        else:
            ys, ye, ystep = hh - 1, -1, -1
        if dx >= 0:
            xs, xe, xstep = 0, ww, 1
        else:
            xs, xe, xstep = ww - 1, -1, -1
        y = ys
        while y != ye:
            x = xs
            while x != xe:
                py = y - dy
                px = x - dx
                if px < 0 or px >= ww or py < 0 or py >= hh:
                    for d in range(nd):
                        ell[y, x, d] = cost[y, x, d]
                else:
                    pmin = ell[py, px, 0]
                    for d in range(1, nd):
                        if ell[py, px, d] < pmin:
                            pmin = ell[py, px, d]
                    for d in range(nd):
                        m = ell[py, px, d]
                        if d > 0:
                            t = ell[py, px, d - 1] + p1
                            if t < m:
                                m = t
                        if d < nd - 1:
                            t = ell[py, px, d + 1] + p1
                            if t < m:
                                m = t
                        t = pmin + p2
                        if t < m:
                            m = t
                        val = <int>cost[y, x, d] + m - pmin
                        if val > _COST_INVALID:
                            val = _COST_INVALID
                        ell[y, x, d] = val
                x += xstep
            y += ystep
        for y in range(hh):
            for x in range(ww):
                for d in range(nd):
                    total[y, x, d] += ell[y, x, d]
    out = np.empty((h, w, dd), dtype=np.uint16)
    cdef unsigned short[:, :, ::1] ov = out
    for y in range(hh):
        for x in range(ww):
            for d in range(nd):
                s = total[y, x, d]
                if s > _COST_INVALID:
                    s = _COST_INVALID
                ov[y, x, d] = <unsigned short>s
    return out


def median3x3(const float[:, ::1] disp):
    h = disp.shape[0]
    w = disp.shape[1]
    out = np.empty((h, w), dtype=np.float32)
    cdef float[:, ::1] ov = out
    cdef Py_ssize_t hh = h, ww = w
    cdef Py_ssize_t y, x, ny, nx
    cdef int dy, dx, n, i, j
    cdef float vals[9]
    cdef float v
    for y in range(hh):
        for x in range(ww):
            if disp[y, x] < 0:
                ov[y, x] = disp[y, x]
                continue
            n = 0
            for dy in range(-1, 2):
                for dx in range(-1, 2):
                    ny = y + dy
                    nx = x + dx
                    if 0 <= ny < hh and 0 <= nx < ww:
                        v = disp[ny, nx]
                        if v >= 0:
                            # insertion sort
                            i = n
                            while i > 0 and vals[i - 1] > v:
                                vals[i] = vals[i - 1]
                                i -= 1
                            vals[i] = v
                            n += 1
            j = n >> 1
            if n % 2 == 1:
                ov[y, x] = vals[j]
            else:
                ov[y, x] = (vals[j - 1] + vals[j]) * <float>0.5
    return out


def gauss_seidel(const double[:, ::1] u0,
                 const double[:, ::1] data,
                 const double[:, ::1] conf,
                 const double[:, ::1] w_right,
                 const double[:, ::1] w_down,
                 double lam, int sweeps):
    h = u0.shape[0]
    w = u0.shape[1]
    cdef Py_ssize_t hh = h, ww = w
    pad_arr = np.zeros((h + 2, w + 2), dtype=np.float64)
    pad_arr[1:-1, 1:-1] = np.asarray(u0)
    cdef double[:, ::1] u = pad_arr
    cf_arr = np.empty((h, w), dtype=np.float64)
    den_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] cf = cf_arr
    cdef double[:, ::1] den = den_arr
    cdef Py_ssize_t y, x
    cdef int it
    cdef double wl, wr, wu, wd, num, val, dw
    for y in range(hh):
        for x in range(ww):
            wr = w_right[y, x]
            wd = w_down[y, x]
            wl = w_right[y, x - 1] if x > 0 else 0.0
            wu = w_down[y - 1, x] if y > 0 else 0.0
            dw = wl + wr
            dw = dw + wu
            dw = dw + wd
            den[y, x] = conf[y, x] + lam * dw
            cf[y, x] = conf[y, x] * data[y, x]
    for it in range(sweeps):
        for y in range(hh):
            for x in range(ww):
                if den[y, x] <= 0:
                    continue
                wr = w_right[y, x]
                wd = w_down[y, x]
                wl = w_right[y, x - 1] if x > 0 else 0.0
                wu = w_down[y - 1, x] if y > 0 else 0.0
                num = wl * u[y + 1, x]
                num += wr * u[y + 1, x + 2]
                num += wu * u[y, x + 1]
                num += wd * u[y + 2, x + 1]
                val = cf[y, x] + lam * num
                u[y + 1, x + 1] = val / den[y, x]
    return pad_arr[1:-1, 1:-1].copy()
