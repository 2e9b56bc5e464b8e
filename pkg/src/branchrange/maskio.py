"""Segmentation mask loading and boundary sampling.

Masks arrive either as PNG bitmasks (single-channel 8-bit, any nonzero
pixel is branch) or as polygon JSON::

    {"width": W, "height": H, "polygons": [[[x, y], ...], ...]}

Polygons are rasterized scanline-by-scanline with the even-odd rule: a
pixel row y is filled between successive edge crossings, edges counted
half-open in y (min(y0,y1) <= y < max(y0,y1)), fill inclusive in x
(ceil(xa) .. floor(xb)).  This lands within one pixel of the equivalent
bitmap boundary.

:func:`sample_contour` walks the outer boundary of the largest
8-connected component with Moore neighbor tracing (clockwise in image
coordinates, y down) starting from the topmost-then-leftmost boundary
pixel, stopping when the start pixel is re-entered from the original
direction, and keeps every stride-th point.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.ndimage
from PIL import Image

from .errors import DegenerateMask, EmptyMask, ParseError

PNG_BITMASK = "png_bitmask"
POLYGON_JSON = "polygon_json"

# Target boundary sample count: stride = ceil(boundary_length / 90) keeps
# typical sample sets in the 30..120 range.
_TARGET_SAMPLES = 90

# Moore neighborhood in clockwise order (image coordinates, y down),
# starting from the west neighbor.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))


@dataclass
class SegMask:
    """Binary branch mask.

    :param bitmap: (H, W) bool array, True on branch pixels
    :param polygons: source polygons when loaded from JSON, else None
    """

    bitmap: np.ndarray
    polygons: list | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.bitmap.shape

    def count(self) -> int:
        return int(self.bitmap.sum())


def _rasterize_polygons(polygons: list, width: int, height: int) -> np.ndarray:
    edges = []
    for poly in polygons:
        if len(poly) < 3:
            raise ParseError(f"polygon needs >= 3 vertices, got {len(poly)}")
        pts = [(float(x), float(y)) for x, y in poly]
        edges.extend(zip(pts, pts[1:] + pts[:1]))
    bitmap = np.zeros((height, width), dtype=bool)
    for y in range(height):
        xs = []
        for (x0, y0), (x1, y1) in edges:
            if y0 == y1:
                continue
            if min(y0, y1) <= y < max(y0, y1):
                xs.append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        xs.sort()
        for xa, xb in zip(xs[::2], xs[1::2]):
            lo = max(0, math.ceil(xa))
            hi = min(width - 1, math.floor(xb))
            if lo <= hi:
                bitmap[y, lo : hi + 1] = True
    return bitmap


def load_mask(path: str, fmt: str | None = None) -> SegMask:
    """Load a segmentation mask from a PNG bitmask or polygon JSON file.

    ``fmt`` defaults to the file extension (.png / .json).  Raises
    :class:`ParseError` on malformed input and :class:`EmptyMask` when no
    branch pixel survives.
    """
    if fmt is None:
        ext = os.path.splitext(path)[1].lower()
        if ext == ".png":
            fmt = PNG_BITMASK
        elif ext == ".json":
            fmt = POLYGON_JSON
        else:
            raise ParseError(f"cannot infer mask format from {path!r}")
    if fmt == PNG_BITMASK:
        try:
            img = Image.open(path).convert("L")
        except (OSError, ValueError) as exc:
            raise ParseError(f"cannot read PNG mask {path!r}: {exc}") from exc
        bitmap = np.asarray(img, dtype=np.uint8) > 0
        polygons = None
    elif fmt == POLYGON_JSON:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read polygon JSON {path!r}: {exc}") from exc
        try:
            width = int(doc["width"])
            height = int(doc["height"])
            polygons = doc["polygons"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"polygon JSON {path!r} missing width/height/polygons") from exc
        if width <= 0 or height <= 0:
            raise ParseError(f"polygon JSON {path!r} has non-positive size")
        bitmap = _rasterize_polygons(polygons, width, height)
    else:
        raise ParseError(f"unknown mask format {fmt!r}")
    if not bitmap.any():
        raise EmptyMask(f"mask {path!r} has no branch pixels")
    return SegMask(bitmap=bitmap, polygons=polygons)


def largest_component(bitmap: np.ndarray) -> np.ndarray:
    """Largest 8-connected True component (ties: first in scan order)."""
    structure = np.ones((3, 3), dtype=int)
    labels, n = scipy.ndimage.label(bitmap, structure=structure)
    if n == 0:
        raise EmptyMask("mask has no branch pixels")
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def trace_boundary(bitmap: np.ndarray) -> np.ndarray:
    """Moore-neighbor boundary trace of the largest component.

    Returns the closed boundary walk as an (N, 2) float64 array of (x, y)
    pixel coordinates, clockwise, starting at the topmost-then-leftmost
    boundary pixel.  Thin structures revisit pixels, which is the correct
    closed-walk behavior.  Raises :class:`DegenerateMask` when the walk
    has fewer than 3 points.
    """
    comp = largest_component(bitmap)
    h, w = comp.shape
    ys, xs = np.nonzero(comp)
    # Topmost, then leftmost pixel of the component is on its boundary.
    top = ys.min()
    row_xs = xs[ys == top]
    sx, sy = int(row_xs.min()), int(top)

    def inside(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and comp[y, x]

    # Enter the start pixel from the west, as the initial backtrack.
    points = [(sx, sy)]
    cur = (sx, sy)
    backtrack = (sx - 1, sy)
    # The walk is a deterministic map (cur, backtrack) -> (next,
    # backtrack'); it closes the first time the state reached by the
    # opening step recurs, which covers the boundary cycle exactly once
    # (including the pixel revisits a one-pixel-thick arm requires).
    first_state = None
    max_steps = 8 * (int(comp.sum()) + 4)
    steps = 0
    while True:
        cx, cy = cur
        bx, by = backtrack
        # Index of the backtrack position in the clockwise neighbor ring.
        k0 = _MOORE.index((bx - cx, by - cy))
        nxt = None
        prev = backtrack
        for i in range(1, 9):
            dx, dy = _MOORE[(k0 + i) % 8]
            cand = (cx + dx, cy + dy)
            if inside(*cand):
                nxt = cand
                break
            prev = cand
        if nxt is None:
            # Isolated pixel: the walk is just the start pixel.
            break
        if first_state is None:
            first_state = (nxt, prev)
        elif (nxt, prev) == first_state:
            break
        points.append(nxt)
        cur = nxt
        backtrack = prev
        steps += 1
        if steps > max_steps:
            raise DegenerateMask("boundary trace did not close")
    # Closure re-appends the start just before the state recurs.
    if len(points) > 1 and points[-1] == points[0]:
        points.pop()
    if len(points) < 3:
        raise DegenerateMask(f"boundary has {len(points)} point(s), need >= 3")
    return np.array(points, dtype=np.float64)


def sample_contour(mask: SegMask | np.ndarray, stride: int | None = None) -> np.ndarray:
    """Evenly strided boundary samples of the largest mask component.

    With ``stride=None`` the stride adapts to the boundary length,
    ceil(len / 90), aiming at 30..120 samples.  Returns (N, 2) float64
    (x, y) points; every point is a mask pixel touching the outside (an
    invalid 8-neighbor or the image border).
    """
    bitmap = mask.bitmap if isinstance(mask, SegMask) else np.asarray(mask, dtype=bool)
    if not bitmap.any():
        raise EmptyMask("mask has no branch pixels")
    walk = trace_boundary(bitmap)
    if stride is None:
        stride = max(1, math.ceil(len(walk) / _TARGET_SAMPLES))
    elif stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    pts = walk[::stride]
    if len(pts) < 3:
        raise DegenerateMask(f"contour sampling left {len(pts)} point(s), need >= 3")
    return pts
