"""Synthetic ground-truth stereo scenes: textured billboard cylinders over
a background plane.

A scene is a stack of constant-depth layers in the left camera's view: a
background plane and one or more "cylinders" (branch stand-ins rendered
as billboard bands of half-width ``radius_px`` around a line through
``center_px``).  Every layer carries its own procedural texture, a seeded
multi-octave value noise that can be evaluated at any real coordinate.

Rendering follows rectified stereo geometry exactly.  A layer at depth Z
has constant disparity d = f*B/Z; its region shifts left by d in the
right view, and its texture is sampled at (x + d, y) there, so
right(x - d, y) = left(x, y) holds for non-occluded pixels by
construction (bit-exact when d is integral and the per-view noise is
disabled).  Ground-truth disparity stores the visible layer's d for every
left pixel, occluded or not: ground truth is scene geometry, not
matchability.  Per-view Gaussian pixel noise with ``noise_sigma`` is
added independently to each view afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import CameraRig, depth_map_from_disparity
from .errors import InvalidSceneSpec
from .maskio import SegMask

ORIENT_VERTICAL = "vertical"
ORIENT_HORIZONTAL = "horizontal"
ORIENT_ANGLED = "angled"

# Texture lattice is padded so the right view can sample past the frame.
_PAD = 256.0

# Value-noise octaves: (lattice spacing px, amplitude weight).
_OCTAVES = ((16.0, 0.5), (8.0, 0.3), (4.0, 0.2))


@dataclass
class Cylinder:
    """Billboard branch: a constant-depth band in the left view.

    :param center_px: (x, y) point the band axis passes through
    :param radius_px: band half-width in pixels (>= 1)
    :param depth_m: constant depth of the billboard (> 0)
    :param orientation: "vertical", "horizontal", or "angled"
    :param angle_deg: axis angle for "angled" (0 = horizontal axis,
        counter-clockwise on screen)
    """

    center_px: tuple[float, float]
    radius_px: float
    depth_m: float
    orientation: str = ORIENT_HORIZONTAL
    angle_deg: float = 0.0

    def axis_angle_rad(self) -> float:
        if self.orientation == ORIENT_HORIZONTAL:
            return 0.0
        if self.orientation == ORIENT_VERTICAL:
            return math.pi / 2.0
        if self.orientation == ORIENT_ANGLED:
            return math.radians(self.angle_deg)
        raise InvalidSceneSpec(f"unknown orientation {self.orientation!r}")


@dataclass
class SceneSpec:
    """Complete description of a synthetic scene.

    :param rig: camera rig used for rendering and ground truth
    :param background_depth_m: depth of the textured background plane
    :param cylinders: billboard branches, all strictly nearer than the
        background
    :param texture_seed: seed for all procedural textures and pixel noise
    :param noise_sigma: per-view Gaussian pixel noise sigma (0 disables)
    """

    rig: CameraRig
    background_depth_m: float
    cylinders: list[Cylinder] = field(default_factory=list)
    texture_seed: int = 0
    noise_sigma: float = 0.0


@dataclass
class SceneBundle:
    """Rendered scene: images, ground truth, mask, and the SceneSpec."""

    left: np.ndarray
    right: np.ndarray
    gt_disparity: np.ndarray
    gt_depth: np.ndarray
    mask: SegMask
    spec: SceneSpec


class _ValueNoise:
    """Seeded multi-octave value noise, evaluable at any real coordinate.

    Lattice values are drawn once per octave; evaluation interpolates
    them with the C1 smoothstep blend, so the same coordinate always
    yields the same value regardless of which view asks.
    """

    def __init__(self, seed_seq: np.random.SeedSequence, width: int, height: int):
        rng = np.random.default_rng(seed_seq)
        self._tables = []
        for spacing, weight in _OCTAVES:
            nx = int(math.ceil((width + 2 * _PAD) / spacing)) + 2
            ny = int(math.ceil((height + 2 * _PAD) / spacing)) + 2
            self._tables.append((spacing, weight, rng.random((ny, nx))))

    def intensity(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Texture intensity in [30, 225] at real coordinates (u, v)."""
        total = np.zeros(np.broadcast(u, v).shape, dtype=np.float64)
        for spacing, weight, table in self._tables:
            gu = (u + _PAD) / spacing
            gv = (v + _PAD) / spacing
            iu = np.floor(gu).astype(np.int64)
            iv = np.floor(gv).astype(np.int64)
            fu = gu - iu
            fv = gv - iv
            su = fu * fu * (3.0 - 2.0 * fu)
            sv = fv * fv * (3.0 - 2.0 * fv)
            v00 = table[iv, iu]
            v01 = table[iv, iu + 1]
            v10 = table[iv + 1, iu]
            v11 = table[iv + 1, iu + 1]
            top = v00 + su * (v01 - v00)
            bot = v10 + su * (v11 - v10)
            total += weight * (top + sv * (bot - top))
        return 30.0 + 195.0 * total


def _band_membership(
    cyl: Cylinder, u: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """True where (u, v) lies within the band (evaluable off-frame)."""
    angle = cyl.axis_angle_rad()
    nx = math.sin(angle)
    ny = math.cos(angle)
    cx, cy = cyl.center_px
    dist = np.abs(nx * (u - cx) + ny * (v - cy))
    return dist <= cyl.radius_px


def validate_spec(spec: SceneSpec, d_max: int | None = None) -> None:
    """Raise :class:`InvalidSceneSpec` on geometric inconsistencies."""
    if spec.background_depth_m <= 0:
        raise InvalidSceneSpec(
            f"background depth must be > 0, got {spec.background_depth_m}"
        )
    if spec.noise_sigma < 0:
        raise InvalidSceneSpec(f"noise_sigma must be >= 0, got {spec.noise_sigma}")
    fb = spec.rig.focal_px * spec.rig.baseline_m
    if d_max is not None and fb / spec.background_depth_m > d_max:
        raise InvalidSceneSpec(
            f"background disparity {fb / spec.background_depth_m:.2f} "
            f"exceeds d_max {d_max}"
        )
    for i, cyl in enumerate(spec.cylinders):
        if cyl.depth_m <= 0:
            raise InvalidSceneSpec(f"cylinder {i} depth must be > 0, got {cyl.depth_m}")
        if cyl.depth_m >= spec.background_depth_m:
            raise InvalidSceneSpec(
                f"cylinder {i} at {cyl.depth_m} m is not nearer than the "
                f"background at {spec.background_depth_m} m"
            )
        if cyl.radius_px < 1:
            raise InvalidSceneSpec(f"cylinder {i} radius must be >= 1 px")
        cyl.axis_angle_rad()  # validates the orientation string
        if d_max is not None and fb / cyl.depth_m > d_max:
            raise InvalidSceneSpec(
                f"cylinder {i} disparity {fb / cyl.depth_m:.2f} exceeds d_max {d_max}"
            )


def _layer_stack(spec: SceneSpec):
    """Layers sorted far to near: (disparity, cylinder-or-None, texture)."""
    rig = spec.rig
    fb = rig.focal_px * rig.baseline_m
    root = np.random.SeedSequence([int(spec.texture_seed), 0])
    children = root.spawn(len(spec.cylinders) + 1)
    layers = [
        (fb / spec.background_depth_m, None,
         _ValueNoise(children[0], rig.width_px, rig.height_px))
    ]
    order = sorted(range(len(spec.cylinders)),
                   key=lambda i: -spec.cylinders[i].depth_m)
    for i in order:
        cyl = spec.cylinders[i]
        layers.append(
            (fb / cyl.depth_m, cyl,
             _ValueNoise(children[i + 1], rig.width_px, rig.height_px))
        )
    return layers


def _visible_layer(layers, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Index into ``layers`` of the nearest layer covering each left-view
    coordinate (u, v)."""
    idx = np.zeros(u.shape, dtype=np.int64)
    for li in range(1, len(layers)):
        _, cyl, _ = layers[li]
        inside = _band_membership(cyl, u, v)
        idx[inside] = li  # layers sorted far->near, nearer wins
    return idx


def generate_scene(spec: SceneSpec, d_max: int | None = None) -> SceneBundle:
    """Render a scene bundle (left, right, ground truth, mask).

    Identical spec and seed give a bit-identical bundle.
    """
    validate_spec(spec, d_max)
    rig = spec.rig
    h, w = rig.height_px, rig.width_px
    layers = _layer_stack(spec)
    xs = np.arange(w, dtype=np.float64)[None, :].repeat(h, axis=0)
    ys = np.arange(h, dtype=np.float64)[:, None].repeat(w, axis=1)

    # Left view: visibility in left coordinates.
    vis_left = _visible_layer(layers, xs, ys)
    left = np.zeros((h, w), dtype=np.float64)
    gt_disp = np.zeros((h, w), dtype=np.float32)
    for li, (d, _, tex) in enumerate(layers):
        sel = vis_left == li
        if not sel.any():
            continue
        left[sel] = tex.intensity(xs[sel], ys[sel])
        gt_disp[sel] = np.float32(d)

    # Right view: layer i covers right pixel x where (x + d_i, y) is in
    # its left-view region; nearest such layer wins and its texture is
    # sampled at the shifted coordinate.
    vis_right = np.zeros((h, w), dtype=np.int64)
    for li in range(1, len(layers)):
        d, cyl, _ = layers[li]
        inside = _band_membership(cyl, xs + d, ys)
        vis_right[inside] = li
    right = np.zeros((h, w), dtype=np.float64)
    for li, (d, _, tex) in enumerate(layers):
        sel = vis_right == li
        if not sel.any():
            continue
        right[sel] = tex.intensity(xs[sel] + d, ys[sel])

    # Independent per-view pixel noise, then 8-bit quantization.
    if spec.noise_sigma > 0:
        noise_root = np.random.SeedSequence([int(spec.texture_seed), 1])
        left_rng, right_rng = (np.random.default_rng(s) for s in noise_root.spawn(2))
        left = left + left_rng.normal(0.0, spec.noise_sigma, left.shape)
        right = right + right_rng.normal(0.0, spec.noise_sigma, right.shape)
    left_u8 = np.clip(np.rint(left), 0, 255).astype(np.uint8)
    right_u8 = np.clip(np.rint(right), 0, 255).astype(np.uint8)

    mask = SegMask(bitmap=vis_left > 0)
    gt_depth = depth_map_from_disparity(gt_disp, rig)
    return SceneBundle(
        left=left_u8,
        right=right_u8,
        gt_disparity=gt_disp,
        gt_depth=gt_depth,
        mask=mask,
        spec=spec,
    )


def occlusion_mask(bundle: SceneBundle) -> np.ndarray:
    """True where a left pixel is NOT visible in the right view.

    A left pixel on layer i (disparity d_i) is occluded when its right-view
    position x - d_i either leaves the frame or is covered by a nearer
    layer there.
    """
    spec = bundle.spec
    rig = spec.rig
    h, w = rig.height_px, rig.width_px
    layers = _layer_stack(spec)
    xs = np.arange(w, dtype=np.float64)[None, :].repeat(h, axis=0)
    ys = np.arange(h, dtype=np.float64)[:, None].repeat(w, axis=1)
    vis_left = _visible_layer(layers, xs, ys)
    occluded = np.zeros((h, w), dtype=bool)
    for li, (d, _, _) in enumerate(layers):
        sel = vis_left == li
        if not sel.any():
            continue
        xr = xs[sel] - d
        out_of_frame = (xr < 0) | (xr > w - 1)
        covered = np.zeros(xr.shape, dtype=bool)
        for lj in range(li + 1, len(layers)):
            dj, cylj, _ = layers[lj]
            covered |= _band_membership(cylj, xr + dj, ys[sel])
        occluded[sel] = out_of_frame | covered
    return occluded


def warp_consistency_fraction(
    bundle: SceneBundle, intensity_tol: float = 0.0
) -> float:
    """Fraction of non-occluded pixels with right(x - d, y) = left(x, y).

    Integral disparities compare the right pixel directly; fractional
    disparities compare against linear interpolation along the row, which
    needs a small nonzero tolerance.  Meaningful for bundles rendered
    with noise_sigma = 0 (per-view noise breaks exact equality by design).
    """
    h, w = bundle.left.shape
    checkable = ~occlusion_mask(bundle)
    d = bundle.gt_disparity.astype(np.float64)
    xs = np.arange(w, dtype=np.float64)[None, :]
    xr = xs - d
    checkable &= (xr >= 0) & (xr <= w - 1)
    iy, ix = np.nonzero(checkable)
    if iy.size == 0:
        return 1.0
    xq = xr[iy, ix]
    left_vals = bundle.left[iy, ix].astype(np.float64)
    x0 = np.floor(xq).astype(np.int64)
    frac = xq - x0
    exact = frac < 1e-9
    right_f = bundle.right.astype(np.float64)
    vals = np.empty(xq.shape, dtype=np.float64)
    vals[exact] = right_f[iy[exact], x0[exact]]
    interp = ~exact
    if interp.any():
        x1 = np.minimum(x0[interp] + 1, w - 1)
        r0 = right_f[iy[interp], x0[interp]]
        r1 = right_f[iy[interp], x1]
        vals[interp] = r0 + frac[interp] * (r1 - r0)
    ok = np.abs(vals - left_vals) <= intensity_tol
    return float(ok.mean())


def benchmark_scenes(
    rig: CameraRig,
    seed: int = 0,
    background_depth_m: float = 4.0,
    noise_sigma: float = 1.5,
) -> list[SceneBundle]:
    """The three-distance measurement protocol: one horizontal branch at
    1.0, 1.5, and 2.0 m over a 4.0 m background plane.

    The branch band half-width scales with distance as a ~2 cm physical
    radius, max(4, round(f * 0.02 / Z)) pixels.  Scene i uses texture
    seed ``seed + i`` so the three scenes are independent.
    """
    bundles = []
    for i, depth in enumerate((1.0, 1.5, 2.0)):
        radius = max(4, round(rig.focal_px * 0.02 / depth))
        cyl = Cylinder(
            center_px=(rig.width_px / 2.0, rig.height_px / 2.0),
            radius_px=float(radius),
            depth_m=depth,
            orientation=ORIENT_HORIZONTAL,
        )
        spec = SceneSpec(
            rig=rig,
            background_depth_m=background_depth_m,
            cylinders=[cyl],
            texture_seed=int(seed) + i,
            noise_sigma=noise_sigma,
        )
        bundles.append(generate_scene(spec))
    return bundles
