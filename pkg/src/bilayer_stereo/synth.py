"""Synthetic bi-layer scene generation with exact ground truth.

A scene is two disparity surfaces (quadratic in normalized coordinates, like
the solver's shape models) separated by a region mask: the figure surface
inside an ellipse or rectangle, the background everywhere else.  Each layer
carries its own procedural texture anchored to the cyclopean frame; the two
views render by forward-splatting every layer sample to x +/- d/2 with a
z-buffer so nearer (larger-disparity) surfaces win.  Because the background
layer continues behind the figure, neither view has holes.

Ground-truth occlusion labels come from the z-buffer visibility test on the
composed disparity map, and the ground-truth boundary is the inner edge of
the region mask.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .costs import StereoPair
from .occlusion import gt_occlusion_from_disparity
from .shapes import shape_map

# forward-splat sampling density along x (samples per pixel)
SPLAT_OVERSAMPLE = 4

TEXTURE_KINDS = ("noise", "stripes", "checker")


class IllPosed(ValueError):
    """Figure disparity does not exceed background disparity by the margin."""


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one synthetic scene.

    region is ("ellipse", cx, cy, rx, ry) or ("rect", x0, y0, x1, y1) with
    half-open pixel bounds.  fg/bg disparity surfaces use the 6-coefficient
    quadratic basis over normalized coordinates.  noise_level adds i.i.d.
    Gaussian intensity noise of that standard deviation to both views.
    """

    width: int
    height: int
    region: tuple
    fg_coeffs: tuple
    bg_coeffs: tuple
    d_max: int
    seed: int = 0
    texture: str = "noise"
    noise_level: float = 0.0
    min_separation: float = 2.0

    def __post_init__(self):
        if self.texture not in TEXTURE_KINDS:
            raise ValueError(f"texture must be one of {TEXTURE_KINDS}")
        if not (0.0 <= self.noise_level <= 1.0):
            raise ValueError("noise_level must be in [0, 1]")


def region_mask(spec: SceneSpec):
    ys, xs = np.mgrid[0:spec.height, 0:spec.width].astype(float)
    kind = spec.region[0]
    if kind == "ellipse":
        _, cx, cy, rx, ry = spec.region
        return ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    if kind == "rect":
        _, x0, y0, x1, y1 = spec.region
        return (xs >= x0) & (xs < x1) & (ys >= y0) & (ys < y1)
    raise ValueError(f"unknown region kind {kind!r}")


def _value_noise(rng, height, width_cells, cell=4):
    """Smooth value noise: random lattice values, bilinear in x, per-row in y."""
    ny = height // cell + 2
    nx = width_cells // cell + 2
    lattice = rng.random((ny, nx))
    ys = np.arange(height) / cell
    xs = np.arange(width_cells) / cell
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    v00 = lattice[np.ix_(y0, x0)]
    v01 = lattice[np.ix_(y0, x0 + 1)]
    v10 = lattice[np.ix_(y0 + 1, x0)]
    v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
    return ((1 - fy) * ((1 - fx) * v00 + fx * v01)
            + fy * ((1 - fx) * v10 + fx * v11))


def _texture_table(spec: SceneSpec, rng, margin):
    """Layer texture sampled on an oversampled x lattice, full height.

    Returns (table, x_offset_samples): table[y, i] is the intensity at
    cyclopean x = (i / SPLAT_OVERSAMPLE) - margin.
    """
    n = (spec.width + 2 * margin) * SPLAT_OVERSAMPLE
    xs = np.arange(n) / SPLAT_OVERSAMPLE - margin
    if spec.texture == "noise":
        # cell size 4 px: tolerant of sub-pixel sampling error, fully
        # decorrelated beyond one cell; stretched to full contrast
        coarse = _value_noise(rng, spec.height, n // SPLAT_OVERSAMPLE + 2)
        idx = np.minimum((xs + margin).astype(int), coarse.shape[1] - 1)
        tex = coarse[:, idx]
        lo, hi = np.percentile(tex, [1.0, 99.0])
        tex = (tex - lo) / max(hi - lo, 1e-9)
    elif spec.texture == "stripes":
        period = 8.0
        row = 0.5 + 0.45 * np.sin(2 * np.pi * xs / period + rng.uniform(0, 2 * np.pi))
        tex = np.tile(row, (spec.height, 1))
    else:  # checker
        cell = 6
        ys = np.arange(spec.height)[:, None]
        parity = (np.floor(xs[None, :] / cell) + np.floor(ys / cell)) % 2
        tex = np.where(parity > 0, 0.85, 0.2) + rng.uniform(-0.03, 0.03, (spec.height, n))
    return np.clip(tex, 0.0, 1.0)


def _splat_view(mask_fine, d_fg_fine, d_bg_fine, tex_fg, tex_bg, xs_fine,
                width, view_sign):
    """Render one view by z-buffered forward splat of both layers."""
    height = d_fg_fine.shape[0]
    img = np.zeros((height, width))
    rows = np.repeat(np.arange(height), xs_fine.size)

    def splat(depth, tex, sel):
        u = np.rint(xs_fine[None, :] + view_sign * depth / 2.0).astype(int)
        ok = sel & (u >= 0) & (u < width)
        flat = rows.reshape(height, -1)[ok] * width + u[ok]
        np.maximum.at(zbuf, flat, depth[ok])
        return flat, depth[ok], tex[ok]

    zbuf = np.full(height * width, -np.inf)
    bg_flat, bg_depth, bg_tex = splat(d_bg_fine, tex_bg, np.ones_like(mask_fine))
    fg_flat, fg_depth, fg_tex = splat(d_fg_fine, tex_fg, mask_fine)

    num = np.zeros(height * width)
    den = np.zeros(height * width)
    for flat, depth, tex in ((bg_flat, bg_depth, bg_tex), (fg_flat, fg_depth, fg_tex)):
        win = depth >= zbuf[flat] - 0.5
        np.add.at(num, flat[win], tex[win])
        np.add.at(den, flat[win], 1.0)
    filled = den > 0
    img.ravel()[filled] = num[filled] / den[filled]
    if not filled.all():
        # edge columns with no sample: extend from the nearest filled pixel
        img2 = img.reshape(height, width)
        mask2 = filled.reshape(height, width)
        idx = np.where(mask2, np.arange(width)[None, :], -1)
        np.maximum.accumulate(idx, axis=1, out=idx)
        first = np.argmax(mask2, axis=1)
        idx[idx < 0] = 0
        img2[:] = img2[np.arange(height)[:, None], np.maximum(idx, first[:, None])]
    return img


def generate_scene(spec: SceneSpec, check_separation=True):
    """Build (StereoPair, gt disparity, gt occlusion, gt boundary) for a spec.

    Raises IllPosed when the figure does not stand in front of the
    background by at least min_separation everywhere on its region (set
    check_separation=False to bypass for degenerate test scenes).
    """
    h, w = spec.height, spec.width
    mask = region_mask(spec)
    d_fg = shape_map(np.asarray(spec.fg_coeffs, dtype=float), h, w)
    d_bg = shape_map(np.asarray(spec.bg_coeffs, dtype=float), h, w)
    if check_separation and mask.any():
        gap = (d_fg - d_bg)[mask].min()
        if gap < spec.min_separation:
            raise IllPosed(
                f"figure/background separation {gap:.3f} px is below "
                f"{spec.min_separation} px on the figure region")
    if min(d_fg.min(), d_bg.min()) < 0 or max(d_fg.max(), d_bg.max()) > spec.d_max:
        raise IllPosed("disparity surfaces must lie within [0, d_max]")

    d_gt = np.where(mask, d_fg, d_bg)

    rng = np.random.default_rng(spec.seed)
    margin = spec.d_max + 2
    tex_fg = _texture_table(spec, rng, margin)
    tex_bg = _texture_table(spec, rng, margin)

    n_fine = (w + 2 * margin) * SPLAT_OVERSAMPLE
    xs_fine = np.arange(n_fine) / SPLAT_OVERSAMPLE - margin
    xi = np.clip(np.rint(xs_fine).astype(int), 0, w - 1)
    cols_in = (xs_fine >= 0) & (xs_fine <= w - 1)
    mask_fine = np.where(cols_in[None, :], mask[:, xi], False)
    d_fg_fine = d_fg[:, xi]
    d_bg_fine = d_bg[:, xi]

    left = _splat_view(mask_fine, d_fg_fine, d_bg_fine, tex_fg, tex_bg,
                       xs_fine, w, +1.0)
    right = _splat_view(mask_fine, d_fg_fine, d_bg_fine, tex_fg, tex_bg,
                        xs_fine, w, -1.0)
    if spec.noise_level > 0:
        left = left + spec.noise_level * rng.standard_normal((h, w))
        right = right + spec.noise_level * rng.standard_normal((h, w))
    left = np.clip(left, 0.0, 1.0)
    right = np.clip(right, 0.0, 1.0)

    occ = gt_occlusion_from_disparity(d_gt)
    boundary = mask & ~ndimage.binary_erosion(mask)
    pair = StereoPair(left=left, right=right, d_max=spec.d_max)
    return pair, d_gt, occ, boundary
