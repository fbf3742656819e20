"""Half-occlusion geometry for the two-layer model.

A disparity jump of J pixels along an epipolar line hides a band of
background exactly J pixels wide from one of the two cameras.  The model
hard-codes this with a ray cast in x-d space: from every pixel, start at the
foreground surface height and march at unit slope toward decreasing
disparity, in the x direction given by the sign of d(phi)/dx (up the
boundary field, toward the figure).  If the ray crosses the background
surface at x*, the signed offset is x - x*, whose magnitude equals the local
occlusion width.

The boundary field is then probed at the crossing point x* = x - offset:
for a background pixel inside an occluded band the crossing lands within the
figure, so `occluded_mask` flags pixels with phi < 0 whose probe is
nonnegative.  Probing at x + offset instead (the opposite side) never lands
in the figure and marks nothing; the synthetic width-law tests pin the
working side, and the descent update uses the same x - offset sample.

`gt_occlusion_from_disparity` is the matching ground-truth oracle: a
z-buffer visibility test with full-disparity projections x +/- d, under
which the hidden band next to a jump J is J pixels wide, consistent with
the ray geometry above.
"""

import numpy as np

from .fields import central_gradient
from .shapes import eval_shape, pixel_to_normalized

RAY_STEP = 0.25


def ray_cast_offsets(fg_coeffs, bg_coeffs, phi, d_max, step=RAY_STEP):
    """Signed occlusion offsets from the x-d ray cast, one per pixel.

    For each pixel, march x' = x + s*sgn with sgn = sign(d(phi)/dx) while
    the ray height fg(x,y) - s stays above the background surface bg(x', y)
    (both shapes evaluated clamped to [0, d_max]).  The first crossing,
    located by linear interpolation between march samples, gives
    offset = x - x'.  Pixels whose ray leaves the grid, starts at or below
    the background surface, or has sgn == 0 get offset 0.
    """
    phi = np.asarray(phi, dtype=float)
    h, w = phi.shape
    gx, _ = central_gradient(phi)
    sgn = np.sign(gx)

    offsets = np.zeros((h, w))
    active = sgn != 0
    if not active.any():
        return offsets

    ys, xs = np.nonzero(active)
    x0 = xs.astype(float)
    direction = sgn[ys, xs]
    xn0, yn = pixel_to_normalized(x0, ys.astype(float), w, h)
    fg0 = eval_shape(fg_coeffs, xn0, yn, d_max)

    # Background shape along the ray, parametrized by arc length s:
    # bg(x0 + s*dir, y) with x normalized per-axis.  Precompute the quadratic
    # in xn with y folded in: bg = (a*xn + b)*xn + c.
    bg_coeffs = np.asarray(bg_coeffs, dtype=float)
    qa = np.full(x0.shape, bg_coeffs[0])
    qb = bg_coeffs[1] * yn + bg_coeffs[3]
    qc = (bg_coeffs[2] * yn + bg_coeffs[4]) * yn + bg_coeffs[5]
    x_scale = 2.0 / (w - 1) if w > 1 else 0.0

    def bg_at(x_px):
        xn = x_px * x_scale - 1.0
        return np.clip((qa * xn + qb) * xn + qc, 0.0, d_max)

    g_prev = fg0 - bg_at(x0)
    alive = g_prev > 0  # strict: rays starting at or under the surface never cross
    result_s = np.full(x0.shape, np.nan)

    max_s = float(d_max) + step
    s = step
    while alive.any() and s <= max_s:
        x_cur = x0 + s * direction
        alive = alive & (x_cur >= 0.0) & (x_cur <= w - 1.0)
        g_cur = fg0 - s - bg_at(x_cur)
        crossed = alive & (g_cur <= 0.0)
        if crossed.any():
            gp = g_prev[crossed]
            gc = g_cur[crossed]
            frac = gp / np.maximum(gp - gc, 1e-30)
            result_s[crossed] = (s - step) + step * frac
        alive = alive & ~crossed
        # rays below d = 0 can no longer cross a clamped background surface
        alive = alive & (fg0 - s >= 0.0)
        g_prev = g_cur
        s += step

    hit = np.isfinite(result_s)
    offsets[ys[hit], xs[hit]] = -result_s[hit] * direction[hit]
    return offsets


def shifted_levelset_sample(phi, shift):
    """Sample phi at (x + shift, y) with linear interpolation, clamped."""
    phi = np.asarray(phi, dtype=float)
    h, w = phi.shape
    xq = np.clip(np.arange(w, dtype=float)[None, :] + shift, 0.0, w - 1.0)
    x0 = np.floor(xq).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    f = xq - x0
    rows = np.arange(h)[:, None]
    return (1.0 - f) * phi[rows, x0] + f * phi[rows, x1]


def crossing_probe(phi, offsets):
    """phi_plus: the boundary field sampled at the ray crossing x - offset."""
    return shifted_levelset_sample(phi, -np.asarray(offsets))


def occluded_mask(phi, phi_plus):
    """Background pixels whose ray crossing lands inside the figure."""
    return (np.asarray(phi) < 0) & (np.asarray(phi_plus) >= 0)


def gt_occlusion_from_disparity(d_gt, margin=0.5):
    """Z-buffer half-occlusion labels from a dense ground-truth disparity map.

    Every pixel projects to column x + d in the left view and x - d in the
    right view (rounded).  A pixel is occluded when some pixel on the same
    row with disparity larger by more than `margin` claims the same target
    column in either view.  Non-finite disparities (holes) neither claim
    columns nor get labeled.
    """
    d = np.asarray(d_gt, dtype=float)
    h, w = d.shape
    finite = np.isfinite(d)
    d_safe = np.where(finite, d, 0.0)
    xs = np.arange(w, dtype=float)[None, :]
    occ = np.zeros((h, w), dtype=bool)
    pad = int(np.ceil(np.nanmax(np.abs(d_safe)))) + 1 if finite.any() else 1
    span = w + 2 * pad
    for sign in (+1.0, -1.0):
        target = np.rint(xs + sign * d_safe).astype(int) + pad
        target = np.clip(target, 0, span - 1)
        flat = target + span * np.arange(h)[:, None]
        best = np.full(h * span, -np.inf)
        np.maximum.at(best, flat[finite], d_safe[finite])
        occ |= finite & (best[flat] > d_safe + margin)
    return occ
