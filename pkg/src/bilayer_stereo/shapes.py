"""Global quadratic disparity shapes for the two layers.

A shape is a vector of 6 coefficients over the basis (x^2, x*y, y^2, x, y, 1)
evaluated in coordinates normalized to [-1, 1] per axis.  Raw pixel
coordinates would make the quadratic normal matrix hopelessly ill-conditioned,
so all evaluation and fitting happens in the normalized frame.

Shapes are fit to the per-pixel disparity consensus by weighted least squares
(precision weights 1/sigma^2) on the 6x6 normal equations, with a small ridge
for numerical safety.
"""

import numpy as np

N_COEFFS = 6


class RankDeficient(ValueError):
    """Too few usable pixels, or the normal matrix is numerically singular."""


def zero_shape():
    return np.zeros(N_COEFFS)


def pixel_to_normalized(x, y, width, height):
    """Map pixel coordinates [0, W-1] x [0, H-1] onto [-1, 1]^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xn = 2.0 * x / (width - 1) - 1.0 if width > 1 else np.zeros_like(x)
    yn = 2.0 * y / (height - 1) - 1.0 if height > 1 else np.zeros_like(y)
    return xn, yn


def normalized_grid(height, width):
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    return pixel_to_normalized(xs, ys, width, height)


def basis_matrix(xn, yn):
    """Stack the 6 basis functions at normalized coords; shape (..., 6)."""
    xn = np.asarray(xn, dtype=float)
    yn = np.asarray(yn, dtype=float)
    return np.stack(
        [xn * xn, xn * yn, yn * yn, xn, yn, np.ones_like(xn)], axis=-1)


def eval_shape(coeffs, xn, yn, d_max=None):
    """Evaluate the quadratic at normalized coords; clamp to [0, d_max] if given."""
    coeffs = np.asarray(coeffs, dtype=float)
    xn = np.asarray(xn, dtype=float)
    yn = np.asarray(yn, dtype=float)
    val = ((coeffs[0] * xn + coeffs[1] * yn + coeffs[3]) * xn
           + (coeffs[2] * yn + coeffs[4]) * yn + coeffs[5])
    if d_max is not None:
        val = np.clip(val, 0.0, float(d_max))
    return val


def shape_map(coeffs, height, width, d_max=None):
    """Dense per-pixel evaluation of a shape over the full grid."""
    xn, yn = normalized_grid(height, width)
    return eval_shape(coeffs, xn, yn, d_max)


def fit_shape_wls(d_bar, sigma, mask, ridge=1e-8, cond_limit=1e12):
    """Weighted least-squares fit of a shape to consensus means.

    Minimizes sum over masked pixels of (shape(x,y) - d_bar)^2 / (2*sigma^2).
    Pixels with non-finite d_bar or sigma are dropped.  Weights are
    normalized by their mean before the ridge is added, so uniformly
    rescaling all sigma leaves the fit unchanged.

    Raises RankDeficient when fewer than 6 usable pixels remain or the
    (unridged) normal matrix condition number exceeds cond_limit.
    """
    d_bar = np.asarray(d_bar, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    height, width = d_bar.shape
    usable = mask & np.isfinite(sigma) & (sigma > 0) & np.isfinite(d_bar)
    n = int(usable.sum())
    if n < N_COEFFS:
        raise RankDeficient(f"only {n} usable pixels, need >= {N_COEFFS}")
    ys, xs = np.nonzero(usable)
    xn, yn = pixel_to_normalized(xs, ys, width, height)
    basis = basis_matrix(xn, yn)
    w = 1.0 / np.square(sigma[usable])
    w = w / w.mean()
    ata = basis.T @ (basis * w[:, None])
    atb = basis.T @ (w * d_bar[usable])
    cond = np.linalg.cond(ata)
    if not np.isfinite(cond) or cond > cond_limit:
        raise RankDeficient(f"normal matrix condition number {cond:.3e} exceeds {cond_limit:.1e}")
    return np.linalg.solve(ata + ridge * np.eye(N_COEFFS), atb)


def compose_disparity(phi, fg_coeffs, bg_coeffs, d_max):
    """Final disparity map: foreground shape where phi >= 0, else background.

    Hard selection (phi == 0 counts as foreground); values clamped to
    [0, d_max].
    """
    phi = np.asarray(phi, dtype=float)
    height, width = phi.shape
    fg = shape_map(fg_coeffs, height, width, d_max)
    bg = shape_map(bg_coeffs, height, width, d_max)
    return np.where(phi >= 0, fg, bg)
