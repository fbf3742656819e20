"""Result rendering: disparity maps with occlusion overlay, contours,
consensus diagnostics."""

import numpy as np
from matplotlib import colormaps
from PIL import Image

# occluded pixels in the disparity rendering (dark blue)
OCCLUSION_RGB = (0, 0, 139)


def disparity_to_rgb(disparity, d_max, occlusion=None):
    """Turbo-mapped disparity image; occluded pixels painted dark blue."""
    d = np.clip(np.asarray(disparity, dtype=float) / max(d_max, 1e-9), 0.0, 1.0)
    rgb = (colormaps["turbo"](d)[..., :3] * 255.0 + 0.5).astype(np.uint8)
    if occlusion is not None:
        rgb[np.asarray(occlusion, dtype=bool)] = OCCLUSION_RGB
    return rgb


def zero_contour_mask(phi):
    """Pixels adjacent to a sign change of phi (4-neighborhood)."""
    inside = np.asarray(phi) >= 0
    edge = np.zeros_like(inside)
    edge[:-1] |= inside[:-1] != inside[1:]
    edge[:, :-1] |= inside[:, :-1] != inside[:, 1:]
    return edge


def overlay_contour(gray, phi, color=(255, 40, 40)):
    """Grayscale image with the zero contour of phi drawn on top."""
    g = np.clip(np.asarray(gray, dtype=float), 0.0, 1.0)
    rgb = np.repeat((g[..., None] * 255.0 + 0.5).astype(np.uint8), 3, axis=-1)
    rgb[zero_contour_mask(phi)] = color
    return rgb


def scalar_to_gray(field, lo=None, hi=None):
    """Normalize a scalar field (ignoring non-finite entries) to uint8."""
    a = np.asarray(field, dtype=float).copy()
    finite = np.isfinite(a)
    if not finite.any():
        return np.zeros(a.shape, dtype=np.uint8)
    lo = np.min(a[finite]) if lo is None else lo
    hi = np.max(a[finite]) if hi is None else hi
    span = max(hi - lo, 1e-12)
    a[~finite] = lo
    return (np.clip((a - lo) / span, 0, 1) * 255.0 + 0.5).astype(np.uint8)


def save_rgb(path, rgb):
    Image.fromarray(rgb).save(path)


def save_gray(path, gray_uint8):
    Image.fromarray(gray_uint8).save(path)
