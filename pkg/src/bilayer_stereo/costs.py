"""Matching and boundary cost volumes on the cyclopean grid.

The matching cost M(x, y, d) is the absolute intensity difference between the
left image sampled at x + d/2 and the right image at x - d/2, for integer
d in {0..d_max}.  Two boundary volumes supply edge evidence: B_occ is the
inverse magnitude of a derivative-of-Gaussian response of M along x (large
where matching evidence is flat, small across disparity discontinuities), and
B_mono is the inverse of the summed Sobel responses at the two image
projections.  Both are clamped to (0, B_CAP].

Intensities are expected in [0, 1]; all cost magnitudes and the default
alpha/mu weights assume that scale.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .shapes import shape_map

# Inverse-cost regularizer and ceiling; they bound the geodesic weight on
# textureless input.
EPS_B = 1e-2
B_CAP = 100.0
# Scale (px) of the derivative-of-Gaussian used for B_occ.  The kernel is
# normalized to unit L1 mass, so a unit step in M along x responds with 1/2
# at the step column; B_occ values scale inversely with that choice.
SIGMA_G = 1.5


@dataclass(frozen=True)
class StereoPair:
    """Rectified pair with intensities in [0, 1] and a disparity search range."""

    left: np.ndarray
    right: np.ndarray
    d_max: int

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError(f"image shapes differ: {self.left.shape} vs {self.right.shape}")
        if self.left.ndim != 2:
            raise ValueError("images must be 2-D grayscale arrays")
        if self.d_max < 1:
            raise ValueError(f"d_max must be >= 1, got {self.d_max}")

    @property
    def shape(self):
        return self.left.shape


@dataclass
class CostVolume:
    """values[d, y, x] = cost of disparity d at cyclopean pixel (x, y).

    oob[d, y, x] marks samples whose left or right projection fell outside
    the image (the value there uses clamped border intensities).
    """

    values: np.ndarray
    oob: np.ndarray = field(repr=False, default=None)

    @property
    def d_max(self):
        return self.values.shape[0] - 1

    @property
    def shape(self):
        return self.values.shape[1:]


def _sample_row_linear(img, xq):
    """Linear interpolation of each row of img at per-pixel x coords (clamped)."""
    h, w = img.shape
    xq = np.clip(xq, 0.0, w - 1.0)
    x0 = np.floor(xq).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    f = xq - x0
    rows = np.arange(h)[:, None]
    return (1.0 - f) * img[rows, x0] + f * img[rows, x1]


def build_matching_cost(pair: StereoPair) -> CostVolume:
    """Absolute-difference cost volume with cyclopean half-disparity sampling."""
    h, w = pair.shape
    d_range = np.arange(pair.d_max + 1)
    xs = np.arange(w, dtype=float)
    values = np.empty((pair.d_max + 1, h, w))
    oob = np.empty((pair.d_max + 1, h, w), dtype=bool)
    for d in d_range:
        xl = xs + d / 2.0
        xr = xs - d / 2.0
        left = _sample_row_linear(pair.left, np.broadcast_to(xl, (h, w)))
        right = _sample_row_linear(pair.right, np.broadcast_to(xr, (h, w)))
        values[d] = np.abs(left - right)
        oob[d] = np.broadcast_to((xl > w - 1) | (xr < 0), (h, w))
    return CostVolume(values=values, oob=oob)


def _dog_kernel(sigma):
    """Derivative-of-Gaussian taps normalized to unit L1 mass."""
    radius = max(1, int(np.ceil(4.0 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=float)
    k = -t * np.exp(-0.5 * (t / sigma) ** 2)
    return k / np.abs(k).sum()


def build_occ_boundary_cost(m: CostVolume, sigma_g=SIGMA_G) -> CostVolume:
    """Inverse x-derivative-of-Gaussian of the matching cost, per (y, d) slice."""
    if sigma_g <= 0:
        raise ValueError("sigma_g must be positive")
    kernel = _dog_kernel(sigma_g)
    resp = ndimage.correlate1d(m.values, kernel, axis=2, mode="nearest")
    return CostVolume(values=np.minimum(1.0 / (np.abs(resp) + EPS_B), B_CAP))


def build_mono_boundary_cost(pair: StereoPair) -> CostVolume:
    """Inverse summed Sobel magnitude at the left/right projections of (x, y, d)."""
    h, w = pair.shape

    def sobel_mag(img):
        gx = ndimage.sobel(img, axis=1, mode="nearest")
        gy = ndimage.sobel(img, axis=0, mode="nearest")
        return np.abs(gx) + np.abs(gy)

    sl = sobel_mag(pair.left)
    sr = sobel_mag(pair.right)
    xs = np.arange(w, dtype=float)
    values = np.empty((pair.d_max + 1, h, w))
    for d in range(pair.d_max + 1):
        el = _sample_row_linear(sl, np.broadcast_to(xs + d / 2.0, (h, w)))
        er = _sample_row_linear(sr, np.broadcast_to(xs - d / 2.0, (h, w)))
        values[d] = np.minimum(1.0 / (el + er + EPS_B), B_CAP)
    return CostVolume(values=values)


def sample_volume_at_d(volume: CostVolume, d_query):
    """Per-pixel sample of the volume along d (linear interpolation, clamped)."""
    vals = volume.values
    d_max = vals.shape[0] - 1
    dq = np.clip(np.asarray(d_query, dtype=float), 0.0, d_max)
    d0 = np.floor(dq).astype(int)
    d1 = np.minimum(d0 + 1, d_max)
    f = dq - d0
    h, w = dq.shape
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    return (1.0 - f) * vals[d0, rows, cols] + f * vals[d1, rows, cols]


def sample_volume_shifted(volume: CostVolume, x_query, d_query):
    """Sample at real-valued (x, d) per pixel: linear in x and in d, clamped."""
    vals = volume.values
    d_max = vals.shape[0] - 1
    h, w = x_query.shape
    xq = np.clip(np.asarray(x_query, dtype=float), 0.0, w - 1.0)
    dq = np.clip(np.asarray(d_query, dtype=float), 0.0, d_max)
    x0 = np.floor(xq).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    fx = xq - x0
    d0 = np.floor(dq).astype(int)
    d1 = np.minimum(d0 + 1, d_max)
    fd = dq - d0
    rows = np.arange(h)[:, None]
    v00 = vals[d0, rows, x0]
    v01 = vals[d0, rows, x1]
    v10 = vals[d1, rows, x0]
    v11 = vals[d1, rows, x1]
    return ((1 - fd) * ((1 - fx) * v00 + fx * v01)
            + fd * ((1 - fx) * v10 + fx * v11))


@dataclass(frozen=True)
class AlphaWeights:
    """Mixing weights for the combined boundary cost."""

    alpha1: float = 0.2
    alpha2: float = 0.8
    alpha3: float = 0.1


def combined_boundary_weight(b_occ: CostVolume, b_mono: CostVolume,
                             fg_coeffs, weights: AlphaWeights, d_max=None):
    """Per-pixel boundary weight: the two volumes sampled along d at the
    foreground shape, mixed as alpha1*B_occ + alpha2*B_mono + alpha3."""
    if b_occ.values.shape != b_mono.values.shape:
        raise ValueError("boundary volumes must share dimensions")
    h, w = b_occ.shape
    if d_max is None:
        d_max = b_occ.d_max
    d_fg = shape_map(fg_coeffs, h, w, d_max)
    return (weights.alpha1 * sample_volume_at_d(b_occ, d_fg)
            + weights.alpha2 * sample_volume_at_d(b_mono, d_fg)
            + weights.alpha3)
