"""Multi-scale overlapping patch hierarchy with Gaussian disparity messages.

Level 0 is the set of single pixels; level i >= 1 holds square patches of
side base * 2**(i-1) laid out at half-side stride (dense overlap), each the
exact union of disjoint patches from the level below.  Patch cost curves are
aggregated bottom-up (children sum to parents), per-patch messages
(argmin disparity and a spread-derived standard deviation) are extracted per
level, and a per-pixel consensus fuses all valid covering patches by a
product of Gaussians in a downward pass.

Patches whose extent straddles the figure boundary or sits inside an
occluded band carry no usable evidence and are flagged invalid; invalid
patches contribute nothing to the consensus.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Cost-curve spread below which a message carries no information.
FLAT_SPREAD = 1e-9


class GridTooSmall(ValueError):
    """The largest patch in the hierarchy does not fit in the grid."""


@dataclass
class PatchLevel:
    side: int
    stride: int
    xs: np.ndarray
    ys: np.ndarray
    # index pairs into the previous level's origin lists (levels >= 2)
    child_x: np.ndarray = None
    child_y: np.ndarray = None
    # per-pixel covering-origin indices, -1 padded
    cover_x: np.ndarray = field(default=None, repr=False)
    cover_y: np.ndarray = field(default=None, repr=False)

    @property
    def n_patches(self):
        return len(self.ys) * len(self.xs)


@dataclass
class PatchHierarchy:
    height: int
    width: int
    levels: list

    @property
    def n_levels(self):
        return len(self.levels)


@dataclass
class Consensus:
    """Per-pixel Gaussian disparity belief.

    sigma is +inf (and d_bar NaN) where no valid finite-sigma patch covers
    the pixel.
    """

    d_bar: np.ndarray
    sigma: np.ndarray


def _axis_lattice(extent, side, stride):
    if side > extent:
        raise GridTooSmall(f"patch side {side} exceeds grid extent {extent}")
    out = list(range(0, extent - side + 1, stride))
    if out[-1] != extent - side:
        out.append(extent - side)
    return out


def _cover_table(origins, side, extent):
    """For each coordinate, the indices of origins whose patch covers it."""
    origins = np.asarray(origins)
    coords = np.arange(extent)
    lo = np.searchsorted(origins, coords - side, side="right")
    hi = np.searchsorted(origins, coords, side="right")
    kmax = int((hi - lo).max())
    table = np.full((extent, kmax), -1, dtype=int)
    for j in range(kmax):
        idx = lo + j
        ok = idx < hi
        table[ok, j] = idx[ok]
    return table


def build_hierarchy(width, height, n_levels, base=4, overlap_stride_ratio=0.5):
    """Construct the patch hierarchy for a width x height grid.

    Origins per level form a stride lattice plus an end-aligned patch so
    every pixel is covered; origins additionally required so that each
    patch tiles exactly into children are inserted on the level below.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    sides = [1] + [base * 2 ** (i - 1) for i in range(1, n_levels)]
    strides = [max(1, int(round(s * overlap_stride_ratio))) if s > 1 else 1
               for s in sides]
    for s in sides:
        if s > min(width, height):
            raise GridTooSmall(
                f"patch side {s} exceeds grid {width}x{height}; "
                f"reduce n_levels or base")

    xs_per, ys_per = {}, {}
    req_x, req_y = set(), set()
    for i in range(n_levels - 1, 0, -1):
        side, stride = sides[i], strides[i]
        xs = sorted(set(_axis_lattice(width, side, stride)) | req_x)
        ys = sorted(set(_axis_lattice(height, side, stride)) | req_y)
        xs_per[i], ys_per[i] = xs, ys
        if i >= 2:
            half = sides[i - 1]
            req_x = {o for ox in xs for o in (ox, ox + half)}
            req_y = {o for oy in ys for o in (oy, oy + half)}
        else:
            req_x, req_y = set(), set()
    xs_per[0] = list(range(width))
    ys_per[0] = list(range(height))

    levels = []
    for i in range(n_levels):
        xs = np.asarray(xs_per[i], dtype=int)
        ys = np.asarray(ys_per[i], dtype=int)
        level = PatchLevel(side=sides[i], stride=strides[i], xs=xs, ys=ys)
        if i >= 2:
            half = sides[i - 1]
            child_xs = np.asarray(xs_per[i - 1])
            child_ys = np.asarray(ys_per[i - 1])
            level.child_x = np.stack(
                [np.searchsorted(child_xs, xs), np.searchsorted(child_xs, xs + half)], axis=1)
            level.child_y = np.stack(
                [np.searchsorted(child_ys, ys), np.searchsorted(child_ys, ys + half)], axis=1)
        level.cover_x = _cover_table(xs, sides[i], width)
        level.cover_y = _cover_table(ys, sides[i], height)
        levels.append(level)
    return PatchHierarchy(height=height, width=width, levels=levels)


def _window_reduce(a, side, fn):
    """fn over all side x side windows; output indexed by window origin."""
    along_x = fn(sliding_window_view(a, side, axis=1), axis=-1)
    return fn(sliding_window_view(along_x, side, axis=0), axis=-1)


def update_validity(hierarchy, phi, phi_plus):
    """Per-level validity flags from the boundary and its shifted sample.

    A patch is valid when [it contains some figure pixel] XOR [its shifted
    boundary sample dips below zero somewhere]: this excludes patches inside
    occluded bands and patches mixing figure with visible background.
    """
    phi = np.asarray(phi, dtype=float)
    phi_plus = np.asarray(phi_plus, dtype=float)
    out = []
    for level in hierarchy.levels:
        if level.side == 1:
            has_fg = phi > 0
            dips = phi_plus < 0
            a = has_fg
            b = dips
        else:
            a = _window_reduce(phi, level.side, np.max) > 0
            b = _window_reduce(phi_plus, level.side, np.min) < 0
        out.append(a[np.ix_(level.ys, level.xs)] ^ b[np.ix_(level.ys, level.xs)])
    return out


def patch_cost_curves(hierarchy, m_values, d_map=None, beta=0.0):
    """Upward pass of per-patch cost curves.

    Level-0 curves are the per-pixel matching cost plus beta * |d - D(x,y)|;
    each higher level sums the curves of the child patches that tile it
    exactly (level 1 via summed-area box sums over its pixel children).
    Returns one (d_max+1, Ny, Nx) array per level.
    """
    m_values = np.asarray(m_values, dtype=float)
    n_d, h, w = m_values.shape
    if d_map is not None and beta != 0.0:
        d_range = np.arange(n_d, dtype=float)[:, None, None]
        pixel = m_values + beta * np.abs(d_range - np.asarray(d_map, dtype=float)[None])
    else:
        pixel = m_values.copy()

    curves = [pixel]
    if hierarchy.n_levels == 1:
        return curves

    sat = np.zeros((n_d, h + 1, w + 1))
    np.cumsum(pixel, axis=1, out=sat[:, 1:, 1:])
    np.cumsum(sat[:, 1:, 1:], axis=2, out=sat[:, 1:, 1:])

    level1 = hierarchy.levels[1]
    b = level1.side
    oy = level1.ys[:, None]
    ox = level1.xs[None, :]
    curves.append(sat[:, oy + b, ox + b] - sat[:, oy, ox + b]
                  - sat[:, oy + b, ox] + sat[:, oy, ox])

    for i in range(2, hierarchy.n_levels):
        level = hierarchy.levels[i]
        prev = curves[i - 1]
        cy, cx = level.child_y, level.child_x
        total = np.zeros((n_d, len(level.ys), len(level.xs)))
        for a in range(2):
            for c in range(2):
                total += prev[:, cy[:, a][:, None], cx[:, c][None, :]]
        curves.append(total)
    return curves


def update_messages(curves, d_max):
    """Per-level (d_p, sigma_p) from cost curves.

    d_p is the argmin over d (smallest-d tie-break); sigma_p is
    d_max / (mean - min) of the curve, +inf for flat curves.
    """
    d_list, sigma_list = [], []
    for c in curves:
        d_p = np.argmin(c, axis=0).astype(float)
        spread = c.mean(axis=0) - c.min(axis=0)
        with np.errstate(divide="ignore"):
            sigma = np.where(spread < FLAT_SPREAD, np.inf, d_max / spread)
        d_list.append(d_p)
        sigma_list.append(sigma)
    return d_list, sigma_list


def message_curve(curve, d_p, sigma_p, d):
    """Gaussian rendering of a patch message against its cost-curve range."""
    curve = np.asarray(curve, dtype=float)
    top = curve.max()
    bottom = curve.min()
    d = np.asarray(d, dtype=float)
    return top - (top - bottom) * np.exp(-0.5 * ((d - d_p) / sigma_p) ** 2)


def update_consensus(hierarchy, valid, d_msgs, sigma_msgs) -> Consensus:
    """Downward pass: product-of-Gaussians fusion over covering valid patches.

    1/sigma^2(x,y) sums the precisions of every valid covering patch;
    d_bar is the precision-weighted mean of their message means.
    """
    h, w = hierarchy.height, hierarchy.width
    precision = np.zeros((h, w))
    weighted = np.zeros((h, w))
    for level, v, d_p, s_p in zip(hierarchy.levels, valid, d_msgs, sigma_msgs):
        with np.errstate(divide="ignore"):
            prec = np.where(v & np.isfinite(s_p), 1.0 / np.square(s_p), 0.0)
        contrib = prec * d_p
        cy, cx = level.cover_y, level.cover_x
        for jy in range(cy.shape[1]):
            iy = cy[:, jy]
            oky = iy >= 0
            for jx in range(cx.shape[1]):
                ix = cx[:, jx]
                okx = ix >= 0
                cell = np.ix_(oky, okx)
                sel = np.ix_(iy[oky], ix[okx])
                precision[cell] += prec[sel]
                weighted[cell] += contrib[sel]
    has_info = precision > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        d_bar = np.where(has_info, weighted / precision, np.nan)
        sigma = np.where(has_info, 1.0 / np.sqrt(precision), np.inf)
    return Consensus(d_bar=d_bar, sigma=sigma)
