"""Boundary-band evaluation: occlusion F1 and bad-pixel disparity error.

All scoring happens inside an epipolar band around the ground-truth
boundary: the band dilates boundary pixels horizontally (rectified epipolar
lines are rows).  Occlusion labels are scored by precision/recall/F1 over
band pixels; disparity by the fraction of band pixels, restricted to the
mutually visible subset, whose error strictly exceeds a threshold.
Non-finite ground-truth disparities are holes and never count.
"""

from dataclasses import dataclass

import numpy as np

BAND_RADIUS = 20
BAD_THRESHOLD = 4.0


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    band_pixels: int
    bad4: float = None
    visible_pixels: int = None
    degenerate: bool = False

    def csv_cells(self):
        bad4 = "" if self.bad4 is None else repr(self.bad4)
        return [repr(self.precision), repr(self.recall), repr(self.f1), bad4]


def boundary_from_disparity(d_gt, min_jump=2.0):
    """Fallback boundary mask: pixels at disparity jumps above min_jump.

    Marks the higher-disparity side of every horizontal or vertical jump,
    approximating the figure edge when no annotated boundary is available.
    """
    d = np.asarray(d_gt, dtype=float)
    safe = np.where(np.isfinite(d), d, 0.0)
    out = np.zeros(d.shape, dtype=bool)
    dx = np.diff(safe, axis=1)
    out[:, :-1] |= dx < -min_jump
    out[:, 1:] |= dx > min_jump
    dy = np.diff(safe, axis=0)
    out[:-1] |= dy < -min_jump
    out[1:] |= dy > min_jump
    return out


def boundary_band(boundary, radius=BAND_RADIUS):
    """Horizontal dilation of the boundary mask by +/- radius pixels."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    boundary = np.asarray(boundary, dtype=bool)
    if radius == 0:
        return boundary.copy()
    h, w = boundary.shape
    out = np.zeros_like(boundary)
    csum = np.zeros((h, w + 1), dtype=int)
    np.cumsum(boundary, axis=1, out=csum[:, 1:])
    lo = np.maximum(np.arange(w) - radius, 0)
    hi = np.minimum(np.arange(w) + radius + 1, w)
    out[:] = (csum[:, hi] - csum[:, lo]) > 0
    return out


def occlusion_f1(pred, gt, band) -> MetricsReport:
    """Precision/recall/F1 of binary occlusion labels over band pixels only."""
    pred = np.asarray(pred, dtype=bool) & band
    gt = np.asarray(gt, dtype=bool) & band
    tp = int((pred & gt).sum())
    fp = int((pred & ~gt).sum())
    fn = int((~pred & gt).sum())
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    # counting form of 2PR/(P+R); algebraically identical, exact in floats
    f1 = 2 * tp / (2 * tp + fp + fn) if precision + recall > 0 else 0.0
    return MetricsReport(precision=precision, recall=recall, f1=f1,
                         band_pixels=int(band.sum()), degenerate=degenerate)


def bad4(pred, gt, band, gt_occ, threshold=BAD_THRESHOLD):
    """Fraction of evaluated pixels with |pred - gt| strictly above threshold.

    Evaluated pixels: in the band, not ground-truth occluded, and with
    finite ground truth.  Returns 0.0 on an empty evaluation set.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    eval_mask = np.asarray(band, dtype=bool) & ~np.asarray(gt_occ, dtype=bool) & np.isfinite(gt)
    n = int(eval_mask.sum())
    if n == 0:
        return 0.0
    err = np.abs(pred[eval_mask] - gt[eval_mask])
    return float((err > threshold).mean())


def evaluate(pred_disp, pred_occ, gt_disp, gt_occ, boundary,
             radius=BAND_RADIUS) -> MetricsReport:
    """Full band-limited report: occlusion F1 plus bad-pixel fraction."""
    band = boundary_band(boundary, radius)
    report = occlusion_f1(pred_occ, gt_occ, band)
    report.bad4 = bad4(pred_disp, gt_disp, band, gt_occ)
    visible = band & ~np.asarray(gt_occ, dtype=bool) & np.isfinite(np.asarray(gt_disp, dtype=float))
    report.visible_pixels = int(visible.sum())
    return report
