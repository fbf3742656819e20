#!/usr/bin/env python3
"""Occlusion-width law study.

For a range of disparity jumps J, plant the converged two-layer
configuration on rectangular figures and measure the occluded run widths
produced by the model's ray cast against the z-buffer ground truth.  Both
should equal J on every scanline.

    python scripts/occlusion_width_study.py
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from bilayer_stereo import occlusion
from bilayer_stereo.fields import reinit_sdf


def run_widths(mask, rows):
    widths = []
    for y in rows:
        c = 0
        for v in mask[y]:
            if v:
                c += 1
            elif c:
                widths.append(c)
                c = 0
        if c:
            widths.append(c)
    return widths


def main():
    h, w, d_max = 96, 192, 32
    ys, xs = np.mgrid[0:h, 0:w].astype(float)
    rect = (xs >= 60) & (xs < 130) & (ys >= 12) & (ys < 84)
    phi = reinit_sdf(np.where(rect, 1.0, -1.0))
    rows = range(12, 84)

    print(f"{'J':>4} {'model widths':>16} {'truth widths':>16} {'agreement':>10}")
    for j in range(2, 22, 2):
        bg_d, fg_d = 3.0, 3.0 + j
        fg = np.array([0, 0, 0, 0, 0, fg_d])
        bg = np.array([0, 0, 0, 0, 0, bg_d])
        offsets = occlusion.ray_cast_offsets(fg, bg, phi, d_max)
        pred = occlusion.occluded_mask(phi, occlusion.crossing_probe(phi, offsets))
        gt = occlusion.gt_occlusion_from_disparity(np.where(rect, fg_d, bg_d))
        wp = run_widths(pred, rows)
        wg = run_widths(gt, rows)
        union = pred | gt
        agree = (pred[union] == gt[union]).mean() if union.any() else 1.0
        fmt = lambda v: f"{min(v)}..{max(v)}" if v else "-"
        print(f"{j:>4} {fmt(wp):>16} {fmt(wg):>16} {agree:>10.3f}")


if __name__ == "__main__":
    main()
