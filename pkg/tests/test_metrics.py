import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilayer_stereo.metrics import (
    bad4,
    boundary_band,
    boundary_from_disparity,
    evaluate,
    occlusion_f1,
)


class TestBoundaryBand:
    def test_radius_zero_is_boundary(self):
        b = np.zeros((6, 10), dtype=bool)
        b[2, 4] = True
        assert np.array_equal(boundary_band(b, 0), b)

    def test_single_pixel_41_run(self):
        b = np.zeros((3, 100), dtype=bool)
        b[1, 50] = True
        band = boundary_band(b, 20)
        assert band[1].sum() == 41
        assert band[0].sum() == 0  # horizontal dilation only
        assert band[1, 30] and band[1, 70] and not band[1, 29]

    def test_empty_boundary(self):
        assert not boundary_band(np.zeros((4, 8), dtype=bool), 20).any()

    def test_clipped_at_image_edge(self):
        b = np.zeros((2, 10), dtype=bool)
        b[0, 1] = True
        band = boundary_band(b, 5)
        assert band[0, :7].all() and not band[0, 7:].any()

    @given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 200))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_radius(self, r1, r2, seed):
        rng = np.random.default_rng(seed)
        b = rng.random((8, 16)) < 0.1
        lo, hi = sorted((r1, r2))
        inner = boundary_band(b, lo)
        outer = boundary_band(b, hi)
        assert not (inner & ~outer).any()


class TestBoundaryFromDisparity:
    def test_marks_high_side_of_jumps(self):
        d = np.full((6, 40), 4.0)
        d[:, 10:25] = 20.0
        b = boundary_from_disparity(d)
        cols = set(np.nonzero(b)[1].tolist())
        assert cols == {10, 24}

    def test_smooth_map_unmarked(self):
        ys, xs = np.mgrid[0:8, 0:30].astype(float)
        assert not boundary_from_disparity(0.05 * xs).any()

    def test_holes_do_not_trigger(self):
        d = np.full((4, 20), 5.0)
        d[:, 7] = np.nan
        b = boundary_from_disparity(d)
        assert b.sum() <= 2 * 4  # only the hole's flanks may fire


class TestOcclusionF1:
    def _band(self, shape):
        return np.ones(shape, dtype=bool)

    def test_perfect_prediction(self):
        gt = np.zeros((10, 10), dtype=bool)
        gt[3:6, 2:8] = True
        rep = occlusion_f1(gt.copy(), gt, self._band(gt.shape))
        assert rep.f1 == 1.0 and rep.precision == 1.0 and rep.recall == 1.0

    def test_empty_prediction(self):
        gt = np.zeros((10, 10), dtype=bool)
        gt[4] = True
        rep = occlusion_f1(np.zeros_like(gt), gt, self._band(gt.shape))
        assert rep.recall == 0.0 and rep.f1 == 0.0
        assert rep.degenerate  # empty prediction: precision denominator empty

    def test_hand_counted_80_20(self):
        # 100 gt-occluded band pixels; prediction hits 80 plus 20 false alarms
        gt = np.zeros((20, 20), dtype=bool)
        gt.ravel()[:100] = True
        pred = np.zeros_like(gt)
        pred.ravel()[:80] = True
        pred.ravel()[100:120] = True
        rep = occlusion_f1(pred, gt, self._band(gt.shape))
        assert rep.precision == pytest.approx(0.8)
        assert rep.recall == pytest.approx(0.8)
        assert rep.f1 == pytest.approx(0.8)

    def test_band_restriction(self):
        gt = np.zeros((4, 10), dtype=bool)
        pred = np.zeros_like(gt)
        gt[0, 0] = True     # outside band: ignored
        pred[0, 1] = True   # outside band: ignored
        band = np.zeros_like(gt)
        band[2:] = True
        gt[2, 3] = pred[2, 3] = True
        rep = occlusion_f1(pred, gt, band)
        assert rep.f1 == 1.0
        assert rep.band_pixels == int(band.sum())

    def test_swap_symmetry(self):
        rng = np.random.default_rng(0)
        gt = rng.random((12, 12)) < 0.3
        pred = rng.random((12, 12)) < 0.3
        band = rng.random((12, 12)) < 0.8
        a = occlusion_f1(pred, gt, band)
        b = occlusion_f1(gt, pred, band)
        assert a.precision == pytest.approx(b.recall)
        assert a.recall == pytest.approx(b.precision)
        assert a.f1 == pytest.approx(b.f1)


class TestBad4:
    def test_perfect_zero(self):
        gt = np.full((8, 8), 5.0)
        band = np.ones((8, 8), dtype=bool)
        occ = np.zeros((8, 8), dtype=bool)
        assert bad4(gt.copy(), gt, band, occ) == 0.0

    def test_threshold_is_strict(self):
        gt = np.full((8, 8), 5.0)
        band = np.ones((8, 8), dtype=bool)
        occ = np.zeros((8, 8), dtype=bool)
        assert bad4(gt + 4.0, gt, band, occ) == 0.0
        assert bad4(gt + 4.0001, gt, band, occ) == 1.0

    def test_half_corrupted(self):
        gt = np.zeros((10, 10))
        pred = gt.copy()
        pred[:5] = 5.0
        band = np.ones((10, 10), dtype=bool)
        occ = np.zeros((10, 10), dtype=bool)
        assert bad4(pred, gt, band, occ) == pytest.approx(0.5)

    def test_invariant_inside_gt_occlusion(self):
        rng = np.random.default_rng(1)
        gt = rng.uniform(0, 10, (10, 10))
        pred = gt.copy()
        occ = rng.random((10, 10)) < 0.4
        pred[occ] = 99.0
        band = np.ones((10, 10), dtype=bool)
        assert bad4(pred, gt, band, occ) == 0.0

    def test_holes_excluded(self):
        gt = np.full((4, 4), 3.0)
        gt[0, 0] = np.nan
        gt[1, 1] = np.inf
        pred = np.full((4, 4), 30.0)
        band = np.ones((4, 4), dtype=bool)
        occ = np.zeros((4, 4), dtype=bool)
        assert bad4(pred, gt, band, occ) == pytest.approx(1.0)

    def test_empty_evaluation_set(self):
        gt = np.zeros((4, 4))
        assert bad4(gt, gt, np.zeros((4, 4), dtype=bool),
                    np.zeros((4, 4), dtype=bool)) == 0.0


class TestEvaluate:
    def test_full_report(self):
        gt_occ = np.zeros((6, 50), dtype=bool)
        gt_occ[:, 20:24] = True
        boundary = np.zeros((6, 50), dtype=bool)
        boundary[:, 19] = True
        gt_d = np.where(gt_occ, 2.0, 6.0)
        rep = evaluate(gt_d.copy(), gt_occ.copy(), gt_d, gt_occ, boundary, radius=10)
        assert rep.f1 == 1.0
        assert rep.bad4 == 0.0
        assert rep.visible_pixels > 0
        assert rep.band_pixels == 6 * 21
