import numpy as np
import pytest

from bilayer_stereo.costs import (
    B_CAP,
    EPS_B,
    AlphaWeights,
    CostVolume,
    StereoPair,
    build_matching_cost,
    build_mono_boundary_cost,
    build_occ_boundary_cost,
    combined_boundary_weight,
    sample_volume_at_d,
    sample_volume_shifted,
)


def textured_pair(h=20, w=48, d_max=8, seed=0):
    rng = np.random.default_rng(seed)
    left = rng.random((h, w))
    return StereoPair(left=left, right=left.copy(), d_max=d_max)


class TestMatchingCost:
    def test_identical_images_zero_at_d0(self):
        pair = textured_pair()
        m = build_matching_cost(pair)
        assert np.all(m.values[0] == 0)

    def test_constant_images_all_zero(self):
        pair = StereoPair(left=np.full((10, 20), 0.4),
                          right=np.full((10, 20), 0.4), d_max=6)
        m = build_matching_cost(pair)
        assert np.all(m.values == 0)

    def test_shifted_pair_argmin(self):
        # right = left shifted left by 6 px: constant disparity 6
        rng = np.random.default_rng(1)
        base = rng.random((16, 80))
        left = base[:, :-6]
        right = base[:, 6:]
        pair = StereoPair(left=left, right=right, d_max=10)
        m = build_matching_cost(pair)
        am = np.argmin(m.values, axis=0)
        interior = np.zeros_like(am, dtype=bool)
        interior[:, 8:-8] = True
        assert (am[interior] == 6).mean() > 0.95

    def test_left_right_swap_mirror_symmetry(self):
        rng = np.random.default_rng(2)
        left = rng.random((12, 40))
        right = rng.random((12, 40))
        m = build_matching_cost(StereoPair(left=left, right=right, d_max=7)).values
        m_swap = build_matching_cost(
            StereoPair(left=right[:, ::-1], right=left[:, ::-1], d_max=7)).values
        assert np.max(np.abs(m_swap - m[:, :, ::-1])) < 1e-6

    def test_oob_mask_exact(self):
        pair = textured_pair(h=6, w=30, d_max=9)
        m = build_matching_cost(pair)
        xs = np.arange(30, dtype=float)
        for d in range(10):
            expect = (xs + d / 2.0 > 29) | (xs - d / 2.0 < 0)
            assert np.array_equal(m.oob[d], np.tile(expect, (6, 1)))

    def test_values_bounded_by_one(self):
        pair = StereoPair(left=np.zeros((8, 16)), right=np.ones((8, 16)), d_max=4)
        m = build_matching_cost(pair)
        assert m.values.max() <= 1.0
        assert m.values.min() >= 0.0

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValueError):
            StereoPair(left=np.zeros((4, 4)), right=np.zeros((4, 5)), d_max=2)
        with pytest.raises(ValueError):
            StereoPair(left=np.zeros((4, 4)), right=np.zeros((4, 4)), d_max=0)


class TestOccBoundaryCost:
    def test_flat_in_x_is_capped(self):
        vals = np.tile(np.linspace(0, 1, 10)[None, :, None], (3, 1, 24))
        b = build_occ_boundary_cost(CostVolume(values=vals))
        assert np.all(b.values == B_CAP)

    def test_step_gives_minimum_at_step_column(self):
        vals = np.zeros((2, 6, 40))
        vals[:, :, 20:] = 1.0
        b = build_occ_boundary_cost(CostVolume(values=vals))
        # response of the unit-L1 derivative kernel to a unit step peaks with
        # value 1/2 at the step (columns 19 and 20 tie: the edge sits between)
        am = np.argmin(b.values, axis=2)
        assert np.all((am == 19) | (am == 20))
        assert b.values[0, 0, 20] == pytest.approx(1.0 / (0.5 + EPS_B), rel=1e-9)

    def test_linear_in_magnitude_before_clamp(self):
        vals = np.zeros((1, 4, 40))
        vals[:, :, 20:] = 0.8
        b1 = build_occ_boundary_cost(CostVolume(values=vals))
        b2 = build_occ_boundary_cost(CostVolume(values=2 * vals))
        r1 = 1.0 / b1.values[0, 0, 20] - EPS_B
        r2 = 1.0 / b2.values[0, 0, 20] - EPS_B
        assert r2 == pytest.approx(2 * r1, rel=1e-9)
        assert b2.values[0, 0, 20] == pytest.approx(b1.values[0, 0, 20] / 2, rel=0.03)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        b = build_occ_boundary_cost(CostVolume(values=rng.random((4, 8, 16))))
        assert b.values.min() > 0
        assert b.values.max() <= B_CAP


class TestMonoBoundaryCost:
    def test_constant_images_capped(self):
        pair = StereoPair(left=np.full((8, 20), 0.5),
                          right=np.full((8, 20), 0.5), d_max=4)
        b = build_mono_boundary_cost(pair)
        assert np.all(b.values == B_CAP)

    def test_vertical_edge_minimum(self):
        img = np.zeros((10, 40))
        img[:, 20:] = 1.0
        pair = StereoPair(left=img, right=img.copy(), d_max=4)
        b = build_mono_boundary_cost(pair)
        cols = np.argmin(b.values[0], axis=1)
        assert np.all(np.abs(cols - 20) <= 1)

    def test_d0_identical_images_formula(self):
        from scipy import ndimage
        rng = np.random.default_rng(4)
        img = rng.random((10, 24))
        pair = StereoPair(left=img, right=img.copy(), d_max=3)
        b = build_mono_boundary_cost(pair)
        mag = (np.abs(ndimage.sobel(img, axis=1, mode="nearest"))
               + np.abs(ndimage.sobel(img, axis=0, mode="nearest")))
        expect = np.minimum(1.0 / (2 * mag + EPS_B), B_CAP)
        assert np.allclose(b.values[0], expect, atol=1e-12)

    def test_bounds(self):
        pair = textured_pair()
        b = build_mono_boundary_cost(pair)
        assert b.values.min() > 0
        assert b.values.max() <= B_CAP


class TestSampling:
    def test_sample_at_integer_d(self):
        rng = np.random.default_rng(5)
        vals = rng.random((5, 6, 7))
        v = CostVolume(values=vals)
        got = sample_volume_at_d(v, np.full((6, 7), 3.0))
        assert np.array_equal(got, vals[3])

    def test_sample_interpolates_and_clamps(self):
        vals = np.stack([np.zeros((4, 4)), np.ones((4, 4))])
        v = CostVolume(values=vals)
        assert np.allclose(sample_volume_at_d(v, np.full((4, 4), 0.25)), 0.25)
        assert np.allclose(sample_volume_at_d(v, np.full((4, 4), 9.0)), 1.0)
        assert np.allclose(sample_volume_at_d(v, np.full((4, 4), -2.0)), 0.0)

    def test_shifted_sample_matches_direct(self):
        rng = np.random.default_rng(6)
        vals = rng.random((4, 5, 20))
        v = CostVolume(values=vals)
        xq = np.tile(np.arange(20, dtype=float), (5, 1))  # identity shift
        dq = np.full((5, 20), 2.0)
        assert np.allclose(sample_volume_shifted(v, xq, dq), vals[2])

    def test_shifted_sample_bilinear(self):
        vals = np.zeros((2, 3, 10))
        vals[0, :, 5] = 1.0
        v = CostVolume(values=vals)
        xq = np.full((3, 10), 4.5)
        dq = np.zeros((3, 10))
        assert np.allclose(sample_volume_shifted(v, xq, dq), 0.5)


class TestCombinedWeight:
    def _volumes(self, value_occ, value_mono, d_max=6, h=5, w=8):
        occ = CostVolume(values=np.full((d_max + 1, h, w), value_occ))
        mono = CostVolume(values=np.full((d_max + 1, h, w), value_mono))
        return occ, mono

    def test_alpha3_only(self):
        occ, mono = self._volumes(3.0, 7.0)
        w = combined_boundary_weight(occ, mono, np.zeros(6),
                                     AlphaWeights(0.0, 0.0, 0.1))
        assert np.allclose(w, 0.1)

    def test_reference_weights_on_capped_volumes(self):
        occ, mono = self._volumes(B_CAP, B_CAP)
        w = combined_boundary_weight(occ, mono, np.zeros(6),
                                     AlphaWeights(0.2, 0.8, 0.1))
        assert np.allclose(w, 0.2 * B_CAP + 0.8 * B_CAP + 0.1)

    def test_samples_at_shape_disparity(self):
        d_max = 6
        vals = np.arange(d_max + 1, dtype=float)[:, None, None] * np.ones((1, 4, 5))
        occ = CostVolume(values=vals)
        mono = CostVolume(values=2 * vals)
        fg = np.array([0, 0, 0, 0, 0, 3.0])  # constant shape d = 3
        w = combined_boundary_weight(occ, mono, fg, AlphaWeights(1.0, 1.0, 0.0))
        assert np.allclose(w, 3.0 + 6.0)
