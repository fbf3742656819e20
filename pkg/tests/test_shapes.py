import numpy as np
import pytest

from bilayer_stereo.shapes import (
    RankDeficient,
    basis_matrix,
    compose_disparity,
    eval_shape,
    fit_shape_wls,
    normalized_grid,
    pixel_to_normalized,
    shape_map,
    zero_shape,
)


def planted_instance(height=24, width=30, coeffs=(1.5, -0.7, 0.3, 2.0, -1.0, 12.0)):
    xn, yn = normalized_grid(height, width)
    d_bar = eval_shape(np.asarray(coeffs), xn, yn)
    return np.asarray(coeffs, dtype=float), d_bar


class TestEval:
    def test_constant_shape(self):
        c = np.array([0, 0, 0, 0, 0, 5.0])
        assert eval_shape(c, 0.3, -0.8) == 5.0
        assert eval_shape(c, 0.0, 0.0, d_max=10) == 5.0

    def test_pure_quadratic(self):
        c = np.array([1.0, 0, 0, 0, 0, 0])
        assert eval_shape(c, 0.5, 0.1) == pytest.approx(0.25, abs=1e-15)

    def test_clamps_to_range(self):
        c = np.array([0, 0, 0, 0, 0, -3.0])
        assert eval_shape(c, 0.2, 0.2, d_max=8) == 0.0
        c2 = np.array([0, 0, 0, 0, 0, 99.0])
        assert eval_shape(c2, 0.2, 0.2, d_max=8) == 8.0

    def test_coordinate_normalization(self):
        xn, yn = pixel_to_normalized(np.array([0.0, 31.0]), np.array([0.0, 15.0]), 32, 16)
        assert np.allclose(xn, [-1.0, 1.0])
        assert np.allclose(yn, [-1.0, 1.0])

    def test_basis_order(self):
        b = basis_matrix(2.0, 3.0)
        assert np.allclose(b, [4.0, 6.0, 9.0, 2.0, 3.0, 1.0])


class TestFitWls:
    def test_planted_recovery_uniform_sigma(self):
        coeffs, d_bar = planted_instance()
        sigma = np.ones_like(d_bar)
        got = fit_shape_wls(d_bar, sigma, np.ones_like(d_bar, dtype=bool))
        assert np.max(np.abs(got - coeffs)) / np.max(np.abs(coeffs)) < 1e-9

    def test_uniform_sigma_equals_ols(self):
        coeffs, d_bar = planted_instance()
        rng = np.random.default_rng(0)
        noisy = d_bar + 0.1 * rng.standard_normal(d_bar.shape)
        mask = rng.random(d_bar.shape) > 0.4
        got = fit_shape_wls(noisy, np.full_like(d_bar, 2.7), mask)
        # weights cancel exactly: any uniform sigma gives the same answer
        unit = fit_shape_wls(noisy, np.ones_like(d_bar), mask)
        assert np.max(np.abs(got - unit)) < 1e-12
        # and the answer is the plain least-squares fit up to the ridge
        ys, xs = np.nonzero(mask)
        xn, yn = pixel_to_normalized(xs, ys, d_bar.shape[1], d_bar.shape[0])
        ols, *_ = np.linalg.lstsq(basis_matrix(xn, yn), noisy[mask], rcond=None)
        assert np.max(np.abs(got - ols)) < 2e-9

    def test_corrupted_half_suppressed(self):
        coeffs, d_bar = planted_instance()
        rng = np.random.default_rng(1)
        corrupted = d_bar.copy()
        bad = rng.random(d_bar.shape) < 0.5
        corrupted[bad] = rng.uniform(0, 30, bad.sum())
        sigma = np.where(bad, 1e6, 1.0)
        got = fit_shape_wls(corrupted, sigma, np.ones_like(d_bar, dtype=bool))
        clean = fit_shape_wls(d_bar, np.ones_like(d_bar), ~bad)
        assert np.max(np.abs(got - clean)) / np.max(np.abs(clean)) < 1e-3

    def test_residual_orthogonality(self):
        _, d_bar = planted_instance()
        rng = np.random.default_rng(2)
        noisy = d_bar + rng.standard_normal(d_bar.shape)
        sigma = rng.uniform(0.5, 3.0, d_bar.shape)
        mask = np.ones_like(d_bar, dtype=bool)
        got = fit_shape_wls(noisy, sigma, mask)
        ys, xs = np.nonzero(mask)
        xn, yn = pixel_to_normalized(xs, ys, d_bar.shape[1], d_bar.shape[0])
        basis = basis_matrix(xn, yn)
        w = 1.0 / sigma[mask] ** 2
        w = w / w.mean()
        resid = basis @ got - noisy[mask]
        assert np.max(np.abs(basis.T @ (w * resid))) < 1e-6

    def test_sigma_rescale_invariance(self):
        _, d_bar = planted_instance()
        rng = np.random.default_rng(3)
        noisy = d_bar + rng.standard_normal(d_bar.shape)
        sigma = rng.uniform(0.5, 3.0, d_bar.shape)
        mask = np.ones_like(d_bar, dtype=bool)
        ref = fit_shape_wls(noisy, sigma, mask)
        for c in (0.25, 10.0, 1e3):
            got = fit_shape_wls(noisy, c * sigma, mask)
            assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-9

    def test_too_few_pixels(self):
        d_bar = np.zeros((8, 8))
        sigma = np.ones((8, 8))
        mask = np.zeros((8, 8), dtype=bool)
        mask[0, :5] = True
        with pytest.raises(RankDeficient):
            fit_shape_wls(d_bar, sigma, mask)

    def test_degenerate_geometry(self):
        # all pixels on one row cannot pin 6 coefficients
        d_bar = np.zeros((8, 20))
        sigma = np.ones((8, 20))
        mask = np.zeros((8, 20), dtype=bool)
        mask[3, :] = True
        with pytest.raises(RankDeficient):
            fit_shape_wls(d_bar, sigma, mask)

    def test_nonfinite_pixels_dropped(self):
        coeffs, d_bar = planted_instance()
        sigma = np.ones_like(d_bar)
        d_bar = d_bar.copy()
        d_bar[0, 0] = np.nan
        sigma[1, 1] = np.inf
        got = fit_shape_wls(d_bar, sigma, np.ones_like(sigma, dtype=bool))
        assert np.max(np.abs(got - coeffs)) < 1e-8


class TestCompose:
    def test_all_positive_takes_foreground(self):
        phi = np.ones((10, 12))
        fg = np.array([0, 0, 0, 0, 0, 10.0])
        bg = np.array([0, 0, 0, 0, 0, 2.0])
        assert np.all(compose_disparity(phi, fg, bg, 16) == 10.0)

    def test_all_negative_takes_background(self):
        phi = -np.ones((10, 12))
        fg = np.array([0, 0, 0, 0, 0, 10.0])
        bg = np.array([0, 0, 0, 0, 0, 2.0])
        assert np.all(compose_disparity(phi, fg, bg, 16) == 2.0)

    def test_disk_selection(self):
        ys, xs = np.mgrid[0:21, 0:21].astype(float)
        phi = 6.0 - np.hypot(xs - 10, ys - 10)
        d = compose_disparity(phi, np.array([0, 0, 0, 0, 0, 10.0]),
                              np.array([0, 0, 0, 0, 0, 2.0]), 16)
        assert d[10, 10] == 10.0
        assert d[0, 0] == 2.0

    def test_zero_phi_is_foreground(self):
        phi = np.zeros((4, 4))
        d = compose_disparity(phi, np.array([0, 0, 0, 0, 0, 7.0]),
                              np.array([0, 0, 0, 0, 0, 1.0]), 16)
        assert np.all(d == 7.0)

    def test_output_in_range(self):
        rng = np.random.default_rng(4)
        phi = rng.standard_normal((16, 16))
        fg = rng.uniform(-40, 80, 6)
        bg = rng.uniform(-40, 80, 6)
        d = compose_disparity(phi, fg, bg, 12)
        assert d.min() >= 0.0 and d.max() <= 12.0

    def test_zero_shape_helper(self):
        assert np.array_equal(zero_shape(), np.zeros(6))
        assert np.all(shape_map(zero_shape(), 5, 7) == 0)
