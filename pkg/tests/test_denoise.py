import numpy as np
import pytest

from csim.core import CsimParams
from csim.denoise import (
    FirFilter,
    PatchStats,
    apply_fir,
    csim_filter,
    denoise_image,
    empirical_stats,
    mse_filter,
)
from csim.experiments import add_noise_snr, image_ssim, synthetic_image
from csim.metrics import psnr


def manual_stats(rng, m, mu_scale=5.0):
    """Directly constructed statistics with a guaranteed-PD covariance."""
    A = rng.standard_normal((m, m))
    cov = A @ A.T + 0.5 * np.eye(m)
    cross = rng.standard_normal(m)
    mu = float(rng.uniform(-mu_scale, mu_scale))
    return PatchStats(
        mu_y=mu,
        autocov=cov[0].copy(),
        cov=cov,
        cross=cross,
        sigma_n_sq=0.0,
        sigma_x_sq=float(cov[0, 0]),
    )


def dense_filter_oracle(stats, rho):
    m = stats.m
    weight = rho * stats.mu_y**2
    system = stats.cov + weight * np.ones((m, m))
    return np.linalg.solve(system, stats.cross + weight * np.ones(m))


# --- empirical statistics -----------------------------------------------------


def test_constant_patch_gives_zero_covariance():
    stats = empirical_stats(np.full(32, 9.0), 4, 0.0)
    np.testing.assert_allclose(stats.cov, np.zeros((4, 4)), atol=1e-12)
    assert stats.mu_y == pytest.approx(9.0)


def test_white_noise_covariance_structure():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(4096) * 3.0
    stats = empirical_stats(y, 5, 0.0)
    sample_var = float(y.var(ddof=1))
    assert stats.autocov[0] == pytest.approx(sample_var, rel=1e-10)
    assert np.all(np.abs(stats.autocov[1:]) < 0.1 * sample_var)


def test_zero_noise_keeps_cross_equal_to_autocov():
    rng = np.random.default_rng(1)
    y = rng.standard_normal(40)
    stats = empirical_stats(y, 6, 0.0)
    np.testing.assert_allclose(stats.cross, stats.autocov)
    assert not stats.floored


def test_noise_variance_shifts_lag_zero_only():
    rng = np.random.default_rng(2)
    y = 10.0 + rng.standard_normal(48)
    stats = empirical_stats(y, 4, 0.3)
    assert stats.cross[0] == pytest.approx(stats.autocov[0] - 0.3)
    np.testing.assert_allclose(stats.cross[1:], stats.autocov[1:])
    assert stats.sigma_x_sq == pytest.approx(stats.cross[0])


def test_excess_noise_variance_floors_and_flags():
    rng = np.random.default_rng(3)
    y = rng.standard_normal(32)
    stats = empirical_stats(y, 3, 100.0)
    assert stats.floored
    assert stats.cross[0] == 0.0
    assert stats.sigma_x_sq == 0.0


def test_patch_too_short_rejected():
    with pytest.raises(ValueError):
        empirical_stats(np.zeros(11), 6, 0.0)
    with pytest.raises(ValueError):
        empirical_stats(np.zeros(16), 6, -1.0)


def test_cov_is_toeplitz():
    rng = np.random.default_rng(4)
    stats = empirical_stats(rng.standard_normal(64), 5, 0.0)
    for i in range(5):
        for j in range(5):
            assert stats.cov[i, j] == stats.autocov[abs(i - j)]


# --- filters ------------------------------------------------------------------


def test_noiseless_order_one_filter_is_identity():
    rng = np.random.default_rng(5)
    y = 20.0 + rng.standard_normal(16)
    fir = mse_filter(empirical_stats(y, 1, 0.0))
    assert fir.taps.shape == (1,)
    assert fir.taps[0] == pytest.approx(1.0, abs=1e-10)


def test_mse_filter_matches_dense_oracle():
    rng = np.random.default_rng(6)
    for _ in range(100):
        stats = manual_stats(rng, 6)
        np.testing.assert_allclose(
            mse_filter(stats).taps, dense_filter_oracle(stats, 1.0), atol=1e-10
        )


def test_csim_filter_matches_dense_oracle():
    rng = np.random.default_rng(7)
    params = CsimParams.defaults(64)  # quarter ratio
    rho = params.mean_weight / params.var_weight
    for _ in range(100):
        stats = manual_stats(rng, 6)
        np.testing.assert_allclose(
            csim_filter(stats, params).taps,
            dense_filter_oracle(stats, rho),
            atol=1e-10,
        )


def test_equal_weights_reduce_to_wiener_hopf():
    rng = np.random.default_rng(8)
    params = CsimParams(3.0, 3.0, 8)
    for _ in range(200):
        stats = manual_stats(rng, 5)
        np.testing.assert_allclose(
            csim_filter(stats, params).taps, mse_filter(stats).taps, atol=1e-12
        )


def test_filter_norm_shrinks_with_noise_variance_on_white_patch():
    rng = np.random.default_rng(3)
    y = 50.0 + 4.0 * rng.standard_normal(64)
    c0 = empirical_stats(y, 6, 0.0).autocov[0]
    norms = [
        float(np.linalg.norm(mse_filter(empirical_stats(y, 6, sn)).taps))
        for sn in np.linspace(0.0, 0.95 * c0, 12)
    ]
    assert np.all(np.diff(norms) <= 1e-12)
    assert norms[-1] < norms[0]


def test_singular_stats_get_floored_not_crashed():
    # constant patch: zero covariance, rank-one system, floor kicks in
    fir = mse_filter(empirical_stats(np.full(16, 5.0), 3, 0.0))
    assert np.all(np.isfinite(fir.taps))
    assert float(fir.taps.sum()) == pytest.approx(1.0, abs=1e-6)


def test_fir_filter_validation():
    with pytest.raises(ValueError):
        FirFilter(np.array([np.nan]))
    with pytest.raises(ValueError):
        FirFilter(np.zeros((2, 2)))


# --- convolution and image pipeline --------------------------------------------


def test_apply_fir_is_zero_padded_causal_convolution():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    fir = FirFilter(np.array([0.5, 0.25]))
    out = apply_fir(y, fir)
    expected = [0.5 * 1, 0.5 * 2 + 0.25 * 1, 0.5 * 3 + 0.25 * 2, 0.5 * 4 + 0.25 * 3]
    np.testing.assert_allclose(out, expected)


def test_denoise_identity_regime():
    image = synthetic_image(32, 32, seed=0).astype(float)
    out = denoise_image(image, m=1, sigma_n_sq=0.0, method="mse")
    np.testing.assert_allclose(out, image, atol=1e-6)


def test_denoise_methods_coincide_at_equal_weights():
    image = synthetic_image(32, 32, seed=1).astype(float)
    noisy = add_noise_snr(image, 5.0, seed=2)
    var = float(image.var()) / 10.0 ** 0.5
    a = denoise_image(noisy, 6, var, CsimParams(2.0, 2.0, 12), "csim")
    b = denoise_image(noisy, 6, var, None, "mse")
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_denoise_improves_psnr_at_low_snr():
    image = synthetic_image(64, 64, seed=3).astype(float)
    noisy = add_noise_snr(image, 1.0, seed=4)
    noise_var = float(image.var()) / 10.0 ** 0.1
    out_mse = denoise_image(noisy, 6, noise_var, None, "mse")
    out_csim = denoise_image(noisy, 6, noise_var, CsimParams.defaults(64), "csim")
    base = psnr(noisy, image)
    assert psnr(out_mse, image) > base
    assert psnr(out_csim, image) > base


def test_denoise_validates_arguments():
    image = np.zeros((16, 16))
    with pytest.raises(ValueError):
        denoise_image(image, 2, 0.1, None, "bogus")
    with pytest.raises(ValueError):
        denoise_image(image, 2, 0.1, None, "csim")


def test_image_ssim_helper_perfect_match():
    image = synthetic_image(32, 32, seed=5).astype(float)
    assert image_ssim(image, image) == pytest.approx(1.0, rel=1e-12)
