"""Patch-domain FIR denoising filters.

Per patch, second-order statistics of the noisy samples are estimated
empirically; the known noise variance converts them into clean/noisy
cross statistics.  Two closed-form filters follow: the classical
Wiener-Hopf solution of the least-squares problem, and the similarity-
index-optimal filter, whose system matrix replaces the full mean outer
product by a mean_weight/var_weight fraction of it.  At equal weights
the two coincide exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CsimParams
from .signals import PatchGrid, extract_patches, reassemble

__all__ = [
    "PatchStats",
    "FirFilter",
    "SingularStatsError",
    "empirical_stats",
    "mse_filter",
    "csim_filter",
    "apply_fir",
    "denoise_image",
]

_RIDGE_SCALE = 1e-10


class SingularStatsError(np.linalg.LinAlgError):
    """Filter system stayed singular even after the diagonal floor."""


@dataclass(frozen=True)
class PatchStats:
    """Second-order statistics of one noisy patch.

    ``autocov`` holds lags 0..m-1 of the noisy samples (unbiased
    normalization: lag products divided by count-1, matching the
    unbiased variance at lag 0); ``cov`` is the Toeplitz matrix built
    from it.  ``cross`` is the clean/noisy cross-covariance implied by
    the known noise variance, with lag 0 floored at zero when the noise
    variance exceeds the measured one (``floored`` records that).
    """

    mu_y: float
    autocov: np.ndarray
    cov: np.ndarray
    cross: np.ndarray
    sigma_n_sq: float
    sigma_x_sq: float
    floored: bool = False

    @property
    def m(self) -> int:
        return self.cross.size


@dataclass(frozen=True)
class FirFilter:
    """Causal filter taps; output[i] = sum_k taps[k] * y[i-k]."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("expected a non-empty tap vector")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps must be finite")
        taps.flags.writeable = False
        object.__setattr__(self, "taps", taps)

    @property
    def m(self) -> int:
        return int(self.taps.size)


def empirical_stats(y_patch, m: int, sigma_n_sq: float) -> PatchStats:
    """Estimate the statistics of one patch for an order-m filter.

    Requires at least 2m samples.  When the supplied noise variance
    exceeds the measured lag-0 covariance the derived clean statistics
    are floored at zero and the outcome flagged.
    """
    y = np.asarray(y_patch, dtype=float).reshape(-1)
    m = int(m)
    if m < 1:
        raise ValueError("filter order must be positive")
    if y.size < 2 * m:
        raise ValueError(f"patch too short: need at least {2 * m} samples")
    sigma_n_sq = float(sigma_n_sq)
    if sigma_n_sq < 0:
        raise ValueError("noise variance must be nonnegative")

    mu = float(y.mean())
    dev = y - mu
    n = y.size
    autocov = np.empty(m)
    for lag in range(m):
        autocov[lag] = float(dev[: n - lag] @ dev[lag:]) / (n - lag - 1)

    cov = np.empty((m, m))
    idx = np.arange(m)
    cov[:] = autocov[np.abs(idx[:, None] - idx[None, :])]

    cross = autocov.copy()
    floored = sigma_n_sq > autocov[0]
    cross[0] = max(autocov[0] - sigma_n_sq, 0.0)
    sigma_x_sq = cross[0]
    return PatchStats(
        mu_y=mu,
        autocov=autocov,
        cov=cov,
        cross=cross,
        sigma_n_sq=sigma_n_sq,
        sigma_x_sq=sigma_x_sq,
        floored=floored,
    )


def _solve_filter(stats: PatchStats, mean_over_var: float) -> FirFilter:
    """Shared closed form: (cov + r mu^2 J)^-1 (cross + r mu^2 ones)
    with J the all-ones matrix, via a rank-one update of a cov solve.

    The base covariance gets a 1e-10 diagonal floor (scaled by the full
    system trace) only when it is not positive definite as given.
    """
    m = stats.m
    mu_sq = stats.mu_y * stats.mu_y
    weight = mean_over_var * mu_sq
    base = stats.cov
    try:
        np.linalg.cholesky(base)
    except np.linalg.LinAlgError:
        scale = float(np.trace(stats.cov)) + m * mu_sq
        base = stats.cov + _RIDGE_SCALE * scale * np.eye(m)
        try:
            np.linalg.cholesky(base)
        except np.linalg.LinAlgError as exc:
            raise SingularStatsError(
                "patch statistics singular even after the diagonal floor"
            ) from exc
    rhs = stats.cross + weight
    ones = np.ones(m)
    solved_rhs = np.linalg.solve(base, rhs)
    solved_ones = np.linalg.solve(base, ones)
    denom = 1.0 + weight * float(ones @ solved_ones)
    taps = solved_rhs - (weight * float(ones @ solved_rhs) / denom) * solved_ones
    return FirFilter(taps)


def mse_filter(stats: PatchStats) -> FirFilter:
    """Wiener-Hopf taps: correlation matrix inverse times cross vector."""
    return _solve_filter(stats, 1.0)


def csim_filter(stats: PatchStats, params: CsimParams) -> FirFilter:
    """Similarity-index-optimal taps.

    Identical to the Wiener-Hopf solution when mean_weight equals
    var_weight; smaller ratios damp the mean-matching term.
    """
    return _solve_filter(stats, params.mean_weight / params.var_weight)


def apply_fir(y, fir: FirFilter) -> np.ndarray:
    """Causal convolution with zero padding before the first sample."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return np.convolve(y, fir.taps)[: y.size]


def denoise_image(
    image,
    m: int,
    sigma_n_sq: float,
    params: CsimParams | None = None,
    method: str = "csim",
    side: int = 8,
    stride: int | None = None,
) -> np.ndarray:
    """Per-patch filter estimation and filtering, reassembled by averaging.

    ``method`` selects "mse" or "csim"; the latter needs ``params``.
    Patches are square of the given side, non-overlapping by default.
    """
    if method not in ("mse", "csim"):
        raise ValueError(f"unknown method {method!r}")
    if method == "csim" and params is None:
        raise ValueError("csim method needs index weights")
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("expected a non-empty 2-D image")
    grid = PatchGrid(
        image.shape[0], image.shape[1], side=side, stride=side if stride is None else stride
    )
    patches = extract_patches(image, grid)
    filtered = np.empty_like(patches)
    for i, patch in enumerate(patches):
        stats = empirical_stats(patch, m, sigma_n_sq)
        if method == "mse":
            fir = mse_filter(stats)
        else:
            fir = csim_filter(stats, params)
        filtered[i] = apply_fir(patch, fir)
    return reassemble(filtered, grid)
