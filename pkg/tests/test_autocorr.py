import numpy as np
import pytest

from ising_nqs.autocorr import (
    autocovariance,
    autocovariance_series,
    detect_stuck,
    integrated_autocorr_time,
    multi_chain_tau,
    select_mh_interval,
)
from ising_nqs.errors import ChainTooShortError, ExclusionThresholdError, StuckChainError


def _ar1(phi, N, seed, sigma=1.0):
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, N)
    x = np.empty(N)
    x[0] = noise[0] / np.sqrt(1.0 - phi * phi)
    for i in range(1, N):
        x[i] = phi * x[i - 1] + noise[i]
    return x


def test_fft_autocovariance_matches_direct():
    rng = np.random.default_rng(0)
    x = rng.normal(size=512)
    series = autocovariance_series(x, 40)
    for c in (0, 1, 7, 40):
        assert series[c] == pytest.approx(autocovariance(x, c), abs=1e-10)


def test_autocovariance_lag_bounds():
    x = np.arange(10.0)
    with pytest.raises(ValueError):
        autocovariance(x, 10)
    with pytest.raises(ValueError):
        autocovariance(x, -1)


def test_ar1_tau_moderate():
    # quick version of the synthetic acceptance check
    phi = 0.7
    stats = integrated_autocorr_time(_ar1(phi, 1 << 17, seed=1))
    want = (1 + phi) / (2 * (1 - phi))
    assert stats.tau_int == pytest.approx(want, rel=0.12)
    assert stats.cutoff_m >= 4 * stats.tau_int + 1


def test_iid_tau_is_half():
    stats = integrated_autocorr_time(np.random.default_rng(2).normal(size=1 << 16))
    assert stats.tau_int == pytest.approx(0.5, abs=0.05)


def test_interval_scales_tau_to_sweeps():
    x = _ar1(0.5, 1 << 14, seed=3)
    s1 = integrated_autocorr_time(x, interval=1.0)
    s3 = integrated_autocorr_time(x, interval=3.0)
    assert s3.tau_sweeps == pytest.approx(3.0 * s1.tau_sweeps, rel=1e-12)
    assert s3.tau_int == s1.tau_int


def test_constant_series_raises_stuck():
    with pytest.raises(StuckChainError):
        integrated_autocorr_time(np.full(4096, 2.5))


def test_short_series_raises():
    with pytest.raises(ChainTooShortError):
        integrated_autocorr_time(np.arange(5.0))
    # strongly correlated series with no self-consistent window in N/2
    with pytest.raises(ChainTooShortError):
        integrated_autocorr_time(np.linspace(0.0, 1.0, 64))


def test_detect_stuck_rules():
    stuck, reason = detect_stuck(np.full(100, 1.0))
    assert stuck and "variance" in reason
    x = np.ones(100)
    x[:20] = np.arange(20)
    stuck, reason = detect_stuck(x)  # 80-sample constant run out of 100
    assert stuck and "run" in reason
    stuck, _ = detect_stuck(np.random.default_rng(4).normal(size=100))
    assert not stuck


def test_multi_chain_exclusion():
    good = [_ar1(0.5, 4096, seed=s) for s in (1, 2, 3)]
    frozen = np.full(4096, 1.0)
    mean_tau, spread, per_chain, excluded = multi_chain_tau(
        good + [frozen], [1.0, 1.0, 1.0, 1.0])
    assert len(per_chain) == 3
    assert excluded == [{"chain": 3, "reason": "zero variance"}]
    assert mean_tau == pytest.approx(np.mean(per_chain))
    assert spread > 0.0
    with pytest.raises(ExclusionThresholdError):
        multi_chain_tau([frozen, frozen, good[0]], [1.0, 1.0, 1.0])


def test_select_mh_interval():
    # ceil(max(0.01 n, 1)) sweeps
    assert select_mh_interval(16) == 1
    assert select_mh_interval(100) == 1
    assert select_mh_interval(101) == 2
    assert select_mh_interval(256) == 3
    assert select_mh_interval(484) == 5
