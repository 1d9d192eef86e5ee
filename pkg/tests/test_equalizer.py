import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simowiener.equalizer import (
    UnequalizableError,
    align,
    aligned_mse,
    ber,
    channel_nmse,
    convolution_matrix,
    equalize,
)
from simowiener.signals import FirChannel, Nonlinearity, WienerSimoSystem, filter_branches


def test_convolution_matrix_matches_lfilter(rng):
    h = rng.standard_normal(4)
    s = rng.standard_normal(12)
    np.testing.assert_allclose(convolution_matrix(h, 12) @ s, np.convolve(s, h)[:12], atol=1e-13)
    # operator shorter than the filter keeps only the leading taps
    np.testing.assert_allclose(convolution_matrix(h, 2), [[h[0], 0.0], [h[1], h[0]]])


class TestEqualize:
    def test_true_parameters_round_trip(self, rng):
        system = WienerSimoSystem.reference([1, 2, 3], ["identity"] * 3)
        s = rng.standard_normal(200)
        y = filter_branches(system, s)
        s_hat = equalize(system.taps, y).s_hat
        assert np.linalg.norm(s_hat[4:] - s[4:]) <= 1e-8 * np.linalg.norm(s[4:])

    def test_trivial_channels_average(self, rng):
        y = rng.standard_normal((3, 15))
        h = np.tile([1.0, 0.0, 0.0], (3, 1))
        np.testing.assert_allclose(equalize(h, y).s_hat, y.mean(axis=0), atol=1e-12)

    def test_mmse_regularization_limit(self, rng):
        y = rng.standard_normal((2, 30))
        h = rng.standard_normal((2, 3))
        small = equalize(h, y, "mmse", noise_var=1e12).s_hat
        assert np.linalg.norm(small) <= 1e-9 * np.linalg.norm(equalize(h, y).s_hat)

    def test_mmse_zero_noise_is_zf(self, rng):
        y = rng.standard_normal((2, 30))
        h = rng.standard_normal((2, 3))
        np.testing.assert_allclose(equalize(h, y, "mmse", noise_var=0.0).s_hat, equalize(h, y).s_hat, atol=1e-10)

    def test_mmse_matches_normal_equations(self, rng):
        y = rng.standard_normal((2, 25))
        h = rng.standard_normal((2, 3))
        big = np.vstack([convolution_matrix(hi, 25) for hi in h])
        ref = np.linalg.solve(big.T @ big + 0.7 * np.eye(25), big.T @ y.ravel())
        np.testing.assert_allclose(equalize(h, y, "mmse", noise_var=0.7).s_hat, ref, atol=1e-10)

    def test_rank_deficient(self, rng):
        # no branch sees s[n] at lag 0, so the last sample is unobservable
        h = np.array([[0.0, 1.0, 0.5], [0.0, -0.3, 1.0]])
        with pytest.raises(UnequalizableError, match="rank deficient"):
            equalize(h, rng.standard_normal((2, 20)))

    def test_argument_errors(self, rng):
        y = rng.standard_normal((2, 10))
        h = rng.standard_normal((2, 3))
        with pytest.raises(ValueError, match="noise_var"):
            equalize(h, y, "mmse")
        with pytest.raises(ValueError, match="noise_var"):
            equalize(h, y, "mmse", noise_var=-1.0)
        with pytest.raises(ValueError, match="unknown method"):
            equalize(h, y, "dfe")
        with pytest.raises(ValueError, match="one channel per branch"):
            equalize(h[:1], y)

    def test_result_fields(self, rng):
        res = equalize(rng.standard_normal((2, 3)), rng.standard_normal((2, 12)))
        assert res.method == "zf" and res.delay == 0 and res.s_hat.shape == (12,)


class TestAlignedMse:
    def test_scale_and_sign(self, rng):
        s = rng.standard_normal(50)
        assert aligned_mse(s, -3 * s) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        assert aligned_mse([1.0, 0.0], [0.0, 2.0]) == pytest.approx(1.0)

    def test_orthogonal_perturbation(self, rng):
        s = rng.standard_normal(64)
        e = rng.standard_normal(64)
        e -= (e @ s) / (s @ s) * s
        e *= np.sqrt(0.01 * (s @ s) / (e @ e))
        # 1 - 1/1.01
        assert aligned_mse(s, s + e) == pytest.approx(0.009900990099009901, rel=1e-10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 40))
    def test_unit_interval(self, seed, n):
        rng = np.random.default_rng(seed)
        value = aligned_mse(rng.standard_normal(n), rng.standard_normal(n))
        assert 0.0 <= value <= 1.0 + 1e-12

    def test_zero_estimate(self):
        with pytest.raises(ValueError, match="zero"):
            aligned_mse([1.0, 2.0], [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            aligned_mse([1.0, 2.0], [1.0])


class TestBer:
    def test_scaled(self, rng):
        s = rng.choice([-1.0, 1.0], 100)
        assert ber(s, 0.5 * s) == 0.0

    def test_sign_absorbed(self, rng):
        s = rng.choice([-1.0, 1.0], 100)
        assert ber(s, -s) == 0.0

    def test_one_flip(self, rng):
        s = rng.choice([-1.0, 1.0], 100)
        est = s.copy()
        est[17] *= -1
        assert ber(s, est) == pytest.approx(0.01)

    def test_reference_must_be_binary(self):
        with pytest.raises(ValueError, match="-1"):
            ber([1.0, 0.5], [1.0, 1.0])

    def test_zero_estimate(self):
        with pytest.raises(ValueError, match="zero"):
            ber([1.0, -1.0], [0.0, 0.0])

    def test_monotone_under_noise(self):
        system = WienerSimoSystem([FirChannel.reference(1), FirChannel.reference(2)], [Nonlinearity("identity")] * 2)
        rates = {}
        for snr in (0.0, 10.0):
            values = []
            for seed in range(20):
                rng = np.random.default_rng(seed)
                s = rng.choice([-1.0, 1.0], 256)
                y = filter_branches(system, s)
                y = y + 10 ** (-snr / 20) * np.sqrt(np.mean(y**2, axis=1, keepdims=True)) * rng.standard_normal(y.shape)
                values.append(ber(s[4:], equalize(system.taps, y).s_hat[4:]))
            rates[snr] = np.mean(values)
        assert rates[10.0] <= rates[0.0]


class TestChannelNmse:
    def test_proportional(self, rng):
        h = rng.standard_normal(5)
        assert channel_nmse(h, -0.3 * h) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        assert channel_nmse([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(1.0)

    def test_published_estimate_row_one(self):
        truth = [0.4115, 0.4165, 0.2249, -0.0233, -2.1971]
        published = [0.4145, 0.4171, 0.2285, -0.0235, -2.1961]
        assert channel_nmse(truth, published) <= 1e-4

    def test_align(self, rng):
        h = rng.standard_normal(5)
        np.testing.assert_allclose(align(h, 4.0 * h), h, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 6))
def test_round_trip_random_systems(seed, p, order):
    """Random coprime FIR systems with monotone nonlinearities: true parameters invert exactly."""
    rng = np.random.default_rng(seed)
    taps = rng.standard_normal((p, order))
    system = WienerSimoSystem([FirChannel(t) for t in taps], [Nonlinearity("f1")] * p)
    s = rng.standard_normal(128)
    y = filter_branches(system, s)
    s_hat = equalize(system.taps, y).s_hat
    assert aligned_mse(s[order - 1 :], s_hat[order - 1 :]) <= 1e-10
