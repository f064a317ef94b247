import math

import numpy as np
import pytest

from pdhw.nonlinear import (channel_features, conventional_energy,
                            noise_variance, renyi_entropy, shannon_entropy,
                            snr, teager_kaiser_energy)


def brute_probs(s):
    s = np.asarray(s, dtype=float)
    n = len(s)
    lo, hi = s.min(), s.max()
    if lo == hi:
        return [1.0]
    k = math.ceil(math.sqrt(n))
    width = (hi - lo) / k
    counts = [0] * k
    for v in s:
        j = min(int((v - lo) / width), k - 1)
        counts[j] += 1
    return [c / n for c in counts]


class TestShannon:
    def test_constant_zero(self):
        assert shannon_entropy([3.0] * 10) == 0.0

    def test_uniform_k_bins(self):
        # 16 samples -> 4 bins; 4 values spread one per bin boundary region
        s = np.repeat([0.0, 1.0, 2.0, 3.0], 4) + 0.1
        assert shannon_entropy(s) == pytest.approx(math.log(4))

    def test_monte_carlo_uniform(self):
        rng = np.random.default_rng(0)
        s = rng.uniform(size=1000)  # ceil(sqrt(1000)) = 32 bins
        assert abs(shannon_entropy(s) - math.log(32)) < 0.1

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            s = rng.normal(size=rng.integers(10, 200))
            p = [q for q in brute_probs(s) if q > 0]
            expected = -sum(q * math.log(q) for q in p)
            assert shannon_entropy(s) == pytest.approx(expected, rel=1e-10)


class TestRenyi:
    def test_uniform_order2(self):
        s = np.repeat([0.0, 1.0, 2.0, 3.0], 4) + 0.1
        assert renyi_entropy(s, 2) == pytest.approx(math.log(4))

    def test_constant_zero(self):
        assert renyi_entropy([1.0] * 8, 2) == 0.0
        assert renyi_entropy([1.0] * 8, 3) == 0.0

    def test_ordering_property(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = rng.normal(size=rng.integers(8, 300))
            hs = shannon_entropy(s)
            h2 = renyi_entropy(s, 2)
            h3 = renyi_entropy(s, 3)
            assert h3 <= h2 + 1e-12
            assert h2 <= hs + 1e-12


class TestEnergy:
    def test_formula(self):
        assert conventional_energy([1, 2, 3]) == pytest.approx(14 / 3)

    def test_zeros(self):
        assert conventional_energy(np.zeros(5)) == 0.0

    def test_homogeneity(self):
        rng = np.random.default_rng(3)
        s = rng.normal(size=40)
        assert conventional_energy(4 * s) == pytest.approx(
            16 * conventional_energy(s), rel=1e-12)


class TestTke:
    def test_constant_zero(self):
        assert teager_kaiser_energy([2.0] * 10, 1) == pytest.approx(0.0)

    def test_hand_evaluated(self):
        assert teager_kaiser_energy([0, 1, 0, -1, 0], 1) == pytest.approx(1.0)

    def test_sinusoid_identity(self):
        # A sin(w n + phi): s[n]^2 - s[n+1]s[n-1] = A^2 sin^2(w) for any phi
        A, w = 2.5, 0.7
        for phi in np.linspace(0, 2 * np.pi, 7):
            s = A * np.sin(w * np.arange(200) + phi)
            assert teager_kaiser_energy(s, 1) == pytest.approx(
                A ** 2 * math.sin(w) ** 2, abs=1e-6)

    def test_too_short(self):
        with pytest.raises(ValueError):
            teager_kaiser_energy([1, 2, 3], 2)


class TestNoise:
    def test_constant(self):
        assert noise_variance([5.0] * 10) == 0.0

    def test_white_noise_recovery(self):
        rng = np.random.default_rng(4)
        sigma = 1.7
        s = rng.normal(0, sigma, size=10_000)
        assert noise_variance(s) == pytest.approx(sigma ** 2, rel=0.1)

    def test_linear_ramp(self):
        delta = 0.3
        s = delta * np.arange(100)
        # all diffs equal delta: sum = 99 delta^2, / (2*99) = delta^2/2
        assert noise_variance(s) == pytest.approx(delta ** 2 / 2)


class TestSnr:
    def test_constant_missing(self):
        assert snr([1.0] * 10, "ce") is None

    def test_scale_invariance_ce(self):
        rng = np.random.default_rng(5)
        s = rng.normal(size=100)
        assert snr(2 * s, "ce") == pytest.approx(snr(s, "ce"), rel=1e-12)

    def test_noise_lowers_snr(self):
        rng = np.random.default_rng(6)
        clean = np.sin(0.05 * np.arange(2000))
        noisy = clean + rng.normal(0, 0.3, size=2000)
        assert snr(noisy, "ce") < snr(clean, "ce")


class TestProperties:
    def test_entropy_affine_invariance(self):
        rng = np.random.default_rng(7)
        s = rng.integers(0, 100, size=256).astype(float)
        for f in (shannon_entropy, lambda v: renyi_entropy(v, 2),
                  lambda v: renyi_entropy(v, 3)):
            assert f(2.0 * s + 5.0) == pytest.approx(f(s), rel=1e-12)

    def test_two_homogeneity(self):
        rng = np.random.default_rng(8)
        s = rng.normal(size=64)
        k = 3.0
        for f in (conventional_energy, lambda v: teager_kaiser_energy(v, 1),
                  lambda v: teager_kaiser_energy(v, 2), noise_variance):
            assert f(k * s) == pytest.approx(k ** 2 * f(s), rel=1e-12)

    def test_channel_features_inventory(self):
        rng = np.random.default_rng(9)
        feats = channel_features(rng.normal(size=100))
        assert len(feats) == 12
        assert all(v is not None for v in feats.values())
        short = channel_features(np.array([1.0, 2.0]))
        assert short["shannon"] is None and short["ce"] is not None
