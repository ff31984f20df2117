import numpy as np
import pytest

from epscap import (
    Dmc,
    MixedChannel,
    band_mass,
    chebyshev_floor,
    enumerate_types,
    feinstein_error_bound,
    feinstein_max_rate,
    metaconverse_error_lower_bound,
    metaconverse_rate_bound,
    spectrum_n,
    type_spectrum,
)
from epscap.blocklength import TypeCapError
from epscap.channel import mutual_information
from oracles import product_space_alpha

U = [0.5, 0.5]
C_GOOD, C_BAD = 0.5310044064107188, 0.2780719051126377


@pytest.fixture(scope="module")
def single_bsc():
    return MixedChannel.from_pairs([(1.0, Dmc.bsc(0.1))])


@pytest.fixture(scope="module")
def noiseless():
    return MixedChannel.from_pairs([(1.0, Dmc.identity(2))])


class TestFeinstein:
    def test_single_bsc_tail(self, single_bsc):
        b = feinstein_error_bound(single_bsc, U, 1000, 400.0, 0.02)
        assert b.value < 0.01 and b.raw == b.value

    def test_mixed_pair_half(self, mixed_bsc):
        b = feinstein_error_bound(mixed_bsc, U, 1000, 400.0, 0.02)
        assert 0.5 <= b.value < 0.52

    def test_rate_zero_reachable(self, mixed_bsc):
        b = feinstein_error_bound(mixed_bsc, U, 2000, 0.0, 0.01)
        assert b.value < 0.01

    def test_clipping_keeps_raw(self, mixed_bsc):
        b = feinstein_error_bound(mixed_bsc, U, 50, 40.0, 0.001)
        assert b.value == 1.0 and b.raw > 1.0

    def test_rejects_nonpositive_gamma(self, mixed_bsc):
        with pytest.raises(ValueError):
            feinstein_error_bound(mixed_bsc, U, 10, 1.0, 0.0)

    def test_single_bsc_rate(self, single_bsc):
        rates = [feinstein_max_rate(single_bsc, U, n, 0.1) for n in (200, 500, 1000, 2000)]
        assert np.all(np.diff(rates) >= 0)
        assert C_GOOD - 0.05 <= rates[-1] <= C_GOOD

    @pytest.mark.parametrize("eps,target", [(0.25, C_BAD), (0.75, C_GOOD)])
    def test_mixed_rate(self, mixed_bsc, eps, target):
        r = feinstein_max_rate(mixed_bsc, U, 2000, eps)
        assert target - 0.06 <= r <= target

    def test_rate_bound_meets_eps(self, mixed_bsc):
        out = feinstein_max_rate(mixed_bsc, U, 300, 0.25, detail=True)
        assert out.feasible and out.bound <= 0.25
        # the optimum is a left limit in gamma: a slightly smaller gamma realizes it
        check = feinstein_error_bound(mixed_bsc, U, 300, out.log2_M, out.gamma - 1e-9 / 300)
        assert check.raw <= 0.25 + 1e-6

    def test_infeasible_flag(self, mixed_bsc):
        out = feinstein_max_rate(mixed_bsc, U, 2, 0.01, detail=True)
        assert not out.feasible and out.rate == 0.0


class TestMetaConverse:
    def test_types(self):
        t = enumerate_types(4, 3)
        assert t.shape == (15, 3) and np.all(t.sum(axis=1) == 4)
        assert len({tuple(r) for r in t}) == 15
        with pytest.raises(TypeCapError):
            enumerate_types(1000, 4, cap=1000)

    def test_noiseless_n1(self, noiseless):
        b = metaconverse_rate_bound(noiseless, 1, 0.0, 0.5)
        assert 1.0 <= b <= 1.0 + np.log2(4)

    def test_monotone_in_eps(self, mixed_bsc):
        assert metaconverse_rate_bound(mixed_bsc, 100, 0.6) >= metaconverse_rate_bound(mixed_bsc, 100, 0.25)

    def test_mixed_pair_n2000(self, mixed_bsc):
        r = metaconverse_rate_bound(mixed_bsc, 2000, 0.25)
        assert C_BAD <= r <= C_BAD + 0.06

    def test_default_delta_small_n(self, mixed_bsc):
        out = metaconverse_rate_bound(mixed_bsc, 1, 0.25, detail=True)
        assert out.rate > 0 and out.n_types == 2

    def test_rejects_bad_delta(self, mixed_bsc):
        with pytest.raises(ValueError):
            metaconverse_rate_bound(mixed_bsc, 10, 0.5, 0.6)

    @pytest.mark.parametrize("n", [1, 5, 20, 60])
    def test_sandwich_small_n(self, mixed_bsc, n):
        for eps in (0.1, 0.25, 0.6):
            assert feinstein_max_rate(mixed_bsc, U, n, eps) <= metaconverse_rate_bound(mixed_bsc, n, eps)


class TestErrorLowerBound:
    def test_single_code_has_no_converse(self, single_bsc):
        assert metaconverse_error_lower_bound(single_bsc, 4, 0.0, type_counts=[2, 2]) == 0.0

    def test_noiseless_perfect_code(self, noiseless):
        assert metaconverse_error_lower_bound(noiseless, 1, 1.0, input_law=[0.5, 0.5]) <= 0.0

    def test_bsc_n4_matches_product_lp(self, single_bsc):
        value = metaconverse_error_lower_bound(single_bsc, 4, 3.0, type_counts=[2, 2])
        oracle = product_space_alpha(Dmc.bsc(0.1).matrix, [2, 2], 1 / 8)
        assert value > 0
        assert value == pytest.approx(oracle, abs=1e-9)

    def test_mixture_matches_product_lp(self, rng):
        mats = [rng.dirichlet(np.ones(2), size=2) for _ in range(2)]
        ch = MixedChannel(np.array([0.3, 0.7]), tuple(Dmc(m) for m in mats))
        value = metaconverse_error_lower_bound(ch, 3, 1.5, type_counts=[1, 2])
        oracle = sum(w * product_space_alpha(m, [1, 2], 2 ** -1.5) for w, m in zip(ch.weights, mats))
        assert value == pytest.approx(oracle, abs=1e-9)

    def test_explicit_law_shape(self, single_bsc):
        with pytest.raises(ValueError):
            metaconverse_error_lower_bound(single_bsc, 2, 1.0, input_law=[0.5, 0.5])
        with pytest.raises(ValueError):
            metaconverse_error_lower_bound(single_bsc, 2, 1.0)


class TestConcentration:
    def test_chebyshev_fixed_type(self, rng):
        w = rng.dirichlet(np.ones(3), size=2)
        gamma = 0.05
        for n in (10, 100, 1000):
            counts = np.array([n // 3, n - n // 3])
            s = type_spectrum(counts, w)
            center = n * mutual_information(counts / n, w)
            assert s.mean == pytest.approx(center, abs=1e-8)
            mass = band_mass(s, center, n * gamma)
            assert mass >= chebyshev_floor(s.variance / n, n, gamma) - 1e-12

    def test_chebyshev_iid_bsc(self):
        w = Dmc.bsc(0.11).matrix
        for n in (10, 100, 1000):
            s = spectrum_n(U, w, n)
            mass = band_mass(s, s.mean, n * 0.05)
            assert mass >= chebyshev_floor(s.variance / n, n, 0.05) - 1e-12

    def test_tail_directions(self):
        # exact tails of the normalized density move to 0 below I and to 1 above it
        w = Dmc.bsc(0.1).matrix
        info = mutual_information(U, w)
        low, high = [], []
        for n in (50, 200, 1000, 4000):
            s = spectrum_n(U, w, n)
            low.append(s.cdf(n * (info - 0.1) + 1))
            high.append(s.cdf(n * (info + 0.1) + 1))
        assert low[-1] < 0.01 and high[-1] > 0.99
        assert low[0] > low[-1] and high[0] < high[-1]
