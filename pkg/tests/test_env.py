import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bandit_regressor.env import (
    Dataset,
    FeatureMode,
    Featurizer,
    RewardKernel,
    featurize,
    gaussian_reward,
    positional_encode,
    sample_dataset,
)
from bandit_regressor.nn_core import ContractError

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestDataset:
    def test_noiseless_is_exact_sine(self):
        d = sample_dataset(-3.0, 3.0, 50, noise_std=0.0, seed=1)
        assert np.array_equal(d.ys, np.sin(d.xs))

    def test_single_period_range(self):
        d = sample_dataset(-math.pi, math.pi, 1000, seed=0)
        assert len(d) == 1000 and len(d.ys) == 1000
        assert d.xs.min() >= -math.pi and d.xs.max() <= math.pi

    def test_noise_law(self):
        d = sample_dataset(-5.0, 5.0, 100_000, noise_std=0.1, seed=3)
        resid = d.ys - np.sin(d.xs)
        assert -0.005 < resid.mean() < 0.005
        assert 0.095 < resid.std() < 0.105

    def test_reproducible(self):
        a = sample_dataset(-1, 1, 200, 0.1, seed=9)
        b = sample_dataset(-1, 1, 200, 0.1, seed=9)
        assert a.xs.tobytes() == b.xs.tobytes() and a.ys.tobytes() == b.ys.tobytes()

    @pytest.mark.parametrize("args", [(0.0, 1.0, 0), (1.0, 0.0, 10), (1.0, 1.0, 10)])
    def test_invalid(self, args):
        with pytest.raises(ContractError):
            sample_dataset(*args)

    def test_csv_round_trip(self, tmp_path):
        d = sample_dataset(-2, 2, 25, 0.1, seed=4)
        path = tmp_path / "data.csv"
        d.to_csv(path)
        assert path.read_text().splitlines()[0] == "x,y"
        back = Dataset.from_csv(path)
        assert np.array_equal(back.xs, d.xs) and np.array_equal(back.ys, d.ys)


class TestPositionalEncoding:
    def test_origin(self):
        assert positional_encode(0.0, 4).tolist() == [0.0, 1.0, 0.0, 1.0]

    def test_quarter_period(self):
        pe = positional_encode(math.pi / 2, 4)
        assert np.allclose(pe, [1.0, 0.0, 0.0, -1.0], rtol=0, atol=1e-12)

    def test_first_pair_is_sin_cos(self):
        xs = np.random.default_rng(0).uniform(-20, 20, 100)
        pe = positional_encode(xs, 16)
        assert np.abs(pe[:, 0] - np.sin(xs)).max() < 1e-12
        assert np.abs(pe[:, 1] - np.cos(xs)).max() < 1e-12

    def test_frequencies_double(self):
        x = 0.37
        pe = positional_encode(x, 8)
        for k in range(4):
            assert pe[2 * k] == pytest.approx(math.sin(2**k * x), abs=1e-12)
            assert pe[2 * k + 1] == pytest.approx(math.cos(2**k * x), abs=1e-12)

    @pytest.mark.parametrize("dim", [0, 3, 15])
    def test_bad_dim(self, dim):
        with pytest.raises(ContractError):
            positional_encode(1.0, dim)

    @given(finite, st.integers(0, 7))
    def test_bounds_and_pair_periodicity(self, x, k):
        pe = positional_encode(np.array([x, x + 2 * math.pi / 2**k]), 16)
        assert (np.abs(pe) <= 1).all()
        assert np.allclose(pe[0, 2 * k : 2 * k + 2], pe[1, 2 * k : 2 * k + 2], atol=1e-9)


class TestFeaturizer:
    def test_raw(self):
        f = Featurizer(FeatureMode.RAW)
        assert featurize(f, 2.5).tolist() == [2.5] and f.dim == 1

    def test_pe_shape(self):
        f = Featurizer("pe", 16)
        assert featurize(f, 1.234).shape == (16,)
        assert featurize(f, np.zeros(5)).shape == (5, 16)

    def test_pe_origin(self):
        assert featurize(Featurizer("pe", 16), 0.0).tolist() == [0.0, 1.0] * 8

    def test_odd_dim_rejected(self):
        with pytest.raises(ContractError):
            Featurizer("pe", 5)


class TestReward:
    def test_maximal_at_zero_error(self):
        assert gaussian_reward(RewardKernel(0.2), 0.3, 0.3) == 1.0

    def test_one_sigma(self):
        assert abs(gaussian_reward(RewardKernel(0.2), 0.5, 0.3) - math.exp(-0.5)) < 1e-12
        assert abs(gaussian_reward(RewardKernel(0.2), 0.5, 0.3) - 0.606531) < 1e-6

    @given(finite, st.floats(0, 50))
    def test_symmetric(self, y, d):
        k = RewardKernel(0.2)
        assert k(d, 0.0) == k(-d, 0.0)
        assert k(y + d, y) == pytest.approx(k(y - d, y), rel=1e-9, abs=1e-300)

    def test_monotone_on_sorted_errors(self):
        k = RewardKernel(0.2)
        r = k(np.linspace(0, 100, 5001), 0.0)
        assert (np.diff(r) <= 0).all()
        assert (np.diff(r[r > 1e-300]) < 0).all()

    @given(finite, finite)
    def test_bounds(self, a, b):
        r = RewardKernel(0.2)(a, b)
        assert 0 < r <= 1

    def test_bad_sigma(self):
        with pytest.raises(ContractError):
            RewardKernel(0.0)
