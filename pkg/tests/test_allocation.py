"""Weight construction and capital deployment across buckets."""

import math

import numpy as np
import pytest

from clmm_backtest.allocation import (AllocationWeights, ProfileParams,
                                      allocate_epoch, custom_weights,
                                      normal_profile_weights,
                                      random_band_weights,
                                      uniform_band_weights)
from clmm_backtest.bucketing import BucketPartition
from clmm_backtest.core_math import position_value, split_capital

PART10 = BucketPartition(1.0, 11.0, 10)


class TestUniformBand:

    def test_interior_band(self):
        w = uniform_band_weights(PART10, s=5, tau=2)
        assert w.active_buckets().tolist() == [3, 4, 5, 6, 7]
        assert w.weights[2:7] == pytest.approx(np.full(5, 0.2), rel=1e-12)

    def test_band_clipped_at_lower_bound(self):
        w = uniform_band_weights(PART10, s=1, tau=2)
        assert w.active_buckets().tolist() == [1, 2, 3]
        assert w.weights[:3] == pytest.approx(np.full(3, 1 / 3), rel=1e-12)

    def test_band_clipped_at_upper_bound(self):
        w = uniform_band_weights(PART10, s=10, tau=2)
        assert w.active_buckets().tolist() == [8, 9, 10]

    def test_tau_zero_is_single_bucket(self):
        w = uniform_band_weights(PART10, s=4, tau=0)
        assert w.active_buckets().tolist() == [4]
        assert w.weights[3] == 1.0

    def test_rejects_benchmark_outside_partition(self):
        with pytest.raises(ValueError):
            uniform_band_weights(PART10, s=0, tau=1)
        with pytest.raises(ValueError):
            uniform_band_weights(PART10, s=11, tau=1)


class TestRandomBand:

    def test_same_seed_same_weights(self):
        a = random_band_weights(PART10, s=5, tau=2, seed=42)
        b = random_band_weights(PART10, s=5, tau=2, seed=42)
        assert np.array_equal(a.weights, b.weights)

    def test_different_seed_different_weights(self):
        a = random_band_weights(PART10, s=5, tau=2, seed=42)
        b = random_band_weights(PART10, s=5, tau=2, seed=43)
        assert not np.array_equal(a.weights, b.weights)

    def test_support_is_the_band(self):
        w = random_band_weights(PART10, s=5, tau=2, seed=0)
        assert w.active_buckets().tolist() == [3, 4, 5, 6, 7]
        assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_composite_seed_accepted(self):
        a = random_band_weights(PART10, s=5, tau=2, seed=[7, 0])
        b = random_band_weights(PART10, s=5, tau=2, seed=[7, 1])
        assert not np.array_equal(a.weights, b.weights)


class TestNormalProfile:

    def test_normalised_over_all_buckets(self):
        w = normal_profile_weights(PART10, ProfileParams(mu=0.5, variance=0.8))
        assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(w.weights > 0)

    def test_peak_sits_at_mapped_mean(self):
        part = BucketPartition(1.0, 11.0, 101)
        params = ProfileParams(mu=0.9, variance=0.4, bound=3.0)
        w = normal_profile_weights(part, params)
        peak = int(np.argmax(w.weights))
        # midpoint u-coordinates run linearly from -3 to 3; find the closest
        mids_u = (part.midpoints() - 6.0) * 6.0 / 10.0
        assert peak == int(np.argmin(np.abs(mids_u - 0.9)))

    def test_symmetric_for_centred_mean(self):
        part = BucketPartition(2.0, 4.0, 9)
        w = normal_profile_weights(part, ProfileParams(mu=0.0, variance=0.7))
        assert w.weights == pytest.approx(w.weights[::-1], rel=1e-12)

    def test_unimodal(self):
        w = normal_profile_weights(PART10, ProfileParams(mu=-1.2, variance=0.3))
        peak = int(np.argmax(w.weights))
        assert np.all(np.diff(w.weights[: peak + 1]) >= 0)
        assert np.all(np.diff(w.weights[peak:]) <= 0)

    def test_huge_variance_flattens_to_uniform(self):
        for n in (7, 10, 33):
            part = BucketPartition(1.0, 11.0, n)
            w = normal_profile_weights(part, ProfileParams(mu=0.0, variance=1e6))
            assert np.max(np.abs(w.weights - 1 / n)) < 1e-3 / n

    def test_tiny_variance_concentrates(self):
        part = BucketPartition(1.0, 11.0, 11)
        w = normal_profile_weights(part, ProfileParams(mu=0.0, variance=1e-4))
        assert np.max(w.weights) > 0.999
        assert int(np.argmax(w.weights)) == 5

    @pytest.mark.parametrize("mu,var,bound", [
        (0.0, 0.0, 3.0), (0.0, -1.0, 3.0), (float("nan"), 1.0, 3.0),
        (0.0, 1.0, 0.0), (0.0, float("inf"), 3.0),
    ])
    def test_rejects_bad_params(self, mu, var, bound):
        with pytest.raises(ValueError):
            ProfileParams(mu=mu, variance=var, bound=bound)


class TestCustomWeights:

    def test_accepts_unit_sum_vector(self):
        w = custom_weights(PART10, np.array([0, 0.25, 0.75, 0, 0, 0, 0, 0, 0, 0]))
        assert w.weights[1] == pytest.approx(0.25, rel=1e-12)
        assert w.weights[2] == pytest.approx(0.75, rel=1e-12)
        assert w.active_buckets().tolist() == [2, 3]

    def test_float_noise_in_sum_is_renormalised(self):
        raw = np.full(10, 0.1)
        raw[0] += 3e-10
        w = custom_weights(PART10, raw)
        assert w.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_unnormalised_vector(self):
        with pytest.raises(ValueError, match="sum to 1"):
            custom_weights(PART10, np.array([0, 1, 3, 0, 0, 0, 0, 0, 0, 0], float))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError, match="10"):
            custom_weights(PART10, np.full(4, 0.25))

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValueError):
            AllocationWeights(np.array([0.5, -0.5, 1.0]))
        with pytest.raises(ValueError):
            AllocationWeights(np.array([0.5, float("nan"), 0.5]))
        with pytest.raises(ValueError):
            AllocationWeights(np.zeros(5))


class TestAllocateEpoch:

    def anchors(self, part):
        return [part.lower + 1e-9, 2.4, 5.0, 7.3, part.upper - 1e-9,
                part.edge(3), part.edge(7)]

    def test_capital_fully_deployed_at_anchor(self):
        rng = np.random.default_rng(21)
        for anchor in self.anchors(PART10):
            raw = rng.random(10) + 0.01
            weights = custom_weights(PART10, raw / raw.sum())
            alloc = allocate_epoch(weights, 1e6, anchor, PART10)
            total = sum(
                position_value(alloc.liquidity[i - 1], PART10.bucket_range(i),
                               anchor, anchor)
                for i in alloc.active_buckets()
            )
            assert total == pytest.approx(1e6, rel=1e-9)

    def test_single_bucket_matches_direct_split(self):
        w = uniform_band_weights(PART10, s=4, tau=0)
        alloc = allocate_epoch(w, 5000.0, 4.4, PART10)
        direct = split_capital(5000.0, 4.4, PART10.bucket_range(4))
        assert alloc.liquidity[3] == pytest.approx(direct.liquidity, rel=1e-12)
        assert np.count_nonzero(alloc.liquidity) == 1

    def test_zero_weight_means_zero_liquidity(self):
        raw = np.array([0, 0, 1, 1, 0, 0, 2, 0, 0, 0], float)
        w = custom_weights(PART10, raw / raw.sum())
        alloc = allocate_epoch(w, 1e4, 5.5, PART10)
        assert set(alloc.active_buckets().tolist()) == {3, 4, 7}
        assert alloc.liquidity[0] == 0.0

    def test_value_splits_proportionally_to_weights(self):
        raw = np.array([1, 0, 2, 0, 3, 0, 0, 0, 0, 4], float)
        weights = custom_weights(PART10, raw / raw.sum())
        alloc = allocate_epoch(weights, 2e5, 6.1, PART10)
        for i in alloc.active_buckets():
            v = position_value(alloc.liquidity[i - 1], PART10.bucket_range(i),
                               6.1, 6.1)
            assert v == pytest.approx(2e5 * weights.weights[i - 1], rel=1e-9)

    def test_buckets_above_anchor_hold_token_a_only(self):
        w = uniform_band_weights(PART10, s=8, tau=1)
        alloc = allocate_epoch(w, 1e4, 2.0, PART10)
        for i in alloc.active_buckets():
            rng = PART10.bucket_range(i)
            l = alloc.liquidity[i - 1]
            assert l * rng.delta_x > 0
            # value held entirely in token A: worth w_i * W at the anchor
            assert l * rng.delta_x * 2.0 == pytest.approx(
                1e4 * w.weights[i - 1], rel=1e-9)

    def test_buckets_below_anchor_hold_token_b_only(self):
        w = uniform_band_weights(PART10, s=2, tau=1)
        alloc = allocate_epoch(w, 1e4, 9.0, PART10)
        for i in alloc.active_buckets():
            l = alloc.liquidity[i - 1]
            assert l * PART10.bucket_range(i).delta_y == pytest.approx(
                1e4 * w.weights[i - 1], rel=1e-9)

    def test_records_anchor_and_capital(self):
        w = uniform_band_weights(PART10, s=5, tau=1)
        alloc = allocate_epoch(w, 777.0, 5.2, PART10)
        assert alloc.deployed_capital == 777.0
        assert alloc.anchor_price == 5.2

    def test_rejects_nonpositive_capital_and_bad_anchor(self):
        w = uniform_band_weights(PART10, s=5, tau=1)
        with pytest.raises(ValueError):
            allocate_epoch(w, 0.0, 5.2, PART10)
        with pytest.raises(ValueError):
            allocate_epoch(w, -3.0, 5.2, PART10)
        with pytest.raises(ValueError):
            allocate_epoch(w, 100.0, float("nan"), PART10)
        with pytest.raises(ValueError):
            allocate_epoch(w, 100.0, 0.0, PART10)

    def test_weight_length_must_match_partition(self):
        w = uniform_band_weights(PART10, s=5, tau=1)
        other = BucketPartition(1.0, 11.0, 4)
        with pytest.raises(ValueError):
            allocate_epoch(w, 100.0, 5.2, other)
