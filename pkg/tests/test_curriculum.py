"""Tests for the mixing schedule, epoch sizing and batch sampling."""

import math
from decimal import ROUND_CEILING, Decimal, localcontext

import numpy as np
import pytest
from pydantic import ValidationError

from core.curriculum.mixing import (
    CurriculumMixing,
    StaticMixing,
    SyntheticOnly,
    TwoStepMixing,
    make_policy,
)
from core.curriculum.sampler import CurriculumSampler, sample_batch
from core.curriculum.schedule import (
    CurriculumSchedule,
    iterations_per_epoch,
    mixing_ratio,
    outdoor_count,
)
from core.triplets.triplet import Domain
from utils.errors import ConfigError, InvalidInputError
from utils.rng import make_rng

DEFAULT = CurriculumSchedule()


def oracle_iterations(n, psi, devices, batch):
    """Exact value of N ln(1 / (1 - psi)) / (G B) at 50 digits, and its ceiling."""
    with localcontext() as context:
        context.prec = 50
        value = Decimal(n) * -(Decimal(1) - Decimal(psi)).ln() / Decimal(devices * batch)
        return value, int(value.to_integral_value(rounding=ROUND_CEILING))


class TestMixingRatio:
    """The warm-up and linear ramp."""

    def test_warmup_epoch_is_synthetic(self):
        """e = 0 with W = 1 has no outdoor share."""
        assert mixing_ratio(0, DEFAULT) == 0.0

    def test_ramp_start(self):
        """e = W starts the ramp at zero."""
        assert mixing_ratio(1, DEFAULT) == 0.0

    def test_mid_ramp(self):
        """e = 126 gives 0.30 * 125 / 249."""
        assert mixing_ratio(126, DEFAULT) == 0.30 * 125 / 249
        assert mixing_ratio(126, DEFAULT) == pytest.approx(0.150602, abs=1e-6)

    def test_endpoint_exact(self):
        """r(T) equals r_max bit for bit."""
        assert mixing_ratio(250, DEFAULT) == 0.30
        odd = CurriculumSchedule(warmup_epochs=3, total_epochs=7, max_ratio=0.1)
        assert mixing_ratio(7, odd) == 0.1

    def test_non_decreasing(self):
        """The ratio never falls from one epoch to the next."""
        ratios = [mixing_ratio(e, DEFAULT) for e in range(DEFAULT.total_epochs + 1)]
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))
        assert max(ratios) == 0.30

    def test_zero_length_ramp(self):
        """W = T jumps straight to r_max at T."""
        schedule = CurriculumSchedule(warmup_epochs=5, total_epochs=5, max_ratio=0.4)
        assert mixing_ratio(4, schedule) == 0.0
        assert mixing_ratio(5, schedule) == 0.4

    def test_out_of_range_epochs(self):
        """Epochs outside [0, T] are invalid."""
        with pytest.raises(InvalidInputError):
            mixing_ratio(251, DEFAULT)
        with pytest.raises(InvalidInputError):
            mixing_ratio(-1, DEFAULT)

    def test_schedule_invariants(self):
        """W <= T and psi strictly inside (0, 1)."""
        with pytest.raises(ValidationError):
            CurriculumSchedule(warmup_epochs=10, total_epochs=5)
        with pytest.raises(ValidationError):
            CurriculumSchedule(coverage=1.0)
        with pytest.raises(ValidationError):
            CurriculumSchedule(max_ratio=1.5)


class TestIterationsPerEpoch:
    """Coupon-collector epoch sizing."""

    def test_small_example(self):
        """N = 100, psi = 0.5, B = 10 gives ceil(6.93) = 7."""
        schedule = CurriculumSchedule(synthetic_size=100, coverage=0.5, batch_size=10, devices=1)
        assert iterations_per_epoch(schedule) == 7

    def test_large_example_matches_oracle(self):
        """N = 781000, psi = 0.8, 8 devices of 64."""
        schedule = CurriculumSchedule(synthetic_size=781000, coverage=0.8, batch_size=64, devices=8)
        _, expected = oracle_iterations(781000, "0.8", 8, 64)
        assert iterations_per_epoch(schedule) == expected

    def test_exact_boundary_is_one(self):
        """ln(1 / (1 - psi)) = G B / N exactly gives one iteration."""
        psi = -math.expm1(-1.0)
        schedule = CurriculumSchedule(synthetic_size=64, coverage=psi, batch_size=64, devices=1)
        assert iterations_per_epoch(schedule) == 1

    def test_at_least_one(self):
        """Tiny datasets still run one iteration."""
        schedule = CurriculumSchedule(synthetic_size=1, coverage=0.01, batch_size=512, devices=4)
        assert iterations_per_epoch(schedule) == 1

    def test_agrees_with_decimal_oracle(self):
        """Random parameter tuples agree with a 50-digit evaluation."""
        rng = make_rng(0, "iterations")
        checked = 0
        for _ in range(1000):
            n = int(rng.integers(1, 2_000_000))
            psi = round(float(rng.uniform(0.01, 0.99)), 6)
            devices = int(rng.integers(1, 9))
            batch = int(rng.integers(1, 513))
            value, expected = oracle_iterations(n, repr(psi), devices, batch)
            if abs(value - value.to_integral_value()) < Decimal("1e-6"):
                continue
            schedule = CurriculumSchedule(synthetic_size=n, coverage=psi, batch_size=batch, devices=devices)
            assert iterations_per_epoch(schedule) == max(1, expected)
            checked += 1
        assert checked > 900


class TestOutdoorCount:
    """Half-up rounding of r * B."""

    @pytest.mark.parametrize("ratio, batch, expected", [
        (0.0, 64, 0),
        (0.15060, 64, 10),
        (0.5, 64, 32),
        (0.0156, 64, 1),
        (1.0, 64, 64),
        (0.25, 2, 1),
    ])
    def test_examples(self, ratio, batch, expected):
        """Known (ratio, batch) pairs."""
        assert outdoor_count(ratio, batch) == expected

    def test_rejects_bad_ratio(self):
        """Ratios outside [0, 1] are invalid."""
        with pytest.raises(InvalidInputError):
            outdoor_count(1.2, 64)


class TestPolicies:
    """Mixing policies."""

    def test_curriculum_follows_schedule(self):
        """The curriculum policy is the schedule's ratio."""
        policy = CurriculumMixing(DEFAULT)
        assert [policy.ratio(e) for e in (0, 126, 250)] == [0.0, 0.30 * 125 / 249, 0.30]

    def test_static(self):
        """Static mixing is constant from epoch 0."""
        policy = StaticMixing(0.25)
        assert policy.ratio(0) == policy.ratio(100) == 0.25

    def test_two_step(self):
        """Two-step switches from synthetic to outdoor."""
        policy = TwoStepMixing(3)
        assert [policy.ratio(e) for e in range(5)] == [0.0, 0.0, 0.0, 1.0, 1.0]

    def test_synthetic_only(self):
        """The baseline never mixes."""
        assert SyntheticOnly().ratio(200) == 0.0

    def test_make_policy_defaults(self):
        """Static defaults to r_max and two-step to T // 2."""
        assert make_policy("static", DEFAULT).ratio(0) == 0.30
        two_step = make_policy("two-step", DEFAULT)
        assert two_step.ratio(124) == 0.0 and two_step.ratio(125) == 1.0
        assert make_policy("static", DEFAULT, static_ratio=0.1).ratio(7) == 0.1

    def test_unknown_mode(self):
        """Unknown modes are invalid."""
        with pytest.raises(InvalidInputError):
            make_policy("adaptive", DEFAULT)


class TestSampleBatch:
    """Mixed-batch draws."""

    def test_warmup_batch_is_synthetic(self):
        """Before W the batch holds only synthetic indices."""
        batch = sample_batch(0, 0, 1, 100, 50, CurriculumMixing(DEFAULT), 64)
        assert len(batch.outdoor) == 0 and len(batch.synthetic) == 64

    def test_counts_follow_ratio(self):
        """k outdoor and B - k synthetic indices, all in range."""
        batch = sample_batch(126, 3, 1, 100, 50, CurriculumMixing(DEFAULT), 64)
        assert len(batch.outdoor) == 10 and len(batch.synthetic) == 54
        assert batch.size == 64
        assert np.all((batch.synthetic >= 0) & (batch.synthetic < 100))
        assert np.all((batch.outdoor >= 0) & (batch.outdoor < 50))

    def test_tagged_order(self):
        """Synthetic entries come first, then outdoor."""
        batch = sample_batch(0, 0, 1, 10, 10, StaticMixing(0.5), 4)
        tags = [domain for domain, _ in batch.tagged()]
        assert tags == [Domain.SYNTHETIC, Domain.SYNTHETIC, Domain.OUTDOOR, Domain.OUTDOOR]

    def test_deterministic(self):
        """Identical indices and seed give identical batches."""
        a = sample_batch(5, 2, 9, 100, 40, StaticMixing(0.3), 32, device=1)
        b = sample_batch(5, 2, 9, 100, 40, StaticMixing(0.3), 32, device=1)
        assert np.array_equal(a.synthetic, b.synthetic) and np.array_equal(a.outdoor, b.outdoor)

    def test_streams_are_distinct(self):
        """Devices, iterations and seeds draw from different streams."""
        base = sample_batch(5, 2, 9, 10**6, 10**6, StaticMixing(0.5), 32)
        others = [
            sample_batch(5, 2, 9, 10**6, 10**6, StaticMixing(0.5), 32, device=1),
            sample_batch(5, 3, 9, 10**6, 10**6, StaticMixing(0.5), 32),
            sample_batch(5, 2, 10, 10**6, 10**6, StaticMixing(0.5), 32),
        ]
        for other in others:
            assert not np.array_equal(base.synthetic, other.synthetic)

    def test_empty_outdoor_set(self):
        """An outdoor share with no outdoor data is a configuration error."""
        with pytest.raises(ConfigError):
            sample_batch(126, 0, 1, 100, 0, CurriculumMixing(DEFAULT), 64)

    def test_empty_outdoor_allowed_during_warmup(self):
        """Warm-up batches do not need outdoor data."""
        assert sample_batch(0, 0, 1, 100, 0, CurriculumMixing(DEFAULT), 64).size == 64

    def test_empty_synthetic_set(self):
        """A synthetic share with no synthetic data is a configuration error."""
        with pytest.raises(ConfigError):
            sample_batch(0, 0, 1, 0, 10, SyntheticOnly(), 8)


class TestCurriculumSampler:
    """Epoch streams."""

    def test_iterations_and_stream(self):
        """An epoch yields N_iter batches with consecutive iteration indices."""
        schedule = CurriculumSchedule(synthetic_size=100, coverage=0.5, batch_size=10)
        sampler = CurriculumSampler(schedule, SyntheticOnly(), outdoor_size=0, seed=3)
        batches = list(sampler.batches(0))
        assert sampler.iterations == 7
        assert [b.iteration for b in batches] == list(range(7))

    def test_same_seed_same_stream(self):
        """Identical schedule and seed replay the same batches."""
        schedule = CurriculumSchedule(synthetic_size=50, batch_size=8, total_epochs=10)
        runs = [
            [b.synthetic.tolist() + b.outdoor.tolist()
             for e in range(10) for b in CurriculumSampler(schedule, CurriculumMixing(schedule), 20, 4).batches(e)]
            for _ in range(2)
        ]
        assert runs[0] == runs[1]

    def test_coverage_monte_carlo(self):
        """N_iter * B draws cover about psi of N = 1000 items."""
        schedule = CurriculumSchedule(synthetic_size=1000, coverage=0.8, batch_size=64)
        fractions = []
        for trial in range(100):
            sampler = CurriculumSampler(schedule, SyntheticOnly(), outdoor_size=0, seed=trial)
            seen = np.concatenate([b.synthetic for b in sampler.batches(0)])
            fractions.append(len(np.unique(seen)) / 1000)
        assert abs(np.mean(fractions) - 0.8) <= 0.02
        assert np.mean(fractions) >= 0.8
