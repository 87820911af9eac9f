"""Tests for the prefix-weight index."""

import bisect
import itertools
import math
import time
from collections import Counter

import pytest
from faker import Faker
from scipy.stats import chisquare

from regmatch.config import Settings
from regmatch.exceptions import SamplerError
from regmatch.rng import RandomStream
from regmatch.sampler import PrefixWeightIndex

fake = Faker()

SIGNIFICANCE = 1e-3


def _naive_find(weights: list, r: int) -> int:
    cumulative = list(itertools.accumulate(weights))
    return bisect.bisect_right(cumulative, r)


class TestBuild:
    """Tests for building an index."""

    def test_prefix_sums(self) -> None:
        """Test prefix sums agree with a running total."""
        weights = [fake.random_int(0, 50) for _ in range(37)]
        index = PrefixWeightIndex(weights, integer=True)

        running = 0
        for position, w in enumerate(weights):
            assert index.prefix(position) == running
            running += w
        assert index.prefix(len(weights)) == running == index.total

    def test_float_total_is_compensated(self) -> None:
        """Test the float total uses exact summation."""
        weights = [0.1] * 10
        index = PrefixWeightIndex(weights)

        assert index.total == math.fsum(weights) == 1.0

    def test_build_classmethod(self) -> None:
        """Test the named constructor."""
        index = PrefixWeightIndex.build([1, 2], integer=True)

        assert len(index) == 2
        assert index.live_count == 2

    def test_negative_weight(self) -> None:
        """Test negative weights are rejected."""
        with pytest.raises(SamplerError):
            PrefixWeightIndex([1.0, -0.5])

    def test_integer_overflow(self) -> None:
        """Test integer totals must stay below 2**63."""
        with pytest.raises(SamplerError):
            PrefixWeightIndex([2**62, 2**62], integer=True)

    def test_empty_index(self, stream: RandomStream) -> None:
        """Test sampling an index without mass raises."""
        with pytest.raises(SamplerError):
            PrefixWeightIndex([]).sample(stream)
        with pytest.raises(SamplerError):
            PrefixWeightIndex([0, 0], integer=True).sample(stream)


class TestFindByCumulative:
    """Tests for cumulative lookup."""

    @pytest.mark.parametrize("size", [1, 2, 3, 7, 8, 9, 100])
    def test_matches_naive_search(self, size: int) -> None:
        """Test every cumulative value maps to the naive answer."""
        weights = [fake.random_int(0, 5) for _ in range(size)]
        weights[-1] += 1
        index = PrefixWeightIndex(weights, integer=True)

        for r in range(index.total):
            assert index.find_by_cumulative(r) == _naive_find(weights, r)

    def test_skips_zero_weights(self) -> None:
        """Test zero-weight positions are never returned."""
        index = PrefixWeightIndex([0, 3, 0, 0, 2, 0], integer=True)

        found = {index.find_by_cumulative(r) for r in range(5)}
        assert found == {1, 4}

    def test_float_example(self) -> None:
        """Test lookup over float weights."""
        index = PrefixWeightIndex([0.2, 0.3, 0.5])

        assert index.find_by_cumulative(0.0) == 0
        assert index.find_by_cumulative(0.4) == 1
        assert index.find_by_cumulative(0.99) == 2

    def test_float_overshoot(self) -> None:
        """Test a draw at the total lands on the last positive weight."""
        index = PrefixWeightIndex([0.25, 0.75, 0.0])

        assert index.find_by_cumulative(index.total) == 1


class TestUpdate:
    """Tests for updates and deletions."""

    def test_update_moves_prefix(self) -> None:
        """Test updates propagate to later prefixes."""
        index = PrefixWeightIndex([1, 1, 1, 1], integer=True)
        index.update(1, 5)

        assert index.weight(1) == 5
        assert index.prefix(2) == 6
        assert index.total == 8

    def test_delete_retires_position(self, stream: RandomStream) -> None:
        """Test deleted positions are never sampled or updated again."""
        index = PrefixWeightIndex([1, 1, 1], integer=True)
        index.delete(1)

        assert index.live_count == 2
        assert not index.is_live(1)
        assert index.total == 2
        assert 1 not in {index.sample(stream) for _ in range(200)}
        with pytest.raises(SamplerError):
            index.update(1, 3)

    def test_update_checks(self) -> None:
        """Test invalid updates raise."""
        index = PrefixWeightIndex([1, 2], integer=True)

        with pytest.raises(SamplerError):
            index.update(2, 1)
        with pytest.raises(SamplerError):
            index.update(0, -1)
        with pytest.raises(SamplerError):
            index.update(0, 2**63)

    def test_float_rebuild(self) -> None:
        """Test periodic rebuilds keep the tree consistent."""
        index = PrefixWeightIndex(
            [0.1] * 8, settings=Settings(rebuild_interval=1)
        )
        for step in range(40):
            index.update(step % 8, 0.1 + step * 1e-3)

        assert index.total == pytest.approx(math.fsum(index.weights()))
        assert index.prefix(8) == pytest.approx(index.total)

    def test_deletions_match_oracle(self) -> None:
        """Test random deletions keep lookups equal to the naive search."""
        weights = [fake.random_int(1, 9) for _ in range(40)]
        index = PrefixWeightIndex(weights, integer=True)
        for position in fake.random_elements(
            list(range(40)), length=15, unique=True
        ):
            index.delete(position)
            weights[position] = 0

        for r in range(index.total):
            assert index.find_by_cumulative(r) == _naive_find(weights, r)


class TestSampling:
    """Statistical tests of weighted sampling."""

    def test_sample_proportional(self) -> None:
        """Test sampling frequencies follow [1, 2, 3, 4]."""
        index = PrefixWeightIndex([1.0, 2.0, 3.0, 4.0])
        stream = RandomStream.from_seed(17)
        trials = 40_000
        counts = Counter(index.sample(stream) for _ in range(trials))

        observed = [counts[i] for i in range(4)]
        expected = [trials * w / 10 for w in (1, 2, 3, 4)]
        assert chisquare(observed, expected).pvalue > SIGNIFICANCE

    def test_sample_excluding_proportional(self) -> None:
        """Test exclusion renormalises over the remaining weights."""
        index = PrefixWeightIndex([1, 2, 3, 4], integer=True)
        stream = RandomStream.from_seed(18)
        trials = 40_000
        counts = Counter(
            index.sample_excluding(1, stream) for _ in range(trials)
        )

        assert counts[1] == 0
        observed = [counts[i] for i in (0, 2, 3)]
        expected = [trials * w / 8 for w in (1, 3, 4)]
        assert chisquare(observed, expected).pvalue > SIGNIFICANCE

    @pytest.mark.parametrize("excluded", [0, 1, 2])
    def test_sample_excluding_never_returns_excluded(
        self, excluded: int, stream: RandomStream
    ) -> None:
        """Test the excluded position is never drawn in float mode."""
        index = PrefixWeightIndex([0.3, 0.3, 0.4])

        draws = {index.sample_excluding(excluded, stream) for _ in range(500)}
        assert excluded not in draws

    def test_sample_excluding_without_rest(
        self, stream: RandomStream
    ) -> None:
        """Test exclusion fails when nothing else has weight."""
        index = PrefixWeightIndex([0.0, 1.0])

        with pytest.raises(SamplerError):
            index.sample_excluding(1, stream)


def _scan_find(weights: list, r) -> int:
    running = 0
    for position, w in enumerate(weights):
        running += w
        if r < running:
            return position
    raise AssertionError(f"{r} is beyond the total {running}")


class TestAgainstLinearScan:
    """Interleaved random operations checked against a plain list."""

    @pytest.mark.parametrize("integer", [True, False])
    @pytest.mark.parametrize("seed", range(10))
    def test_interleaved_operations(self, integer: bool, seed: int) -> None:
        """Test a thousand mixed operations agree with a linear scan."""
        faker = Faker()
        faker.seed_instance(seed)
        # Float weights are multiples of 1/8 so every sum is exact.
        scale = 1 if integer else 8

        def weight() -> float:
            w = faker.random_int(0, 9 * scale)
            return w if integer else w / scale

        size = faker.random_int(1, 64)
        weights = [weight() for _ in range(size)]
        live = [True] * size
        index = PrefixWeightIndex(weights, integer=integer)
        stream = RandomStream.from_seed(seed)
        twin = RandomStream.from_seed(seed)

        for _ in range(1000):
            operation = faker.random_element(
                ["update", "delete", "find", "exclude"]
            )
            alive = [p for p in range(size) if live[p]]
            if operation == "update" and alive:
                position = faker.random_element(alive)
                weights[position] = weight()
                index.update(position, weights[position])
            elif operation == "delete" and alive:
                position = faker.random_element(alive)
                weights[position] = 0
                live[position] = False
                index.delete(position)
            elif operation == "find" and sum(weights) > 0:
                top = int(sum(weights) * scale)
                r = faker.random_int(0, top - 1)
                if not integer:
                    r /= scale
                assert index.find_by_cumulative(r) == _scan_find(weights, r)
            elif operation == "exclude":
                excluded = faker.random_int(0, size - 1)
                w = weights[excluded]
                rest = sum(weights) - w
                if rest <= 0:
                    with pytest.raises(SamplerError):
                        index.sample_excluding(excluded, stream)
                    continue
                if integer:
                    r = twin.integer_below(rest)
                else:
                    r = twin.uniform() * rest
                if r >= sum(weights[:excluded]):
                    r += w
                expected = _scan_find(weights, r)
                assert index.sample_excluding(excluded, stream) == expected

            assert index.total == sum(weights)
            assert index.live_count == sum(live)

    @pytest.mark.slow
    def test_build_is_linear(self) -> None:
        """Test doubling the size at most triples the build time."""

        def build_time(size: int) -> float:
            weights = [float(i % 97 + 1) for i in range(size)]
            best = math.inf
            for _ in range(3):
                start = time.perf_counter()
                PrefixWeightIndex(weights)
                best = min(best, time.perf_counter() - start)
            return best

        assert build_time(2**20) <= 3 * build_time(2**19)
