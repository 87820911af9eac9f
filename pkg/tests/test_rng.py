"""Tests for seeded random streams."""

import numpy as np
import pytest

from regmatch.config import Settings, configure
from regmatch.rng import RandomStream, as_stream, stream_for


class TestRandomStream:
    """Tests for RandomStream."""

    def test_reproducible(self) -> None:
        """Test equal seeds give equal draws."""
        first = RandomStream.from_seed(99)
        second = RandomStream.from_seed(99)

        assert [first.uniform() for _ in range(10)] == [
            second.uniform() for _ in range(10)
        ]

    def test_buffer_refill(self) -> None:
        """Test draws continue past the end of a buffer."""
        stream = RandomStream.from_seed(1, settings=Settings(rng_buffer_size=3))

        draws = [stream.uniform() for _ in range(10)]

        assert all(0.0 <= x < 1.0 for x in draws)
        assert len(set(draws)) == 10

    @pytest.mark.parametrize("k", [1, 2, 7, 1000])
    def test_below(self, stream: RandomStream, k: int) -> None:
        """Test small integer draws stay in range."""
        assert all(0 <= stream.below(k) < k for _ in range(200))

    def test_integer_below_large(self, stream: RandomStream) -> None:
        """Test exact draws work near 2**63."""
        assert 0 <= stream.integer_below(2**63 - 1) < 2**63 - 1

    def test_spawn(self, stream: RandomStream) -> None:
        """Test child streams differ from each other."""
        first, second = stream.spawn(2)

        assert first.uniform() != second.uniform()

    def test_default_seed(self) -> None:
        """Test a missing seed falls back to the configured default."""
        configure(default_seed=21)

        assert RandomStream.from_seed().uniform() == (
            RandomStream.from_seed(21).uniform()
        )


class TestCoercion:
    """Tests for as_stream and stream_for."""

    def test_stream_passes_through(self, stream: RandomStream) -> None:
        """Test an existing stream is returned as is."""
        assert as_stream(stream) is stream

    def test_generator_is_wrapped(self) -> None:
        """Test numpy generators are wrapped without reseeding."""
        generator = np.random.default_rng(5)

        assert as_stream(generator).generator is generator

    def test_int_seed(self) -> None:
        """Test integers seed a fresh stream."""
        assert as_stream(8).uniform() == RandomStream.from_seed(8).uniform()

    def test_stream_for_keys(self) -> None:
        """Test cell streams depend on every key."""
        base = stream_for(0, 16, 4).uniform()

        assert stream_for(0, 16, 4).uniform() == base
        assert stream_for(0, 16, 5).uniform() != base
        assert stream_for(1, 16, 4).uniform() != base
