"""Pytest configuration and fixtures."""

from typing import Iterator

import pytest
from faker import Faker

from regmatch.bvn import StochasticSupportMatrix, load_matrix
from regmatch.config import Settings, reset_settings
from regmatch.graph import BipartiteRegularGraph, gen_union_permutations
from regmatch.rng import RandomStream

fake = Faker()


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Drop global settings and REGMATCH_ variables around every test."""
    for name in Settings.model_fields:
        monkeypatch.delenv("REGMATCH_" + name.upper(), raising=False)
    monkeypatch.delenv("REGMATCH_LOG_LEVEL", raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def settings() -> Settings:
    """Return default settings."""
    return Settings()


@pytest.fixture
def stream() -> RandomStream:
    """Return a seeded random stream."""
    return RandomStream.from_seed(12345)


@pytest.fixture
def k22() -> BipartiteRegularGraph:
    """Return the complete bipartite graph K(2,2)."""
    return BipartiteRegularGraph([[0, 1], [0, 1]])


@pytest.fixture
def double_edge() -> BipartiteRegularGraph:
    """Return the 2-regular multigraph with each p joined twice to q = p."""
    return BipartiteRegularGraph([[0, 0], [1, 1]])


@pytest.fixture
def random_graph() -> BipartiteRegularGraph:
    """Return a seeded 4-regular multigraph on 64 vertices per side."""
    return gen_union_permutations(64, 4, seed=fake.random_int(0, 10_000))


@pytest.fixture
def simple_graph() -> BipartiteRegularGraph:
    """Return a seeded simple 3-regular graph on 32 vertices per side."""
    return gen_union_permutations(32, 3, seed=7, simple=True)


@pytest.fixture
def uniform_matrix() -> StochasticSupportMatrix:
    """Return the 2 x 2 matrix with every entry 1/2."""
    return load_matrix(
        [(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)]
    )


@pytest.fixture
def integer_matrix() -> StochasticSupportMatrix:
    """Return [[2, 1], [1, 2]] in integer mode."""
    return load_matrix(
        [(0, 0, 2), (0, 1, 1), (1, 0, 1), (1, 1, 2)], integer=True
    )
