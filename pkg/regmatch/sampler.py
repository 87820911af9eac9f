"""Prefix-weight index for weighted sampling over a fixed arrival order."""

import logging
import math
from typing import List, Optional, Sequence, Union

from regmatch.config import Settings, resolve_settings
from regmatch.exceptions import SamplerError
from regmatch.rng import RandomStream

logger = logging.getLogger(__name__)

Weight = Union[int, float]

INT64_LIMIT = 2**63


class PrefixWeightIndex:
    """
    Cumulative weights over an array, kept in a Fenwick layout.

    Positions keep the order in which the weights were given, so building
    needs no sort and runs in linear time. Sampling, point updates and
    deletions are logarithmic. Deleted positions hold weight 0 and are
    never returned.

    In integer mode all arithmetic is exact and the total must stay below
    2**63. In float mode the tree is rebuilt with compensated summation
    after ``rebuild_interval * size`` updates to bound drift.

    Args:
        weights: Nonnegative weights in arrival order
        integer: Use exact integer arithmetic
        settings: Optional settings (rebuild period)

    Raises:
        SamplerError: On a negative weight or integer overflow

    Example:
        >>> index = PrefixWeightIndex([0.2, 0.3, 0.5])
        >>> index.find_by_cumulative(0.4)
        1
    """

    def __init__(
        self,
        weights: Sequence[Weight],
        integer: bool = False,
        settings: Optional[Settings] = None,
    ) -> None:
        settings = resolve_settings(settings)
        self.integer = integer
        self.size = len(weights)
        self._weights: List[Weight] = [
            int(w) if integer else float(w) for w in weights
        ]
        for position, w in enumerate(self._weights):
            if w < 0:
                raise SamplerError(
                    f"negative weight {w} at position {position}"
                )
        self._live: List[bool] = [True] * self.size
        self._live_count = self.size
        self._rebuild_after = settings.rebuild_interval * max(self.size, 1)
        self._updates = 0
        self._top = 1 << max(self.size.bit_length() - 1, 0)
        self._tree: List[Weight] = []
        self.total: Weight = 0
        self._build()

    @classmethod
    def build(
        cls,
        weights: Sequence[Weight],
        integer: bool = False,
        settings: Optional[Settings] = None,
    ) -> "PrefixWeightIndex":
        """Build an index over ``weights`` in linear time."""
        return cls(weights, integer=integer, settings=settings)

    def _build(self) -> None:
        tree = [0 if self.integer else 0.0] + list(self._weights)
        n = self.size
        for i in range(1, n + 1):
            parent = i + (i & -i)
            if parent <= n:
                tree[parent] += tree[i]
        self._tree = tree
        if self.integer:
            self.total = sum(self._weights)
            if self.total >= INT64_LIMIT:
                raise SamplerError("integer total overflows 64 bits")
        else:
            self.total = math.fsum(self._weights)

    def rebuild(self) -> None:
        """Recompute the tree and total from the stored weights."""
        self._build()
        self._updates = 0
        logger.debug("rebuilt prefix index of size %d", self.size)

    @property
    def live_count(self) -> int:
        """Number of positions not deleted."""
        return self._live_count

    def is_live(self, position: int) -> bool:
        self._check(position)
        return self._live[position]

    def weight(self, position: int) -> Weight:
        self._check(position)
        return self._weights[position]

    def weights(self) -> List[Weight]:
        return list(self._weights)

    def prefix(self, position: int) -> Weight:
        """Sum of the weights strictly before ``position``."""
        if not 0 <= position <= self.size:
            raise SamplerError(f"position {position} out of range")
        total: Weight = 0
        i = position
        tree = self._tree
        while i > 0:
            total += tree[i]
            i &= i - 1
        return total

    def _check(self, position: int) -> None:
        if not 0 <= position < self.size:
            raise SamplerError(
                f"position {position} out of range [0, {self.size})"
            )

    def _add(self, position: int, delta: Weight) -> None:
        tree = self._tree
        i = position + 1
        n = self.size
        while i <= n:
            tree[i] += delta
            i += i & -i

    def update(self, position: int, new_weight: Weight) -> None:
        """
        Set the weight of a live position.

        Raises:
            SamplerError: If the position is out of range or deleted, or the
                weight is negative
        """
        self._check(position)
        if not self._live[position]:
            raise SamplerError(f"position {position} is deleted")
        new_weight = int(new_weight) if self.integer else float(new_weight)
        if new_weight < 0:
            raise SamplerError(f"negative weight {new_weight}")
        delta = new_weight - self._weights[position]
        if self.integer and self.total + delta >= INT64_LIMIT:
            raise SamplerError("integer total overflows 64 bits")
        self._weights[position] = new_weight
        self._add(position, delta)
        self.total += delta
        if not self.integer:
            self._updates += 1
            if self._updates >= self._rebuild_after:
                self.rebuild()

    def delete(self, position: int) -> None:
        """Set a position's weight to 0 and retire it."""
        self.update(position, 0)
        self._live[position] = False
        self._live_count -= 1

    def find_by_cumulative(self, r: Weight) -> int:
        """
        Return the position i with prefix(i) <= r < prefix(i) + weight(i).

        Raises:
            SamplerError: If the index holds no mass
        """
        if self.total <= 0:
            raise SamplerError("cannot sample from an empty index")
        tree = self._tree
        n = self.size
        position = 0
        remaining = r
        step = self._top
        while step:
            nxt = position + step
            if nxt <= n and tree[nxt] <= remaining:
                position = nxt
                remaining -= tree[nxt]
            step >>= 1
        if position >= n or self._weights[position] <= 0:
            position = self._nearest_positive(min(position, n - 1))
        return position

    def _nearest_positive(self, position: int, avoid: int = -1) -> int:
        # float rounding can land just past the last positive weight
        weights = self._weights
        for i in range(position, -1, -1):
            if weights[i] > 0 and i != avoid:
                return i
        for i in range(position + 1, self.size):
            if weights[i] > 0 and i != avoid:
                return i
        raise SamplerError("no positive weight left to sample")

    def _draw(self, bound: Weight, rng: RandomStream) -> Weight:
        if self.integer:
            return rng.integer_below(int(bound))
        return rng.uniform() * bound

    def sample(self, rng: RandomStream) -> int:
        """Return a position with probability proportional to its weight."""
        if self.total <= 0:
            raise SamplerError("cannot sample from an empty index")
        return self.find_by_cumulative(self._draw(self.total, rng))

    def sample_excluding(self, excluded: int, rng: RandomStream) -> int:
        """
        Sample proportionally to weight among all positions but ``excluded``.

        A draw in [0, total - w) is shifted past the excluded range, so the
        distribution is exact with no rejection loop.

        Raises:
            SamplerError: If every other position has zero weight
        """
        self._check(excluded)
        w = self._weights[excluded]
        rest = self.total - w
        if rest <= 0:
            raise SamplerError(
                f"no mass outside position {excluded} to sample from"
            )
        r = self._draw(rest, rng)
        if r >= self.prefix(excluded):
            r += w
        position = self.find_by_cumulative(r)
        if position == excluded:
            position = self._nearest_positive(excluded, avoid=excluded)
        return position

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return (
            f"PrefixWeightIndex(size={self.size}, live={self._live_count}, "
            f"total={self.total})"
        )
