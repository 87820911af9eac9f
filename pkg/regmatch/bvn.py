"""Support matchings and Birkhoff-von Neumann decomposition by weighted walks.

A doubly stochastic matrix is a balanced weighted bipartite graph. The walk
of :mod:`regmatch.walk` runs on its support unchanged, except that a row is
sampled in proportion to its entry weights and a supernode excludes its
matched entry exactly.
"""

import logging
import math
from pathlib import Path
from typing import (
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from regmatch.baselines import hopcroft_karp
from regmatch.config import Settings, resolve_settings
from regmatch.exceptions import (
    GraphFormatError,
    NotDoublyStochasticError,
    SamplerError,
    SupportError,
    WalkCapExceededError,
)
from regmatch.graph import Matching
from regmatch.models import BvnDecomposition, BvnTerm, ValidationReport
from regmatch.rng import RandomStream, SeedLike, as_stream
from regmatch.sampler import PrefixWeightIndex
from regmatch.walk import run_augmentations

logger = logging.getLogger(__name__)

Number = Union[int, float]
Triplet = Tuple[int, int, Number]
PathLike = Union[str, Path]

FLOAT_MODE = "float"
INTEGER_MODE = "integer"


class StochasticSupportMatrix:
    """
    Sparse doubly stochastic matrix with a prefix-weight index per row.

    Entries keep their arrival order inside each row. Entries that reach the
    zero threshold are deleted from the row index and from the column sums;
    ``mass`` tracks the total weight still present.

    Args:
        n: Dimension
        rows: Per row, (column, weight) pairs in arrival order
        integer: Whether weights are exact integers
        settings: Optional settings

    Use :func:`load_matrix` to build a validated instance.
    """

    def __init__(
        self,
        n: int,
        rows: Sequence[Sequence[Tuple[int, Number]]],
        integer: bool = False,
        settings: Optional[Settings] = None,
    ) -> None:
        self.settings = resolve_settings(settings)
        self.n = n
        self.integer = integer
        self.cols: List[List[int]] = [[q for q, _ in row] for row in rows]
        self.index: List[PrefixWeightIndex] = [
            PrefixWeightIndex(
                [w for _, w in row], integer=integer, settings=self.settings
            )
            for row in rows
        ]
        self._slots: List[Dict[int, int]] = [
            {q: slot for slot, q in enumerate(cols)} for cols in self.cols
        ]
        zero: Number = 0 if integer else 0.0
        self.colsum: List[Number] = [zero] * n
        for row in rows:
            for q, w in row:
                self.colsum[q] += w
        if integer:
            self.mass: Number = sum(index.total for index in self.index)
        else:
            self.mass = math.fsum(index.total for index in self.index)
        self.initial_mass = self.mass
        self.dropped_mass: Number = zero
        self.m = sum(len(cols) for cols in self.cols)

    @property
    def n_q(self) -> int:
        return self.n

    @property
    def mode(self) -> str:
        return INTEGER_MODE if self.integer else FLOAT_MODE

    def sample_row(self, p: int, rng: RandomStream) -> Tuple[int, int]:
        slot = self.index[p].sample(rng)
        return self.cols[p][slot], slot

    def sample_row_excluding(
        self, p: int, excluded_slot: int, rng: RandomStream
    ) -> Tuple[int, int]:
        slot = self.index[p].sample_excluding(excluded_slot, rng)
        return self.cols[p][slot], slot

    def column_at(self, p: int, slot: int) -> int:
        return self.cols[p][slot]

    def slot_of(self, p: int, q: int) -> int:
        slot = self._slots[p].get(q)
        if slot is None:
            raise SupportError(f"({p}, {q}) is not in the support")
        return slot

    def weight(self, p: int, q: int) -> Number:
        """Current weight of entry (p, q), 0 outside the support."""
        slot = self._slots[p].get(q)
        return 0 if slot is None else self.index[p].weight(slot)

    def row_sum(self, p: int) -> Number:
        return self.index[p].total

    def entries(self) -> Iterable[Triplet]:
        """Yield live (row, col, weight) entries in arrival order."""
        for p, cols in enumerate(self.cols):
            index = self.index[p]
            for slot, q in enumerate(cols):
                if index.is_live(slot):
                    yield p, q, index.weight(slot)

    def support_adjacency(self) -> List[List[int]]:
        """Per row, the columns of its live entries."""
        return support_adjacency(self)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(
            (self.n, self.n), dtype=np.int64 if self.integer else np.float64
        )
        for p, q, w in self.entries():
            dense[p, q] = w
        return dense

    def copy(self) -> "StochasticSupportMatrix":
        return load_matrix(
            list(self.entries()), self.n, self.integer, self.settings
        )

    def _subtract(self, p: int, q: int, amount: Number) -> None:
        slot = self._slots[p][q]
        index = self.index[p]
        left = index.weight(slot) - amount
        threshold = 0 if self.integer else self.settings.zero_epsilon
        self.colsum[q] -= amount
        self.mass -= amount
        if left <= threshold:
            index.delete(slot)
            del self._slots[p][q]
            self.m -= 1
            if left > 0:
                self.colsum[q] -= left
                self.mass -= left
                self.dropped_mass += left
                logger.warning(
                    "dropped entry (%d, %d) of weight %g under the zero "
                    "threshold",
                    p,
                    q,
                    left,
                )
        else:
            index.update(slot, left)

    def __repr__(self) -> str:
        return (
            f"StochasticSupportMatrix(n={self.n}, m={self.m}, "
            f"mode={self.mode}, mass={self.mass})"
        )


def _display(value: Number) -> str:
    return str(value) if isinstance(value, int) else f"{value:.12g}"


def load_matrix(
    triplets: Iterable[Triplet],
    n: Optional[int] = None,
    integer: bool = False,
    settings: Optional[Settings] = None,
) -> StochasticSupportMatrix:
    """
    Validate (row, col, weight) triplets and build a support matrix.

    Every row and column must sum to mass / n, within
    ``sum_tolerance * n`` in float mode and exactly in integer mode.

    Args:
        triplets: Entries in arrival order
        n: Dimension; inferred from the largest index when omitted
        integer: Treat weights as exact integers
        settings: Optional settings

    Returns:
        Validated matrix; building is linear in the entry count

    Raises:
        GraphFormatError: On a duplicate entry, an index out of range or a
            weight that is not positive
        NotDoublyStochasticError: When a row or column sum deviates

    Example:
        >>> matrix = load_matrix([(0, 0, 0.5), (0, 1, 0.5),
        ...                       (1, 0, 0.5), (1, 1, 0.5)])
        >>> matrix.mass, matrix.m
        (2.0, 4)
    """
    settings = resolve_settings(settings)
    entries = [
        (int(p), int(q), int(w) if integer else float(w))
        for p, q, w in triplets
    ]
    if n is None:
        n = 1 + max((max(p, q) for p, q, _ in entries), default=-1)
    if n < 1:
        raise GraphFormatError("matrix has no entries")
    rows: List[List[Tuple[int, Number]]] = [[] for _ in range(n)]
    seen = set()
    for p, q, w in entries:
        if not (0 <= p < n and 0 <= q < n):
            raise GraphFormatError(f"entry ({p}, {q}) outside [0, {n})")
        if (p, q) in seen:
            raise GraphFormatError(f"duplicate entry ({p}, {q})")
        if w <= 0:
            raise GraphFormatError(f"entry ({p}, {q}) has weight {w} <= 0")
        seen.add((p, q))
        rows[p].append((q, w))

    col_sums: List[List[Number]] = [[] for _ in range(n)]
    row_sums: List[Number] = []
    for row in rows:
        for q, w in row:
            col_sums[q].append(w)
    if integer:
        row_sums = [sum(w for _, w in row) for row in rows]
        column_totals = [sum(ws) for ws in col_sums]
        mass: Number = sum(row_sums)
        if mass % n:
            raise NotDoublyStochasticError(
                f"total {mass} is not divisible by n={n}"
            )
        target: Number = mass // n
        tolerance: float = 0
    else:
        row_sums = [math.fsum(w for _, w in row) for row in rows]
        column_totals = [math.fsum(ws) for ws in col_sums]
        mass = math.fsum(row_sums)
        target = mass / n
        tolerance = settings.sum_tolerance * n
    for kind, sums in (("row", row_sums), ("column", column_totals)):
        for i, s in enumerate(sums):
            if abs(s - target) > tolerance:
                raise NotDoublyStochasticError(
                    f"{kind} {i} sums to {_display(s)}, "
                    f"expected {_display(target)}"
                )
    if mass <= 0:
        raise NotDoublyStochasticError("matrix has no mass")
    return StochasticSupportMatrix(n, rows, integer=integer, settings=settings)


def from_dense(
    dense: np.ndarray,
    integer: bool = False,
    settings: Optional[Settings] = None,
) -> StochasticSupportMatrix:
    """Load the nonzero entries of a dense square array, row by row."""
    array = np.asarray(dense)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise GraphFormatError("matrix must be square")
    rows, cols = np.nonzero(array)
    triplets = [
        (int(p), int(q), array[p, q].item()) for p, q in zip(rows, cols)
    ]
    return load_matrix(triplets, array.shape[0], integer, settings)


def support_adjacency(matrix: StochasticSupportMatrix) -> List[List[int]]:
    """Adjacency rows of the support graph, live entries only."""
    adjacency: List[List[int]] = [[] for _ in range(matrix.n)]
    for p, q, _ in matrix.entries():
        adjacency[p].append(q)
    return adjacency


def find_support_matching(
    matrix: StochasticSupportMatrix,
    rng: SeedLike = None,
    settings: Optional[Settings] = None,
) -> Matching:
    """
    Find a perfect matching inside the support of ``matrix``.

    Budgets and the global step cap are those of the unweighted walk.

    Raises:
        SupportError: If the matrix is empty, a supernode row has no other
            entry, or the step cap is exhausted; each means the support has
            no perfect matching
    """
    if matrix.mass <= 0 or matrix.m < matrix.n:
        raise SupportError("matrix support is too small for a matching")
    settings = settings or matrix.settings
    matching = Matching(matrix.n)
    try:
        stats = run_augmentations(
            matrix,
            matching,
            as_stream(rng, settings),
            record_phases=False,
            settings=settings,
        )
    except (WalkCapExceededError, SamplerError) as exc:
        raise SupportError(
            f"no perfect matching found in the support: {exc}"
        ) from exc
    logger.debug(
        "support matching of n=%d in %d steps", matrix.n, stats.total_steps
    )
    return matching


def extract_matching(
    matrix: StochasticSupportMatrix,
    rng: SeedLike = None,
    settings: Optional[Settings] = None,
) -> Tuple[Number, List[int]]:
    """
    Peel one weighted permutation off ``matrix``, in place.

    The coefficient is the smallest entry along a support matching; it is
    subtracted from every matched entry and entries at the zero threshold
    are deleted, so at least one entry disappears per call.

    Returns:
        (coefficient, permutation)
    """
    matching = find_support_matching(matrix, rng, settings)
    permutation = list(matching.match_p)
    coefficient = min(
        matrix.weight(p, q) for p, q in enumerate(permutation)
    )
    for p, q in enumerate(permutation):
        matrix._subtract(p, q, coefficient)
    return coefficient, permutation


def _rounding_tail(
    matrix: StochasticSupportMatrix, settings: Settings
) -> float:
    # Float mass at or below this is rounding left over from subtractions.
    if matrix.integer:
        return 0.0
    return settings.sum_tolerance * float(matrix.initial_mass)


def _support_is_perfect(matrix: StochasticSupportMatrix) -> bool:
    adjacency = support_adjacency(matrix)
    return hopcroft_karp(adjacency, n_q=matrix.n).size == matrix.n


def _log_tail_stop(matrix: StochasticSupportMatrix) -> None:
    logger.info(
        "support of the remaining mass %.3g has no perfect matching; "
        "keeping it as residual",
        matrix.mass,
    )


def decompose(
    matrix: StochasticSupportMatrix,
    k: Optional[int] = None,
    rng: SeedLike = None,
    settings: Optional[Settings] = None,
) -> BvnDecomposition:
    """
    Greedy Birkhoff-von Neumann decomposition; consumes ``matrix``.

    Extracts up to ``k`` terms (all of them when ``k`` is None), stopping
    once fewer than n entries remain. In float mode the run also stops when
    the remaining mass is below ``zero_epsilon * n``, or when the mass is
    within ``sum_tolerance`` of the starting mass and its support no longer
    holds a perfect matching. Whatever is left is reported as ``residual``,
    a fraction of the starting mass.

    Args:
        matrix: Matrix to decompose; left holding the residual
        k: Maximum number of terms
        rng: Seed, generator or stream
        settings: Optional settings

    Returns:
        The ordered decomposition

    Example:
        >>> matrix = load_matrix([(0, 0, 1.0), (1, 1, 1.0)])
        >>> [term.coefficient for term in decompose(matrix, rng=0).terms]
        [1.0]
    """
    settings = settings or matrix.settings
    stream = as_stream(rng, settings)
    floor = 0 if matrix.integer else settings.zero_epsilon * matrix.n
    tail = _rounding_tail(matrix, settings)
    terms: List[BvnTerm] = []
    while matrix.m >= matrix.n and matrix.mass > floor:
        if k is not None and len(terms) >= k:
            break
        if matrix.mass <= tail and not _support_is_perfect(matrix):
            _log_tail_stop(matrix)
            break
        try:
            coefficient, permutation = extract_matching(
                matrix, stream, settings
            )
        except SupportError:
            if matrix.mass > tail:
                raise
            _log_tail_stop(matrix)
            break
        terms.append(
            BvnTerm(coefficient=coefficient, permutation=permutation)
        )
    residual = max(float(matrix.mass) / float(matrix.initial_mass), 0.0)
    logger.info(
        "decomposed n=%d into %d terms, residual %.3g",
        matrix.n,
        len(terms),
        residual,
    )
    return BvnDecomposition(
        n=matrix.n, integer=matrix.integer, terms=terms, residual=residual
    )


def reconstruct(decomposition: BvnDecomposition) -> np.ndarray:
    """Dense sum of coefficient times permutation matrix over all terms."""
    n = decomposition.n
    dense = np.zeros(
        (n, n), dtype=np.int64 if decomposition.integer else np.float64
    )
    rows = np.arange(n)
    for term in decomposition.terms:
        dense[rows, term.permutation] += term.coefficient
    return dense


def reconstruction_error(
    decomposition: BvnDecomposition,
    original: np.ndarray,
    residual: Optional[np.ndarray] = None,
) -> float:
    """Largest entrywise deviation of terms plus residual from ``original``."""
    total = reconstruct(decomposition)
    if residual is not None:
        total = total + residual
    return float(np.max(np.abs(total - np.asarray(original)), initial=0.0))


def verify_decomposition(
    decomposition: BvnDecomposition,
    original: np.ndarray,
    residual: Optional[np.ndarray] = None,
    settings: Optional[Settings] = None,
) -> ValidationReport:
    """
    Check that a decomposition reconstructs ``original``.

    Integer decompositions must match exactly; float ones within
    ``sum_tolerance`` times the largest row sum.
    """
    settings = resolve_settings(settings)
    original = np.asarray(original)
    n = decomposition.n
    if original.shape != (n, n):
        return ValidationReport.violation(
            "dimension", None, f"original is {original.shape}, terms are {n}"
        )
    error = reconstruction_error(decomposition, original, residual)
    if decomposition.integer:
        tolerance = 0.0
    else:
        scale = float(np.max(original.sum(axis=1), initial=1.0))
        tolerance = settings.sum_tolerance * max(scale, 1.0)
    if error > tolerance:
        return ValidationReport.violation(
            "reconstruction",
            None,
            f"entrywise error {error:.3g} exceeds {tolerance:.3g}",
        )
    return ValidationReport.passed()


def gen_convex_permutations(
    n: int,
    perms: int,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> StochasticSupportMatrix:
    """
    Random convex combination of ``perms`` uniform random permutations.

    Coefficients are Dirichlet(1, ..., 1), so rows and columns sum to 1.
    """
    if n < 1 or perms < 1:
        raise ValueError(f"need n >= 1 and perms >= 1, got {n}, {perms}")
    rng = np.random.default_rng(seed)
    coefficients = rng.dirichlet(np.ones(perms))
    weights: Dict[Tuple[int, int], float] = {}
    for coefficient in coefficients:
        for p, q in enumerate(rng.permutation(n)):
            key = (p, int(q))
            weights[key] = weights.get(key, 0.0) + float(coefficient)
    triplets = [(p, q, w) for (p, q), w in weights.items()]
    return load_matrix(triplets, n, integer=False, settings=settings)


def gen_integer_regular(
    n: int,
    degree: int,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> StochasticSupportMatrix:
    """
    Union of ``degree`` random permutations with multiplicities merged.

    The result is an integer matrix whose rows and columns all sum to
    ``degree``: a regular multigraph in weighted form.
    """
    if n < 1 or degree < 1:
        raise ValueError(f"need n >= 1 and D >= 1, got {n}, {degree}")
    rng = np.random.default_rng(seed)
    weights: Dict[Tuple[int, int], int] = {}
    for _ in range(degree):
        for p, q in enumerate(rng.permutation(n)):
            key = (p, int(q))
            weights[key] = weights.get(key, 0) + 1
    triplets = [(p, q, w) for (p, q), w in weights.items()]
    return load_matrix(triplets, n, integer=True, settings=settings)


def format_matrix(matrix: StochasticSupportMatrix) -> str:
    """Render the matrix text format: ``n m mode`` then ``row col weight``."""
    entries = list(matrix.entries())
    lines = [f"{matrix.n} {len(entries)} {matrix.mode}"]
    lines += [f"{p} {q} {w!r}" for p, q, w in entries]
    return "\n".join(lines) + "\n"


def parse_matrix(
    text: str, settings: Optional[Settings] = None
) -> StochasticSupportMatrix:
    """
    Parse the matrix text format.

    Raises:
        GraphFormatError: On a malformed header or entry line
        NotDoublyStochasticError: When the entries are not balanced
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise GraphFormatError("empty input", 1)
    header = lines[0].split()
    if len(header) != 3 or header[2] not in (FLOAT_MODE, INTEGER_MODE):
        raise GraphFormatError("header must be 'n m float|integer'", 1)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise GraphFormatError("header must be 'n m float|integer'", 1)
    integer = header[2] == INTEGER_MODE
    if len(lines) - 1 != m:
        raise GraphFormatError(
            f"expected {m} entries, found {len(lines) - 1}", len(lines)
        )
    triplets: List[Triplet] = []
    for offset, raw in enumerate(lines[1:]):
        parts = raw.split()
        if len(parts) != 3:
            raise GraphFormatError("expected 'row col weight'", offset + 2)
        try:
            weight: Number = int(parts[2]) if integer else float(parts[2])
            triplets.append((int(parts[0]), int(parts[1]), weight))
        except ValueError:
            raise GraphFormatError(f"bad entry {raw!r}", offset + 2)
    return load_matrix(triplets, n, integer=integer, settings=settings)


def read_matrix(
    path: PathLike, settings: Optional[Settings] = None
) -> StochasticSupportMatrix:
    """Read a matrix file."""
    return parse_matrix(Path(path).read_text(), settings)


def write_matrix(matrix: StochasticSupportMatrix, path: PathLike) -> None:
    """Write a matrix file."""
    Path(path).write_text(format_matrix(matrix))


def format_decomposition(decomposition: BvnDecomposition) -> str:
    """One line per term: the coefficient, then the permutation."""
    return "".join(
        f"{term.coefficient!r} {' '.join(map(str, term.permutation))}\n"
        for term in decomposition.terms
    )


def parse_decomposition(
    text: str, n: Optional[int] = None, integer: bool = False
) -> BvnDecomposition:
    """Parse decomposition lines back into a :class:`BvnDecomposition`."""
    terms: List[BvnTerm] = []
    for offset, raw in enumerate(text.splitlines()):
        parts = raw.split()
        if not parts:
            continue
        try:
            coefficient: Number = (
                int(parts[0]) if integer else float(parts[0])
            )
            permutation = [int(token) for token in parts[1:]]
        except ValueError:
            raise GraphFormatError(f"bad term {raw!r}", offset + 1)
        if n is None:
            n = len(permutation)
        if len(permutation) != n:
            raise GraphFormatError(
                f"term has {len(permutation)} columns, expected {n}",
                offset + 1,
            )
        terms.append(BvnTerm(coefficient=coefficient, permutation=permutation))
    if n is None:
        raise GraphFormatError("no terms and no dimension given")
    return BvnDecomposition(n=n, integer=integer, terms=terms)


def read_decomposition(
    path: PathLike, n: Optional[int] = None, integer: bool = False
) -> BvnDecomposition:
    """Read a decomposition file."""
    return parse_decomposition(Path(path).read_text(), n, integer)


def write_decomposition(
    decomposition: BvnDecomposition, path: PathLike
) -> None:
    """Write a decomposition file."""
    Path(path).write_text(format_decomposition(decomposition))
