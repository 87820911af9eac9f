"""Benchmark harness: seeded grids of matcher runs emitted as CSV."""

import csv
import logging
import math
import re
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import (
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    TextIO,
    Tuple,
    Union,
)

import numpy as np
from tqdm import tqdm

from regmatch import __version__
from regmatch.adversary import make_prober, run_game
from regmatch.baselines import euler_matching, hopcroft_karp
from regmatch.config import Settings, resolve_settings
from regmatch.decorators import verified
from regmatch.graph import (
    BipartiteRegularGraph,
    Matching,
    gen_union_permutations,
)
from regmatch.models import (
    BENCH_FIELDS,
    GAME_FIELDS,
    BenchRecord,
    CellSummary,
    GameRecord,
    HittingRecord,
    WalkStats,
    harmonic,
)
from regmatch.rng import RNG_IDENTITY, RandomStream, SeedLike, as_stream
from regmatch.walk import find_perfect_matching, hitting_time, partial_matching

logger = logging.getLogger(__name__)

ALGORITHMS = ("walk", "walk-untruncated", "hk", "euler")
WALK_ALGORITHMS = ("walk", "walk-untruncated")
SQRT = "sqrt"

GridValue = Union[int, str]

_POWER = re.compile(r"^(\d+)\^(\d+)$")


class Cell(NamedTuple):
    algo: str
    n: int
    d: int
    seed: int
    simple: bool = False


def _parse_value(token: str) -> Tuple[int, Optional[int]]:
    match = _POWER.match(token)
    if match:
        base, exponent = int(match.group(1)), int(match.group(2))
        return base**exponent, base
    return int(token), None


def parse_grid(text: str, allow_sqrt: bool = False) -> List[GridValue]:
    """
    Parse a grid such as ``2^8..2^12``, ``2,4,8`` or ``16``.

    A range between two powers of the same base steps through every power;
    a range between plain integers is inclusive. With ``allow_sqrt`` the
    token ``sqrt`` stands for ceil(sqrt(n)).

    Raises:
        ValueError: On an unparseable grid

    Example:
        >>> parse_grid("2^8..2^10")
        [256, 512, 1024]
        >>> parse_grid("2,3,sqrt", allow_sqrt=True)
        [2, 3, 'sqrt']
    """
    values: List[GridValue] = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            raise ValueError(f"empty entry in grid {text!r}")
        if token == SQRT and allow_sqrt:
            values.append(SQRT)
            continue
        try:
            if ".." in token:
                low_text, high_text = token.split("..", 1)
                low, low_base = _parse_value(low_text.strip())
                high, high_base = _parse_value(high_text.strip())
                if low > high:
                    raise ValueError(f"empty range {token!r}")
                if low_base is not None and low_base == high_base:
                    value = low
                    while value <= high:
                        values.append(value)
                        value *= low_base
                elif low_base is None and high_base is None:
                    values.extend(range(low, high + 1))
                else:
                    raise ValueError(f"mixed range {token!r}")
            else:
                values.append(_parse_value(token)[0])
        except ValueError as exc:
            raise ValueError(f"bad grid {text!r}: {exc}") from exc
    for value in values:
        if isinstance(value, int) and value < 1:
            raise ValueError(f"grid values must be positive, got {value}")
    return values


def resolve_degree(d: GridValue, n: int) -> int:
    """Turn a degree grid value into a degree for size n."""
    if d == SQRT:
        return math.isqrt(n - 1) + 1 if n > 1 else 1
    return int(d)


def truncated_bound(n: int) -> float:
    """Mean total step bound of the truncated walk, 8n + 4nH(n)."""
    return 8 * n + 4 * n * harmonic(n)


def untruncated_bound(n: int) -> float:
    """Mean total step bound of untruncated walks, 1.5 (n + nH(n))."""
    return 1.5 * (n + n * harmonic(n))


@verified()
def match_graph(
    graph: BipartiteRegularGraph,
    algo: str = "walk",
    rng: SeedLike = None,
    settings: Optional[Settings] = None,
) -> Tuple[Matching, WalkStats, int]:
    """
    Run one matcher on ``graph`` and re-verify its output.

    Args:
        graph: Input graph
        algo: One of walk, walk-untruncated, hk, euler
        rng: Seed, generator or stream for the walk matchers
        settings: Optional settings

    Returns:
        (perfect matching, walk statistics, wall time in ns); baselines
        report zero steps

    Raises:
        VerificationError: If the matching is not perfect
        InvalidGraphError: If the input does not suit the matcher
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    start = time.perf_counter_ns()
    if algo in WALK_ALGORITHMS:
        matching, stats = find_perfect_matching(
            graph,
            rng=rng,
            truncated=algo == "walk",
            record_phases=False,
            settings=settings,
        )
    else:
        matcher = hopcroft_karp if algo == "hk" else euler_matching
        matching = matcher(graph)
        stats = WalkStats(truncated=False)
    return matching, stats, time.perf_counter_ns() - start


def to_record(
    algo: str,
    graph: BipartiteRegularGraph,
    seed: int,
    stats: WalkStats,
    wall_time_ns: int,
) -> BenchRecord:
    return BenchRecord(
        algo=algo,
        n=graph.n,
        d=graph.d,
        seed=seed,
        wall_time_ns=wall_time_ns,
        total_steps=stats.total_steps,
        total_restarts=stats.total_restarts,
        augmentations=stats.augmentations,
        m=graph.m,
    )


def cell_streams(
    seed: int, n: int, d: int, settings: Optional[Settings] = None
) -> Tuple[int, RandomStream]:
    """Graph seed and walk stream of one run, derived from (seed, n, d)."""
    settings = resolve_settings(settings)
    graph_sequence, walk_sequence = np.random.SeedSequence(
        [seed, n, d]
    ).spawn(2)
    graph_seed = int(graph_sequence.generate_state(1)[0])
    walk = RandomStream(
        np.random.default_rng(walk_sequence), settings.rng_buffer_size
    )
    return graph_seed, walk


def run_cell(cell: Cell, settings: Optional[Settings] = None) -> BenchRecord:
    """Generate the cell's graph, match it and return its record."""
    graph_seed, walk = cell_streams(cell.seed, cell.n, cell.d, settings)
    graph = gen_union_permutations(
        cell.n, cell.d, seed=graph_seed, simple=cell.simple, settings=settings
    )
    _, stats, wall = match_graph(graph, cell.algo, walk, settings)
    return to_record(cell.algo, graph, cell.seed, stats, wall)


def build_cells(
    algos: Sequence[str],
    ns: Sequence[int],
    ds: Sequence[GridValue],
    seeds: int,
    base_seed: int = 0,
    simple: bool = False,
) -> List[Cell]:
    """Expand a grid into cells, skipping degrees that do not fit."""
    cells: List[Cell] = []
    for algo in algos:
        if algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algo!r}")
        for n in ns:
            degrees = sorted({resolve_degree(d, int(n)) for d in ds})
            for d in degrees:
                if d > n:
                    logger.warning("skipping n=%d d=%d: d exceeds n", n, d)
                    continue
                if algo == "euler" and d & (d - 1):
                    logger.warning(
                        "skipping euler at d=%d: not a power of two", d
                    )
                    continue
                for trial in range(seeds):
                    cells.append(
                        Cell(algo, int(n), d, base_seed + trial, simple)
                    )
    return cells


def _sort_key(record: BenchRecord) -> Tuple[int, int, int, int]:
    return (ALGORITHMS.index(record.algo), record.n, record.d, record.seed)


def run_bench(
    cells: Sequence[Cell],
    jobs: int = 1,
    progress: bool = False,
    settings: Optional[Settings] = None,
) -> List[BenchRecord]:
    """
    Run every cell and return the records sorted by (algo, n, d, seed).

    With ``jobs > 1`` cells run in worker processes; each cell derives its
    own streams, so results do not depend on scheduling.
    """
    settings = resolve_settings(settings)
    records: List[BenchRecord] = []
    with tqdm(
        total=len(cells), disable=not progress, desc="bench", unit="run"
    ) as bar:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for record in pool.map(
                    run_cell, cells, [settings] * len(cells)
                ):
                    records.append(record)
                    bar.update(1)
        else:
            for cell in cells:
                records.append(run_cell(cell, settings))
                bar.update(1)
    records.sort(key=_sort_key)
    logger.info("benchmark finished: %d runs", len(records))
    return records


def summarize(records: Iterable[BenchRecord]) -> List[CellSummary]:
    """Mean total steps per walk cell, paired with the cell's bound."""
    groups: Dict[Tuple[str, int, int], List[int]] = defaultdict(list)
    for record in records:
        if record.algo in WALK_ALGORITHMS:
            groups[(record.algo, record.n, record.d)].append(
                record.total_steps
            )
    summaries = []
    for (algo, n, d), steps in sorted(groups.items()):
        bound = truncated_bound(n) if algo == "walk" else untruncated_bound(n)
        summaries.append(
            CellSummary(
                algo=algo,
                n=n,
                d=d,
                runs=len(steps),
                mean_steps=math.fsum(steps) / len(steps),
                bound=bound,
            )
        )
    return summaries


def check_bounds(records: Iterable[BenchRecord]) -> List[CellSummary]:
    """Return the walk cells whose mean step count breaches the bound."""
    breaches = [summary for summary in summarize(records) if not summary.ok]
    for summary in breaches:
        logger.warning(
            "bound breached: %s n=%d d=%d mean %.1f > %.1f",
            summary.algo,
            summary.n,
            summary.d,
            summary.mean_steps,
            summary.bound,
        )
    return breaches


def metadata_line() -> str:
    return f"# regmatch {__version__} rng={RNG_IDENTITY}\n"


def write_csv(
    records: Iterable[BenchRecord], stream: TextIO, metadata: bool = True
) -> None:
    """Write the benchmark CSV, optionally led by a metadata comment."""
    if metadata:
        stream.write(metadata_line())
    writer = csv.DictWriter(stream, fieldnames=BENCH_FIELDS)
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row())


def read_csv(stream: TextIO) -> List[BenchRecord]:
    """Read records written by :func:`write_csv`, skipping comments."""
    lines = (line for line in stream if not line.startswith("#"))
    return [BenchRecord.from_row(row) for row in csv.DictReader(lines)]


def run_games(
    probers: Sequence[str], degrees: Sequence[int]
) -> List[GameRecord]:
    """Play every prober at every degree."""
    return [
        run_game(make_prober(name), d).to_record()
        for name in probers
        for d in degrees
    ]


def write_game_csv(records: Iterable[GameRecord], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=GAME_FIELDS)
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row())


def hitting_experiment(
    n: int,
    d: int,
    matched: int,
    trials: int,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> HittingRecord:
    """
    Mean untruncated walk length on a random graph with a frozen matching.

    The matching of size ``matched`` comes from a run of the matcher
    stopped at that size, so k = n - matched vertices stay unmatched.
    """
    if not 0 <= matched < n:
        raise ValueError(f"need 0 <= matched < n, got {matched}")
    settings = resolve_settings(settings)
    graph_seed, walk = cell_streams(
        settings.default_seed if seed is None else seed, n, d, settings
    )
    graph = gen_union_permutations(n, d, seed=graph_seed, settings=settings)
    matching = partial_matching(graph, matched, walk)
    stream = as_stream(walk)
    lengths = [
        hitting_time(graph, matching, stream, settings) for _ in range(trials)
    ]
    return HittingRecord(
        n=n,
        d=d,
        k=n - matched,
        trials=trials,
        mean_steps=math.fsum(lengths) / trials,
    )
