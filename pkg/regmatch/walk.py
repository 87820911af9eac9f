"""Perfect matchings by truncated random walks on the implicit matching graph.

The matching graph H of a partial matching M orients every edge of G from P
to Q, contracts each matched pair (mate(q), q) into a supernode, and adds a
source joined to every free P vertex and a sink joined from every free Q
vertex, each by d parallel edges. Every source to sink path of H is an
augmenting path of G. H is never built: each step samples one out-edge
straight from the adjacency rows of G.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import IntEnum
from typing import (
    Dict,
    List,
    NamedTuple,
    Optional,
    Protocol,
    Sequence,
    Tuple,
)

from regmatch.config import Settings, resolve_settings
from regmatch.exceptions import (
    InvalidGraphError,
    WalkCapExceededError,
)
from regmatch.graph import (
    NONE,
    BipartiteRegularGraph,
    Matching,
    require_valid,
)
from regmatch.models import PhaseStats, WalkStats
from regmatch.rng import RandomStream, SeedLike, as_stream

logger = logging.getLogger(__name__)


class RowSampler(Protocol):
    """Row access the walk needs; graphs and support matrices provide it."""

    n: int

    @property
    def n_q(self) -> int: ...

    def sample_row(self, p: int, rng: RandomStream) -> Tuple[int, int]: ...

    def sample_row_excluding(
        self, p: int, excluded_slot: int, rng: RandomStream
    ) -> Tuple[int, int]: ...

    def column_at(self, p: int, slot: int) -> int: ...

    def slot_of(self, p: int, q: int) -> int: ...


class HKind(IntEnum):
    SOURCE = 0
    FREE_P = 1
    SUPER = 2
    FREE_Q = 3
    SINK = 4


_NAMES = {
    HKind.FREE_P: "FreeP",
    HKind.SUPER: "Super",
    HKind.FREE_Q: "FreeQ",
}


class HVertex(NamedTuple):
    """
    A vertex of the matching graph.

    ``FreeP(p)`` and ``FreeQ(q)`` are unmatched vertices of G; ``Super(q)``
    is the contracted pair (mate(q), q), identified by its Q end.
    """

    kind: HKind
    index: int = NONE

    @classmethod
    def free_p(cls, p: int) -> "HVertex":
        return cls(HKind.FREE_P, p)

    @classmethod
    def free_q(cls, q: int) -> "HVertex":
        return cls(HKind.FREE_Q, q)

    @classmethod
    def super_(cls, q: int) -> "HVertex":
        return cls(HKind.SUPER, q)

    def __repr__(self) -> str:
        if self.kind == HKind.SOURCE:
            return "Source"
        if self.kind == HKind.SINK:
            return "Sink"
        return f"{_NAMES[self.kind]}({self.index})"


SOURCE = HVertex(HKind.SOURCE)
SINK = HVertex(HKind.SINK)


@dataclass
class WalkOutcome:
    """
    Result of one walk from Source.

    On success ``path`` is the loop-erased simple path from Source to Sink
    and ``slots[i]`` is the row slot through which ``path[i]`` was entered
    (NONE for Source, FreeP and Sink).
    """

    success: bool
    steps_used: int
    path: List[HVertex]
    slots: List[int]
    trace: Optional[List[HVertex]] = None

    @property
    def result(self) -> str:
        return "SUCCESS" if self.success else "FAIL"


def budget(n: int, j: int) -> int:
    """
    Step budget of phase j: ceil(2 * (2 + n / (n - j))).

    Args:
        n: Vertices per side
        j: Current matching size, 0 <= j < n

    Returns:
        Integer budget b_j

    Example:
        >>> budget(10, 0), budget(4, 2), budget(4, 3)
        (6, 8, 12)
    """
    if not 0 <= j < n:
        raise ValueError(f"need 0 <= j < n, got n={n}, j={j}")
    k = n - j
    return 4 + (2 * n + k - 1) // k


def _step(
    topology: RowSampler,
    matching: Matching,
    v: HVertex,
    rng: RandomStream,
) -> Tuple[HVertex, int]:
    kind = v.kind
    if kind == HKind.SOURCE:
        if matching.free_count == 0:
            raise ValueError("Source has no out-edges under a perfect matching")
        return HVertex(HKind.FREE_P, matching.sample_free_p(rng)), NONE
    if kind == HKind.FREE_P:
        q, slot = topology.sample_row(v.index, rng)
    elif kind == HKind.SUPER:
        u = matching.match_q[v.index]
        excluded = matching.slot_p[u]
        if excluded == NONE:
            excluded = topology.slot_of(u, v.index)
            matching.slot_p[u] = excluded
        q, slot = topology.sample_row_excluding(u, excluded, rng)
    elif kind == HKind.FREE_Q:
        return SINK, NONE
    else:
        raise ValueError("Sink has no out-edges")
    if matching.match_q[q] == NONE:
        return HVertex(HKind.FREE_Q, q), slot
    return HVertex(HKind.SUPER, q), slot


def sample_out_edge(
    topology: RowSampler,
    matching: Matching,
    v: HVertex,
    rng: SeedLike = None,
) -> HVertex:
    """
    Return the head of a uniformly random out-edge of ``v`` in H.

    Source goes to a uniform free P vertex; FreeP(p) follows a uniform slot
    of row p; Super(q) follows a uniform slot of mate(q)'s row other than the
    matched one; FreeQ goes to Sink. Each call is one walk step.

    Args:
        topology: Graph (or weighted support) providing row sampling
        matching: Current matching
        v: Any vertex of H except Sink
        rng: Seed, generator or stream

    Returns:
        The sampled out-neighbour
    """
    return _step(topology, matching, v, as_stream(rng))[0]


def out_edges(
    graph: BipartiteRegularGraph, matching: Matching, v: HVertex
) -> Counter:
    """
    Enumerate the out-edge multiset of ``v`` in H.

    Used to check walk transitions; the walk itself never lists edges.
    """
    d = graph.d
    heads: Counter = Counter()

    def head(q: int) -> HVertex:
        if matching.match_q[q] == NONE:
            return HVertex.free_q(q)
        return HVertex.super_(q)

    if v.kind == HKind.SOURCE:
        for p in range(graph.n):
            if matching.match_p[p] == NONE:
                heads[HVertex.free_p(p)] += d
    elif v.kind == HKind.FREE_P:
        for q in graph.adj_p[v.index]:
            heads[head(q)] += 1
    elif v.kind == HKind.SUPER:
        u = matching.match_q[v.index]
        excluded = matching.slot_p[u]
        if excluded == NONE:
            excluded = graph.slot_of(u, v.index)
        for slot, q in enumerate(graph.adj_p[u]):
            if slot != excluded:
                heads[head(q)] += 1
    elif v.kind == HKind.FREE_Q:
        heads[SINK] += d
    return heads


class LoopErasedPath:
    """
    A walk prefix kept free of cycles while it grows.

    Only supernodes can repeat (Source has no in-edges, FreeP is entered
    only from Source and FreeQ only exits to Sink), so the stack is indexed
    by the Q end of each supernode; revisiting one truncates the stack back
    to its first occurrence.
    """

    def __init__(self) -> None:
        self.vertices: List[HVertex] = [SOURCE]
        self.slots: List[int] = [NONE]
        self._position: Dict[int, int] = {}

    def push(self, v: HVertex, slot: int = NONE) -> None:
        if v.kind == HKind.SUPER:
            position = self._position.get(v.index)
            if position is not None:
                for w in self.vertices[position + 1 :]:
                    if w.kind == HKind.SUPER:
                        del self._position[w.index]
                del self.vertices[position + 1 :]
                del self.slots[position + 1 :]
                return
            self._position[v.index] = len(self.vertices)
        self.vertices.append(v)
        self.slots.append(slot)


def loop_erase(sequence: Sequence[HVertex]) -> List[HVertex]:
    """
    Erase the loops of a Source to Sink step sequence.

    Args:
        sequence: Vertices visited by a successful walk

    Returns:
        The loop-erased simple path

    Raises:
        ValueError: If the sequence does not start at Source, end at Sink,
            or repeats a vertex other than a supernode

    Example:
        >>> seq = [SOURCE, HVertex.free_p(0), HVertex.super_(2),
        ...        HVertex.super_(3), HVertex.super_(2),
        ...        HVertex.free_q(1), SINK]
        >>> loop_erase(seq)
        [Source, FreeP(0), Super(2), FreeQ(1), Sink]
    """
    if len(sequence) < 4 or sequence[0] != SOURCE or sequence[-1] != SINK:
        raise ValueError("a walk must run from Source to Sink")
    if sequence[1].kind != HKind.FREE_P or sequence[-2].kind != HKind.FREE_Q:
        raise ValueError("a walk must leave through FreeP and end via FreeQ")
    for v in sequence[2:-2]:
        if v.kind != HKind.SUPER:
            raise ValueError(f"{v!r} cannot appear inside a walk")
    path = LoopErasedPath()
    for v in sequence[1:]:
        path.push(v)
    return path.vertices


def _walk(
    topology: RowSampler,
    matching: Matching,
    limit: int,
    rng: RandomStream,
    record_trace: bool = False,
) -> WalkOutcome:
    path = LoopErasedPath()
    trace: Optional[List[HVertex]] = [SOURCE] if record_trace else None
    v = SOURCE
    steps = 0
    while v.kind != HKind.SINK:
        if steps >= limit:
            return WalkOutcome(False, steps, [], [], trace)
        v, slot = _step(topology, matching, v, rng)
        steps += 1
        path.push(v, slot)
        if trace is not None:
            trace.append(v)
    return WalkOutcome(True, steps, path.vertices, path.slots, trace)


def truncated_walk(
    topology: RowSampler,
    matching: Matching,
    b: int,
    rng: SeedLike = None,
    record_trace: bool = False,
) -> WalkOutcome:
    """
    Walk from Source for at most ``b`` steps with online loop erasure.

    Args:
        topology: Graph (or weighted support) providing row sampling
        matching: Current, non-perfect matching
        b: Step budget, at least 1
        rng: Seed, generator or stream
        record_trace: Keep the raw visited sequence in ``trace``

    Returns:
        SUCCESS with the erased path when Sink is reached within b steps,
        FAIL otherwise; ``steps_used`` counts every sample call
    """
    if b < 1:
        raise ValueError(f"budget must be >= 1, got {b}")
    if matching.free_count == 0:
        raise ValueError("matching is already perfect")
    return _walk(topology, matching, b, as_stream(rng), record_trace)


def augment(
    topology: RowSampler,
    matching: Matching,
    path: Sequence[HVertex],
    slots: Optional[Sequence[int]] = None,
) -> Matching:
    """
    Flip the matching along a successful walk path, in place.

    For the path Source, FreeP(p0), Super(q1) .. Super(ql), FreeQ(q), Sink
    with u_i = mate(q_i), the new pairs are (p0, q1), (u1, q2) ..
    (ul, q) and the old pairs (u_i, q_i) go away.

    Args:
        topology: Graph the path lives in
        matching: Matching to mutate
        path: Simple Source to Sink path for the current matching
        slots: Entry slots as reported by the walk; looked up if omitted

    Returns:
        The mutated matching, one pair larger

    Raises:
        InvalidGraphError: If the path is not valid for the matching
    """
    if (
        len(path) < 4
        or path[0] != SOURCE
        or path[-1] != SINK
        or path[1].kind != HKind.FREE_P
        or path[-2].kind != HKind.FREE_Q
    ):
        raise InvalidGraphError(f"not a Source to Sink path: {list(path)}")
    p0 = path[1].index
    if matching.match_p[p0] != NONE:
        raise InvalidGraphError(f"FreeP({p0}) is matched")
    targets = [v.index for v in path[2:-1]]
    middle = path[2:-2]
    if any(v.kind != HKind.SUPER for v in middle):
        raise InvalidGraphError("inner path vertices must be supernodes")
    if len(set(targets)) != len(targets):
        raise InvalidGraphError("path repeats a vertex")
    if matching.match_q[targets[-1]] != NONE:
        raise InvalidGraphError(f"FreeQ({targets[-1]}) is matched")
    mates = []
    for q in targets[:-1]:
        u = matching.match_q[q]
        if u == NONE:
            raise InvalidGraphError(f"Super({q}) is not matched")
        mates.append(u)
    sources = [p0] + mates
    if slots is None:
        entry_slots = [topology.slot_of(p, q) for p, q in zip(sources, targets)]
    else:
        entry_slots = list(slots[2:-1])
        for p, q, slot in zip(sources, targets, entry_slots):
            if topology.column_at(p, slot) != q:
                raise InvalidGraphError(f"slot {slot} of row {p} is not {q}")
    matching.apply_path(sources, targets, entry_slots)
    return matching


def run_augmentations(
    topology: RowSampler,
    matching: Matching,
    rng: RandomStream,
    truncated: bool = True,
    target_size: Optional[int] = None,
    record_phases: bool = True,
    settings: Optional[Settings] = None,
) -> WalkStats:
    """
    Augment ``matching`` in place until it reaches ``target_size``.

    Each phase j repeats truncated walks of budget b_j (or one untruncated
    walk) until one reaches Sink, then flips the matching along it. A global
    cap of ``untruncated_cap_factor * n * (ceil(ln n) + 1)`` steps guards
    against inputs whose support has no perfect matching.

    Raises:
        WalkCapExceededError: When the global step cap is exhausted
    """
    settings = resolve_settings(settings)
    n = topology.n
    target = n if target_size is None else min(target_size, n)
    cap = settings.untruncated_cap_factor * n * (math.ceil(math.log(n)) + 1)
    stats = WalkStats(truncated=truncated)
    while matching.size < target:
        j = matching.size
        b = budget(n, j) if truncated else None
        restarts = 0
        steps = 0
        while True:
            remaining = cap - stats.total_steps - steps
            limit = remaining if b is None else min(b, remaining)
            outcome = _walk(topology, matching, max(limit, 0), rng)
            steps += outcome.steps_used
            if outcome.success:
                break
            if b is None or stats.total_steps + steps >= cap:
                raise WalkCapExceededError(
                    f"step cap {cap} exhausted in phase {j}; "
                    "the input has no perfect matching or the walk is broken"
                )
            restarts += 1
        augment(topology, matching, outcome.path, outcome.slots)
        stats.record(
            PhaseStats(j=j, budget=b, restarts=restarts, steps=steps),
            keep_phase=record_phases,
        )
    logger.debug(
        "augmented to size %d in %d steps (%d restarts)",
        matching.size,
        stats.total_steps,
        stats.total_restarts,
    )
    return stats


def find_perfect_matching(
    graph: BipartiteRegularGraph,
    rng: SeedLike = None,
    truncated: bool = True,
    target_size: Optional[int] = None,
    record_phases: bool = True,
    settings: Optional[Settings] = None,
) -> Tuple[Matching, WalkStats]:
    """
    Find a perfect matching of a d-regular bipartite graph.

    Runs n augmentation phases from the empty matching. With ``truncated``
    every walk gets the budget b_j and is restarted on failure; otherwise
    each phase runs a single untruncated walk. A 1-regular graph is its own
    matching and costs no steps.

    Args:
        graph: A graph passing :func:`regmatch.graph.validate`
        rng: Seed, generator or stream
        truncated: Use budgeted walks with restarts
        target_size: Stop early once the matching has this size
        record_phases: Keep per-phase statistics
        settings: Optional settings

    Returns:
        (matching, statistics)

    Raises:
        InvalidGraphError: If the graph fails validation
        WalkCapExceededError: If the global step cap is exhausted

    Example:
        >>> graph = BipartiteRegularGraph([[0, 1], [0, 1]])
        >>> matching, stats = find_perfect_matching(graph, rng=1)
        >>> matching.is_perfect, stats.augmentations
        (True, 2)
    """
    require_valid(graph)
    stream = as_stream(rng, settings)
    if graph.d == 1:
        limit = graph.n if target_size is None else target_size
        matching = Matching.from_pairs(
            graph, ((p, graph.adj_p[p][0]) for p in range(limit))
        )
        return matching, WalkStats(truncated=truncated)
    matching = Matching(graph.n)
    stats = run_augmentations(
        graph,
        matching,
        stream,
        truncated=truncated,
        target_size=target_size,
        record_phases=record_phases,
        settings=settings,
    )
    logger.info(
        "matched n=%d d=%d in %d steps", graph.n, graph.d, stats.total_steps
    )
    return matching, stats


def partial_matching(
    graph: BipartiteRegularGraph, size: int, rng: SeedLike = None
) -> Matching:
    """Return the matching of a run frozen once it reaches ``size``."""
    matching, _ = find_perfect_matching(
        graph, rng=rng, target_size=size, record_phases=False
    )
    return matching


def hitting_time(
    topology: RowSampler,
    matching: Matching,
    rng: SeedLike = None,
    settings: Optional[Settings] = None,
) -> int:
    """
    Length of one untruncated walk from Source until it hits Sink.

    Its mean is at most 2 + n / k when k vertices per side are unmatched.

    Raises:
        WalkCapExceededError: If the walk outlives the global step cap
    """
    settings = resolve_settings(settings)
    n = topology.n
    cap = settings.untruncated_cap_factor * n * (math.ceil(math.log(n)) + 1)
    if matching.free_count == 0:
        raise ValueError("matching is already perfect")
    outcome = _walk(topology, matching, cap, as_stream(rng, settings))
    if not outcome.success:
        raise WalkCapExceededError(f"walk exceeded {cap} steps")
    return outcome.steps_used
