"""Regular bipartite graphs in adjacency-array form, matchings and file I/O."""

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import numpy as np

from regmatch.config import Settings, resolve_settings
from regmatch.exceptions import GraphFormatError, InvalidGraphError
from regmatch.models import ValidationReport
from regmatch.rng import RandomStream

logger = logging.getLogger(__name__)

NONE = -1

PathLike = Union[str, Path]


def _derive_reverse(adj_p: List[List[int]], n: int) -> List[List[int]]:
    adj_q: List[List[int]] = [[] for _ in range(n)]
    for p, row in enumerate(adj_p):
        for q in row:
            if 0 <= q < n:
                adj_q[q].append(p)
    return adj_q


class BipartiteRegularGraph:
    """
    A d-regular bipartite (multi)graph G = (P, Q, E) in adjacency arrays.

    Row ``adj_p[p]`` holds the d Q-neighbours of p in arrival order, with no
    ordering assumed. ``adj_q`` is derived with one counting pass unless it
    is given explicitly. Construction does not check invariants; call
    :func:`validate` for that.

    Args:
        adj_p: n rows of Q-indices
        adj_q: Optional n rows of P-indices; derived when omitted
        multigraph: Whether repeated entries within a row are permitted
        d: Degree; defaults to the length of the first row

    Example:
        >>> graph = BipartiteRegularGraph([[0, 1], [0, 1]])
        >>> graph.n, graph.d, graph.adj_q
        (2, 2, [[0, 1], [0, 1]])
    """

    def __init__(
        self,
        adj_p: Sequence[Sequence[int]],
        adj_q: Optional[Sequence[Sequence[int]]] = None,
        multigraph: bool = True,
        d: Optional[int] = None,
    ) -> None:
        self.adj_p: List[List[int]] = [[int(q) for q in row] for row in adj_p]
        self.n = len(self.adj_p)
        if d is None:
            d = len(self.adj_p[0]) if self.adj_p else 0
        self.d = d
        self.multigraph = multigraph
        if adj_q is None:
            self.adj_q = _derive_reverse(self.adj_p, self.n)
        else:
            self.adj_q = [[int(p) for p in row] for row in adj_q]

    @property
    def m(self) -> int:
        """Number of edges, n * d."""
        return self.n * self.d

    @property
    def n_q(self) -> int:
        return self.n

    def edges(self) -> Iterable[Tuple[int, int]]:
        """Yield every (p, q) edge occurrence in adjacency order."""
        for p, row in enumerate(self.adj_p):
            for q in row:
                yield p, q

    def sample_row(self, p: int, rng: RandomStream) -> Tuple[int, int]:
        """Return (q, slot) for a uniformly random slot of row p."""
        slot = rng.below(self.d)
        return self.adj_p[p][slot], slot

    def sample_row_excluding(
        self, p: int, excluded_slot: int, rng: RandomStream
    ) -> Tuple[int, int]:
        """Return (q, slot) uniform over the slots of row p but one."""
        assert self.d >= 2, "a supernode of a 1-regular graph has no exits"
        d = self.d
        while True:
            slot = rng.below(d)
            if slot != excluded_slot:
                return self.adj_p[p][slot], slot

    def column_at(self, p: int, slot: int) -> int:
        return self.adj_p[p][slot]

    def slot_of(self, p: int, q: int) -> int:
        """Return the first slot of row p holding q."""
        try:
            return self.adj_p[p].index(q)
        except ValueError:
            raise InvalidGraphError(f"({p}, {q}) is not an edge")

    def has_edge(self, p: int, q: int) -> bool:
        return 0 <= p < self.n and q in self.adj_p[p]

    def as_array(self) -> np.ndarray:
        """Return adj_p as an (n, d) integer array."""
        return np.asarray(self.adj_p, dtype=np.int64).reshape(self.n, self.d)

    def copy(self) -> "BipartiteRegularGraph":
        return BipartiteRegularGraph(
            self.adj_p, self.adj_q, multigraph=self.multigraph, d=self.d
        )

    def __eq__(self, other: object) -> bool:
        # edge structure only; the multigraph flag is not part of identity
        if not isinstance(other, BipartiteRegularGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.d == other.d
            and self.adj_p == other.adj_p
            and self.adj_q == other.adj_q
        )

    def __repr__(self) -> str:
        return (
            f"BipartiteRegularGraph(n={self.n}, d={self.d}, "
            f"multigraph={self.multigraph})"
        )


def validate(graph: BipartiteRegularGraph) -> ValidationReport:
    """
    Check every BipartiteRegularGraph invariant.

    Checks run in a fixed order (row lengths, index range, edge multiset
    symmetry, repeated entries) and the report names the first violation.

    Args:
        graph: Graph to check

    Returns:
        Passing report, or the first violated invariant with its index

    Example:
        >>> validate(BipartiteRegularGraph([[0, 1], [0, 1]])).ok
        True
        >>> validate(
        ...     BipartiteRegularGraph([[0, 0], [1, 1]], multigraph=False)
        ... ).invariant
        'simple'
    """
    n, d = graph.n, graph.d
    if d < 1:
        return ValidationReport.violation("degree", None, "degree below 1")
    if len(graph.adj_q) != n:
        return ValidationReport.violation(
            "row_count",
            None,
            f"adjQ has {len(graph.adj_q)} rows, expected {n}",
        )
    for side, rows in (("adjP", graph.adj_p), ("adjQ", graph.adj_q)):
        for index, row in enumerate(rows):
            if len(row) != d:
                return ValidationReport.violation(
                    "row_length",
                    index,
                    f"{side} row {index} has {len(row)} entries, expected {d}",
                )
    for side, rows in (("adjP", graph.adj_p), ("adjQ", graph.adj_q)):
        for index, row in enumerate(rows):
            for value in row:
                if not 0 <= value < n:
                    return ValidationReport.violation(
                        "index_range",
                        index,
                        f"{side} row {index} holds {value}, outside [0, {n})",
                    )

    forward = Counter(graph.edges())
    backward = Counter(
        (p, q) for q, row in enumerate(graph.adj_q) for p in row
    )
    if forward != backward:
        for (p, q), count in forward.items():
            if backward[(p, q)] != count:
                return ValidationReport.violation(
                    "symmetry",
                    p,
                    f"q={q} occurs {count} times in adjP row {p} but p={p} "
                    f"occurs {backward[(p, q)]} times in adjQ row {q}",
                )
        for (p, q), count in backward.items():
            if forward[(p, q)] != count:
                return ValidationReport.violation(
                    "symmetry",
                    p,
                    f"p={p} occurs {count} times in adjQ row {q} but q={q} "
                    f"occurs {forward[(p, q)]} times in adjP row {p}",
                )

    if not graph.multigraph:
        for side, rows in (("adjP", graph.adj_p), ("adjQ", graph.adj_q)):
            for index, row in enumerate(rows):
                if len(set(row)) != len(row):
                    return ValidationReport.violation(
                        "simple",
                        index,
                        f"{side} row {index} repeats an entry",
                    )
    return ValidationReport.passed()


def require_valid(graph: BipartiteRegularGraph) -> None:
    """Raise InvalidGraphError unless ``graph`` passes :func:`validate`."""
    report = validate(graph)
    if not report.ok:
        raise InvalidGraphError(
            f"invalid graph ({report.invariant}): {report.message}", report
        )


class Matching:
    """
    A partial matching with two-sided inverse arrays.

    Besides ``match_p``/``match_q`` the matching keeps, per matched P vertex,
    the slot of its row that holds the matched edge (designated at match
    time), and the list of free P vertices for O(1) uniform sampling.

    Args:
        n_p: Number of P vertices
        n_q: Number of Q vertices; defaults to n_p
    """

    def __init__(self, n_p: int, n_q: Optional[int] = None) -> None:
        if n_q is None:
            n_q = n_p
        self.match_p: List[int] = [NONE] * n_p
        self.match_q: List[int] = [NONE] * n_q
        self.slot_p: List[int] = [NONE] * n_p
        self.size = 0
        self._free_p: List[int] = list(range(n_p))
        self._free_pos: List[int] = list(range(n_p))

    @classmethod
    def from_arrays(
        cls,
        match_p: Sequence[int],
        n_q: Optional[int] = None,
        graph: Optional[BipartiteRegularGraph] = None,
    ) -> "Matching":
        """
        Build a matching from a raw ``match_p`` array without checking it.

        ``match_q`` is derived (the last claimant wins on conflicts) and the
        matched slots are looked up in ``graph`` when given. Use
        :func:`verify_matching` to check the result.
        """
        n_p = len(match_p)
        matching = cls(n_p, n_q if n_q is not None else n_p)
        for p, q in enumerate(match_p):
            q = int(q)
            if q == NONE:
                continue
            matching.match_p[p] = q
            if 0 <= q < len(matching.match_q):
                matching.match_q[q] = p
            if graph is not None and graph.has_edge(p, q):
                matching.slot_p[p] = graph.slot_of(p, q)
            matching._remove_free(p)
            matching.size += 1
        return matching

    @classmethod
    def from_pairs(
        cls, graph: BipartiteRegularGraph, pairs: Iterable[Tuple[int, int]]
    ) -> "Matching":
        """Build a matching of ``graph`` from (p, q) pairs."""
        matching = cls(graph.n, graph.n_q)
        for p, q in pairs:
            matching.pair(p, q, graph.slot_of(p, q))
        return matching

    @property
    def n(self) -> int:
        return len(self.match_p)

    @property
    def free_count(self) -> int:
        """Number of unmatched P vertices (the k of the walk)."""
        return len(self._free_p)

    @property
    def is_perfect(self) -> bool:
        return self.size == len(self.match_p) == len(self.match_q)

    def free_p(self) -> List[int]:
        return list(self._free_p)

    def sample_free_p(self, rng: RandomStream) -> int:
        """Return a uniformly random unmatched P vertex."""
        return self._free_p[rng.below(len(self._free_p))]

    def _remove_free(self, p: int) -> None:
        position = self._free_pos[p]
        if position == NONE:
            return
        last = self._free_p.pop()
        if last != p:
            self._free_p[position] = last
            self._free_pos[last] = position
        self._free_pos[p] = NONE

    def pair(self, p: int, q: int, slot: int = NONE) -> None:
        """Match free vertices p and q through row slot ``slot`` of p."""
        if self.match_p[p] != NONE or self.match_q[q] != NONE:
            raise InvalidGraphError(f"({p}, {q}) has an already matched end")
        self.match_p[p] = q
        self.match_q[q] = p
        self.slot_p[p] = slot
        self._remove_free(p)
        self.size += 1

    def assign(self, p: int, q: int, slot: int) -> None:
        """Point p at q unconditionally; used while rewiring a path."""
        self.match_p[p] = q
        self.match_q[q] = p
        self.slot_p[p] = slot

    def apply_path(
        self,
        sources: Sequence[int],
        targets: Sequence[int],
        slots: Sequence[int],
    ) -> None:
        """
        Rewire along an augmenting path.

        ``sources[0]`` must be free and ``targets[-1]`` unmatched; every
        other source is the current mate of the preceding target. Each
        source is pointed at its target, so the size grows by one.
        """
        for p, q, slot in zip(sources, targets, slots):
            self.match_p[p] = q
            self.match_q[q] = p
            self.slot_p[p] = slot
        self._remove_free(sources[0])
        self.size += 1

    def pairs(self) -> List[Tuple[int, int]]:
        return [(p, q) for p, q in enumerate(self.match_p) if q != NONE]

    def copy(self) -> "Matching":
        clone = Matching(len(self.match_p), len(self.match_q))
        clone.match_p = list(self.match_p)
        clone.match_q = list(self.match_q)
        clone.slot_p = list(self.slot_p)
        clone.size = self.size
        clone._free_p = list(self._free_p)
        clone._free_pos = list(self._free_pos)
        return clone

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return (
            self.match_p == other.match_p and self.match_q == other.match_q
        )

    def __repr__(self) -> str:
        return f"Matching(size={self.size}, n={self.n})"


def verify_matching(
    graph: BipartiteRegularGraph,
    matching: Matching,
    require_perfect: bool = False,
) -> ValidationReport:
    """
    Check a matching against its graph.

    Args:
        graph: Underlying graph
        matching: Matching to check
        require_perfect: Also require size == n

    Returns:
        Passing report or the first violation

    Example:
        >>> graph = BipartiteRegularGraph([[0, 1], [0, 1]])
        >>> verify_matching(graph, Matching.from_arrays([0, 1]), True).ok
        True
        >>> verify_matching(graph, Matching.from_arrays([0, 0])).invariant
        'injective'
    """
    n_p, n_q = len(matching.match_p), len(matching.match_q)
    if n_p != graph.n or n_q != graph.n_q:
        return ValidationReport.violation(
            "dimension", None, f"matching sides {n_p}x{n_q}, graph {graph.n}"
        )
    claimed: Dict[int, int] = {}
    for p, q in enumerate(matching.match_p):
        if q == NONE:
            continue
        if not 0 <= q < n_q:
            return ValidationReport.violation(
                "index_range", p, f"p={p} matched to {q}, outside [0, {n_q})"
            )
        if q in claimed:
            return ValidationReport.violation(
                "injective",
                q,
                f"q={q} matched twice (p={claimed[q]} and p={p})",
            )
        claimed[q] = p
    for p, q in enumerate(matching.match_p):
        if q != NONE and matching.match_q[q] != p:
            return ValidationReport.violation(
                "inverse", p, f"matchP[{p}]={q} but matchQ[{q}]!={p}"
            )
    for q, p in enumerate(matching.match_q):
        if p != NONE and (not 0 <= p < n_p or matching.match_p[p] != q):
            return ValidationReport.violation(
                "inverse", q, f"matchQ[{q}]={p} but matchP[{p}]!={q}"
            )
    for q, p in claimed.items():
        if not graph.has_edge(p, q):
            return ValidationReport.violation(
                "edge", p, f"({p}, {q}) is not an edge of the graph"
            )
    if matching.size != len(claimed):
        return ValidationReport.violation(
            "size",
            None,
            f"size field {matching.size} but {len(claimed)} pairs",
        )
    if require_perfect and len(claimed) != graph.n:
        return ValidationReport.violation(
            "perfect", None, f"size {len(claimed)} < {graph.n}"
        )
    return ValidationReport.passed()


def gen_union_permutations(
    n: int,
    d: int,
    seed: Optional[int] = None,
    simple: bool = False,
    settings: Optional[Settings] = None,
) -> BipartiteRegularGraph:
    """
    Generate the edge union of d uniformly random permutations of [0, n).

    In simple mode each column's permutation is repaired by random row swaps
    until no row repeats an entry; a row that needs more than
    ``simple_retry_factor * d`` attempts aborts the generation.

    Args:
        n: Vertices per side
        d: Degree, 1 <= d <= n
        seed: Seed; identical seeds give identical graphs
        simple: Forbid repeated entries within a row
        settings: Optional settings

    Returns:
        The generated graph

    Raises:
        ValueError: If d is outside [1, n]
        InvalidGraphError: If the simple-mode repair cap is exceeded
    """
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got n={n}, d={d}")
    settings = resolve_settings(settings)
    rng = np.random.default_rng(
        settings.default_seed if seed is None else seed
    )
    columns = np.empty((n, d), dtype=np.int64)
    row_sets: List[Set[int]] = [set() for _ in range(n)]
    cap = settings.simple_retry_factor * d
    for c in range(d):
        perm = rng.permutation(n)
        if simple and c > 0:
            _repair_column(perm, row_sets, rng, cap)
        columns[:, c] = perm
        if simple:
            for p in range(n):
                row_sets[p].add(int(perm[p]))
    graph = BipartiteRegularGraph(columns.tolist(), multigraph=not simple)
    logger.debug("generated union of %d permutations, n=%d", d, n)
    return graph


def _repair_column(
    perm: np.ndarray,
    row_sets: List[Set[int]],
    rng: np.random.Generator,
    cap: int,
) -> None:
    n = len(perm)
    attempts = [0] * n
    pending = deque(p for p in range(n) if int(perm[p]) in row_sets[p])
    while pending:
        p = pending.popleft()
        if int(perm[p]) not in row_sets[p]:
            continue
        attempts[p] += 1
        if attempts[p] > cap:
            raise InvalidGraphError(
                f"simple generation gave up on row {p} after {cap} attempts"
            )
        r = int(rng.integers(n))
        if r != p and int(perm[r]) not in row_sets[p]:
            perm[p], perm[r] = perm[r], perm[p]
            if int(perm[r]) in row_sets[r]:
                pending.append(r)
        else:
            pending.append(p)


@dataclass(frozen=True)
class CanonicalLayout:
    """
    Vertex numbering of a canonical lower-bound graph for degree d.

    P = P1 || P2 occupies P indices [0, 4d) and Q = Q1 || Q2 occupies Q
    indices [0, 4d). The terminal t is P index 4d and s is Q index 4d, so
    the embedded graph has n = 4d + 1 vertices per side.
    """

    d: int

    @property
    def n(self) -> int:
        return 4 * self.d + 1

    @property
    def p1(self) -> range:
        return range(0, 2 * self.d)

    @property
    def p2(self) -> range:
        return range(2 * self.d, 4 * self.d)

    @property
    def q1(self) -> range:
        return range(0, 2 * self.d)

    @property
    def q2(self) -> range:
        return range(2 * self.d, 4 * self.d)

    @property
    def t(self) -> int:
        return 4 * self.d

    @property
    def s(self) -> int:
        return 4 * self.d

    def pair_of(self, index: int) -> int:
        """Return 1 or 2 for a non-terminal index on either side."""
        return 1 if index < 2 * self.d else 2

    def labels(self) -> Dict[str, List[str]]:
        """Partition label of every vertex, per side."""
        p_labels = ["P1" if p in self.p1 else "P2" for p in range(4 * self.d)]
        q_labels = ["Q1" if q in self.q1 else "Q2" for q in range(4 * self.d)]
        return {"P": p_labels + ["t"], "Q": q_labels + ["s"]}

    def groups(self) -> List[Tuple[range, range]]:
        return [(self.p1, self.q1), (self.p2, self.q2)]


@dataclass
class CanonicalGraph:
    """A member of the canonical family with its hidden matching M'."""

    graph: BipartiteRegularGraph
    hidden: List[Tuple[int, int]]
    layout: CanonicalLayout
    hidden_set: Set[Tuple[int, int]] = field(init=False)

    def __post_init__(self) -> None:
        self.hidden_set = set(self.hidden)


def complete_regular(
    n: int,
    d: int,
    edges: List[Tuple[int, int]],
    groups: List[Tuple[range, range]],
    order: Optional[np.random.Generator] = None,
) -> List[Tuple[int, int]]:
    """
    Pair deficient vertices within each (P-range, Q-range) group.

    The vertex of largest remaining deficit is served first and takes the
    partners of largest deficit, preferring partners it is not yet adjacent
    to; a parallel edge is added only when no such partner is left. Ties
    break by lowest index, or by a shuffled order when ``order`` is given.

    Args:
        n: Vertices per side
        d: Target degree
        edges: Existing (p, q) edges
        groups: Vertex groups whose deficits must be paired together
        order: Optional generator randomising tie breaks

    Returns:
        New (p, q) edges, in the order they were added

    Raises:
        InvalidGraphError: If a group has unequal deficits or a vertex
            already exceeds degree d
    """
    deg_p = [0] * n
    deg_q = [0] * n
    adjacent: Set[Tuple[int, int]] = set()
    for p, q in edges:
        deg_p[p] += 1
        deg_q[q] += 1
        adjacent.add((p, q))
    if max(deg_p + deg_q, default=0) > d:
        raise InvalidGraphError(f"a vertex already exceeds degree {d}")

    added: List[Tuple[int, int]] = []
    for p_range, q_range in groups:
        p_list = list(p_range)
        q_list = list(q_range)
        if order is not None:
            order.shuffle(p_list)
            order.shuffle(q_list)
        rank_p = {p: i for i, p in enumerate(p_list)}
        rank_q = {q: i for i, q in enumerate(q_list)}
        need_p = {p: d - deg_p[p] for p in p_list if deg_p[p] < d}
        need_q = {q: d - deg_q[q] for q in q_list if deg_q[q] < d}
        if sum(need_p.values()) != sum(need_q.values()):
            raise InvalidGraphError(
                "group deficits differ: "
                f"{sum(need_p.values())} vs {sum(need_q.values())}"
            )
        while need_p:
            p = min(need_p, key=lambda v: (-need_p[v], rank_p[v]))
            for _ in range(need_p.pop(p)):
                q = min(
                    need_q,
                    key=lambda v: ((p, v) in adjacent, -need_q[v], rank_q[v]),
                )
                added.append((p, q))
                adjacent.add((p, q))
                need_q[q] -= 1
                if need_q[q] == 0:
                    del need_q[q]
    return added


def graph_from_edges(
    n: int, d: int, edges: Iterable[Tuple[int, int]], multigraph: bool = True
) -> BipartiteRegularGraph:
    """Build a graph whose rows list the edges in the given order."""
    adj_p: List[List[int]] = [[] for _ in range(n)]
    adj_q: List[List[int]] = [[] for _ in range(n)]
    for p, q in edges:
        adj_p[p].append(q)
        adj_q[q].append(p)
    return BipartiteRegularGraph(adj_p, adj_q, multigraph=multigraph, d=d)


def gen_canonical(d: int, seed: Optional[int] = None) -> CanonicalGraph:
    """
    Generate a random member of the canonical lower-bound family.

    s gets d distinct P1 neighbours, t gets d distinct Q2 neighbours, a
    hidden perfect matching M' of size d joins Q1' to P2', and the remaining
    degrees are completed inside (P1, Q1) and (P2, Q2).

    Args:
        d: Degree, at least 1
        seed: Seed of every random choice

    Returns:
        CanonicalGraph with 8d + 2 vertices
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    layout = CanonicalLayout(d)
    rng = np.random.default_rng(seed)
    s_partners = rng.choice(list(layout.p1), d, replace=False)
    t_partners = rng.choice(list(layout.q2), d, replace=False)
    q1_prime = rng.choice(list(layout.q1), d, replace=False)
    p2_prime = rng.choice(list(layout.p2), d, replace=False)

    edges = [(int(p), layout.s) for p in s_partners]
    edges += [(layout.t, int(q)) for q in t_partners]
    hidden = [(int(p), int(q)) for p, q in zip(p2_prime, q1_prime)]
    edges += hidden
    edges += complete_regular(
        layout.n, d, edges, layout.groups(), order=rng
    )
    graph = graph_from_edges(layout.n, d, edges)
    graph.multigraph = any(
        len(set(row)) != len(row) for row in graph.adj_p
    )
    return CanonicalGraph(graph=graph, hidden=hidden, layout=layout)


def validate_canonical(canonical: CanonicalGraph) -> ValidationReport:
    """
    Check that a graph is a member of the canonical family for its layout.

    Args:
        canonical: Graph, hidden matching and layout

    Returns:
        Passing report or the first violation
    """
    layout = canonical.layout
    graph = canonical.graph
    d = layout.d
    if graph.n != layout.n or graph.d != d:
        return ValidationReport.violation(
            "layout", None, f"expected n={layout.n}, d={d}"
        )
    report = validate(graph)
    if not report.ok:
        return report
    s_row = graph.adj_q[layout.s]
    if len(set(s_row)) != d or any(p not in layout.p1 for p in s_row):
        return ValidationReport.violation(
            "terminal_s", layout.s, "s needs d distinct P1 neighbours"
        )
    t_row = graph.adj_p[layout.t]
    if len(set(t_row)) != d or any(q not in layout.q2 for q in t_row):
        return ValidationReport.violation(
            "terminal_t", layout.t, "t needs d distinct Q2 neighbours"
        )
    hidden = canonical.hidden
    if (
        len(hidden) != d
        or len({p for p, _ in hidden}) != d
        or len({q for _, q in hidden}) != d
    ):
        return ValidationReport.violation(
            "hidden", None, f"M' must be a matching of size {d}"
        )
    for p, q in hidden:
        if p not in layout.p2 or q not in layout.q1:
            return ValidationReport.violation(
                "hidden", p, f"M' edge ({p}, {q}) must join P2 to Q1"
            )
    crossing = Counter()
    for p, q in graph.edges():
        if p == layout.t or q == layout.s:
            continue
        if layout.pair_of(p) != layout.pair_of(q):
            crossing[(p, q)] += 1
    if crossing != Counter(hidden):
        return ValidationReport.violation(
            "crossing", None, "edges between pairs must be exactly M'"
        )
    return ValidationReport.passed()


def format_graph(
    graph: BipartiteRegularGraph, include_reverse: bool = False
) -> str:
    """Render a graph in the text format (header, adjP, optional adjQ)."""
    lines = [f"{graph.n} {graph.d}"]
    lines += [" ".join(map(str, row)) for row in graph.adj_p]
    if include_reverse:
        lines += [" ".join(map(str, row)) for row in graph.adj_q]
    return "\n".join(lines) + "\n"


def _parse_ints(text: str, line: int) -> List[int]:
    try:
        return [int(token) for token in text.split()]
    except ValueError:
        raise GraphFormatError(f"non-integer token in {text!r}", line)


def parse_graph(text: str, multigraph: bool = True) -> BipartiteRegularGraph:
    """
    Parse the text graph format.

    Line 1 is ``n d``; the next n lines are the rows of adjP; an optional
    further n lines give adjQ, which is derived otherwise. Lines starting
    with ``#`` are comments.

    Raises:
        GraphFormatError: On a malformed header, a row whose length is not
            d, or an index outside [0, n)
    """
    lines = [
        (number, raw)
        for number, raw in enumerate(text.splitlines(), 1)
        if not raw.lstrip().startswith("#")
    ]
    while lines and not lines[-1][1].strip():
        lines.pop()
    if not lines:
        raise GraphFormatError("empty input", 1)
    first, raw_header = lines[0]
    header = _parse_ints(raw_header, first)
    if len(header) != 2 or header[0] < 1 or header[1] < 1:
        raise GraphFormatError("header must be 'n d' with n, d >= 1", first)
    n, d = header
    body = lines[1:]
    if len(body) not in (n, 2 * n):
        raise GraphFormatError(
            f"expected {n} or {2 * n} rows after the header, "
            f"found {len(body)}",
            lines[-1][0],
        )
    rows: List[List[int]] = []
    for line, raw in body:
        row = _parse_ints(raw, line)
        if len(row) != d:
            raise GraphFormatError(
                f"row has {len(row)} entries, expected {d}", line
            )
        for value in row:
            if not 0 <= value < n:
                raise GraphFormatError(
                    f"index {value} outside [0, {n})", line
                )
        rows.append(row)
    adj_q = rows[n:] if len(rows) == 2 * n else None
    return BipartiteRegularGraph(
        rows[:n], adj_q, multigraph=multigraph, d=d
    )


def format_canonical(canonical: CanonicalGraph) -> str:
    """
    Render a canonical graph followed by a comment block.

    The block holds one ``# hidden p q`` line per M' edge and one
    ``# labels <side> ...`` line per side with the partition of every
    vertex, so the file still parses as a plain graph.
    """
    lines = [f"# hidden {p} {q}" for p, q in canonical.hidden]
    for side, names in canonical.layout.labels().items():
        lines.append(f"# labels {side} " + " ".join(names))
    return format_graph(canonical.graph) + "\n".join(lines) + "\n"


def parse_canonical(text: str, multigraph: bool = True) -> CanonicalGraph:
    """
    Parse a graph written by :func:`format_canonical`.

    The layout follows from the degree; labels are not read back.

    Raises:
        GraphFormatError: On a malformed graph or ``# hidden`` line
    """
    graph = parse_graph(text, multigraph=multigraph)
    hidden: List[Tuple[int, int]] = []
    for number, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if tokens[:2] != ["#", "hidden"]:
            continue
        values = _parse_ints(" ".join(tokens[2:]), number)
        if len(values) != 2:
            raise GraphFormatError("expected '# hidden p q'", number)
        hidden.append((values[0], values[1]))
    return CanonicalGraph(
        graph=graph, hidden=hidden, layout=CanonicalLayout(graph.d)
    )


def read_canonical(path: PathLike, multigraph: bool = True) -> CanonicalGraph:
    """Read a canonical graph file with its M' comment block."""
    return parse_canonical(Path(path).read_text(), multigraph=multigraph)


def read_graph(
    path: PathLike, multigraph: bool = True
) -> BipartiteRegularGraph:
    """Read a graph file."""
    return parse_graph(Path(path).read_text(), multigraph=multigraph)


def write_graph(
    graph: BipartiteRegularGraph,
    path: PathLike,
    include_reverse: bool = False,
) -> None:
    """Write a graph file."""
    Path(path).write_text(format_graph(graph, include_reverse))


def format_matching(matching: Matching) -> str:
    """Render a matching as lines ``p q`` (``p -1`` when unmatched)."""
    return "".join(f"{p} {q}\n" for p, q in enumerate(matching.match_p))


def parse_matching(
    text: str, graph: Optional[BipartiteRegularGraph] = None
) -> Matching:
    """Parse the matching format; slots are resolved against ``graph``."""
    match_p: Dict[int, int] = {}
    for offset, raw in enumerate(text.splitlines()):
        if not raw.strip():
            continue
        values = _parse_ints(raw, offset + 1)
        if len(values) != 2:
            raise GraphFormatError("expected 'p q'", offset + 1)
        p, q = values
        if p in match_p or p < 0:
            raise GraphFormatError(f"bad or repeated p={p}", offset + 1)
        match_p[p] = q
    n = len(match_p)
    if sorted(match_p) != list(range(n)):
        raise GraphFormatError("rows must cover p = 0 .. n-1")
    return Matching.from_arrays(
        [match_p[p] for p in range(n)], graph=graph
    )


def read_matching(
    path: PathLike, graph: Optional[BipartiteRegularGraph] = None
) -> Matching:
    """Read a matching file."""
    return parse_matching(Path(path).read_text(), graph)


def write_matching(matching: Matching, path: PathLike) -> None:
    """Write a matching file."""
    Path(path).write_text(format_matching(matching))
