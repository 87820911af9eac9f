"""Classical matchers used as oracles and benchmark comparators."""

import logging
from collections import deque
from typing import List, Optional, Sequence, Tuple, Union

from regmatch.exceptions import InvalidGraphError
from regmatch.graph import NONE, BipartiteRegularGraph, Matching

logger = logging.getLogger(__name__)

Adjacency = Sequence[Sequence[int]]

_INF = float("inf")


def hopcroft_karp(
    graph: Union[BipartiteRegularGraph, Adjacency],
    n_q: Optional[int] = None,
) -> Matching:
    """
    Maximum matching of a bipartite graph by Hopcroft-Karp.

    Works on any adjacency rows, regular or not, so it doubles as the
    oracle for the support graph of a matrix. Both the layering search and
    the augmenting search are iterative.

    Args:
        graph: A regular graph or plain adjacency rows of P vertices
        n_q: Number of Q vertices; inferred from the rows when omitted

    Returns:
        A maximum matching; for a regular graph it is perfect

    Example:
        >>> hopcroft_karp([[0, 1, 2]], n_q=3).size
        1
    """
    regular = isinstance(graph, BipartiteRegularGraph)
    adj: Adjacency = graph.adj_p if regular else graph
    n_p = len(adj)
    if n_q is None:
        n_q = graph.n_q if regular else 1 + max(
            (q for row in adj for q in row), default=-1
        )
    match_p = [NONE] * n_p
    match_q = [NONE] * n_q
    dist: List[float] = [_INF] * n_p

    def layer() -> float:
        queue = deque()
        for p in range(n_p):
            if match_p[p] == NONE:
                dist[p] = 0
                queue.append(p)
            else:
                dist[p] = _INF
        limit = _INF
        while queue:
            p = queue.popleft()
            if dist[p] >= limit:
                continue
            for q in adj[p]:
                mate = match_q[q]
                if mate == NONE:
                    if limit == _INF:
                        limit = dist[p] + 1
                elif dist[mate] == _INF:
                    dist[mate] = dist[p] + 1
                    queue.append(mate)
        return limit

    def augment_from(root: int, limit: float) -> bool:
        stack = [root]
        via: List[int] = []
        cursor = {root: 0}
        while stack:
            p = stack[-1]
            row = adj[p]
            position = cursor[p]
            if position == len(row):
                dist[p] = _INF
                stack.pop()
                if via:
                    via.pop()
                continue
            cursor[p] = position + 1
            q = row[position]
            mate = match_q[q]
            if mate == NONE:
                if dist[p] + 1 == limit:
                    for u, target in zip(stack, via + [q]):
                        match_p[u] = target
                        match_q[target] = u
                    return True
            elif dist[mate] == dist[p] + 1 and dist[mate] < limit:
                stack.append(mate)
                via.append(q)
                cursor.setdefault(mate, 0)
        return False

    phases = 0
    while True:
        limit = layer()
        if limit == _INF:
            break
        phases += 1
        for p in range(n_p):
            if match_p[p] == NONE:
                augment_from(p, limit)

    matching = Matching(n_p, n_q)
    for p, q in enumerate(match_p):
        if q != NONE:
            slot = graph.slot_of(p, q) if regular else NONE
            matching.pair(p, q, slot)
    logger.debug(
        "hopcroft-karp matched %d of %d in %d phases",
        matching.size,
        n_p,
        phases,
    )
    return matching


def _orient(graph: BipartiteRegularGraph) -> List[List[bool]]:
    """Mark each (p, slot) edge True when an Euler tour crosses it P to Q."""
    n, d = graph.n, graph.d
    # edge id p * d + slot; P vertex p is node p, Q vertex q is node n + q
    incident: List[List[int]] = [
        [p * d + slot for slot in range(d)] for p in range(n)
    ]
    incident += [[] for _ in range(n)]
    for p, row in enumerate(graph.adj_p):
        for slot, q in enumerate(row):
            incident[n + q].append(p * d + slot)
    used = [False] * (n * d)
    forward = [[False] * d for _ in range(n)]
    cursor = [0] * (2 * n)
    for start in range(2 * n):
        stack = [start]
        while stack:
            v = stack[-1]
            edges = incident[v]
            while cursor[v] < len(edges) and used[edges[cursor[v]]]:
                cursor[v] += 1
            if cursor[v] == len(edges):
                stack.pop()
                continue
            e = edges[cursor[v]]
            used[e] = True
            p, slot = divmod(e, d)
            if v < n:
                forward[p][slot] = True
                stack.append(n + graph.adj_p[p][slot])
            else:
                stack.append(p)
    return forward


def euler_split(
    graph: BipartiteRegularGraph,
) -> Tuple[BipartiteRegularGraph, BipartiteRegularGraph]:
    """
    Split a 2k-regular bipartite multigraph into two k-regular halves.

    Edges are oriented along Euler tours of every component; the edges
    crossed from P to Q form the first half and the rest the second. Each
    vertex is entered as often as it is left, so both halves are regular.

    Raises:
        InvalidGraphError: If the degree is odd
    """
    if graph.d % 2:
        raise InvalidGraphError(
            f"euler_split needs even degree, got d={graph.d}"
        )
    forward = _orient(graph)
    first: List[List[int]] = []
    second: List[List[int]] = []
    for row, marks in zip(graph.adj_p, forward):
        first.append([q for q, mark in zip(row, marks) if mark])
        second.append([q for q, mark in zip(row, marks) if not mark])
    half = graph.d // 2
    return (
        BipartiteRegularGraph(first, multigraph=graph.multigraph, d=half),
        BipartiteRegularGraph(second, multigraph=graph.multigraph, d=half),
    )


def _require_power_of_two(d: int) -> None:
    if d < 1 or d & (d - 1):
        raise InvalidGraphError(f"d not a power of two: d={d}")


def euler_matching(graph: BipartiteRegularGraph) -> Matching:
    """
    Perfect matching by repeated Euler splits down to degree 1.

    Raises:
        InvalidGraphError: If d is not a power of two
    """
    _require_power_of_two(graph.d)
    current = graph
    while current.d > 1:
        current = euler_split(current)[0]
    return Matching.from_pairs(
        graph, ((p, row[0]) for p, row in enumerate(current.adj_p))
    )


def euler_coloring(graph: BipartiteRegularGraph) -> List[Matching]:
    """
    Partition the edges into d perfect matchings by splitting every branch.

    Parallel edges land in different matchings, so two returned matchings
    can share a pair while still using distinct edge occurrences.

    Raises:
        InvalidGraphError: If d is not a power of two
    """
    _require_power_of_two(graph.d)
    pending = [graph]
    leaves: List[BipartiteRegularGraph] = []
    while pending:
        current = pending.pop()
        if current.d == 1:
            leaves.append(current)
        else:
            pending.extend(reversed(euler_split(current)))
    return [
        Matching.from_pairs(
            graph, ((p, row[0]) for p, row in enumerate(leaf.adj_p))
        )
        for leaf in leaves
    ]
