"""Adaptive adversary for the edge-probe game on the canonical family.

A prober learns the graph only by querying a vertex u and being told one
more neighbour of u. The adversary first answers evasively, keeping every
answer inside the (P1, Q1) or (P2, Q2) pair, and only commits to a concrete
canonical graph once the free vertices of Q1 or P2 run low. The hidden
matching M' joining Q1 to P2 is chosen at that moment, so no M' edge can be
revealed while the adversary is evasive.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

from regmatch.exceptions import AdversaryError, ProberContractError
from regmatch.graph import (
    NONE,
    CanonicalGraph,
    CanonicalLayout,
    complete_regular,
    graph_from_edges,
    validate_canonical,
)
from regmatch.models import GameRecord, ProbeRecord, ValidationReport

logger = logging.getLogger(__name__)

P_SIDE = "P"
Q_SIDE = "Q"

Query = Tuple[str, int]


class Mode(str, Enum):
    EVASIVE = "EVASIVE"
    NONEVASIVE = "NONEVASIVE"


class Adversary:
    """
    State of one probe game: revealed neighbourhoods, mode and commitment.

    The terminals and their edges (s to the lowest d vertices of P1, t to
    the lowest d vertices of Q2) are revealed at no cost when the game
    starts. Revealed neighbourhoods are kept in reveal order.

    Args:
        d: Degree, at least 1

    Example:
        >>> adversary = Adversary(2)
        >>> adversary.answer_query("P", 0).v
        0
    """

    def __init__(self, d: int) -> None:
        if d < 1:
            raise ValueError(f"need d >= 1, got {d}")
        self.d = d
        self.layout = CanonicalLayout(d)
        n = self.layout.n
        self.nbr_p: List[List[int]] = [[] for _ in range(n)]
        self.nbr_q: List[List[int]] = [[] for _ in range(n)]
        self._edges: List[Tuple[int, int]] = []
        self.mode = Mode.EVASIVE
        self.probe_count = 0
        self.evasive_probes = 0
        self.committed: Optional[CanonicalGraph] = None
        layout = self.layout
        for p in list(layout.p1)[:d]:
            self._reveal(p, layout.s)
        for q in list(layout.q2)[:d]:
            self._reveal(layout.t, q)

    def _reveal(self, p: int, q: int) -> None:
        self.nbr_p[p].append(q)
        self.nbr_q[q].append(p)
        self._edges.append((p, q))

    def neighbours(self, side: str, u: int) -> List[int]:
        """Revealed neighbours of a vertex, in reveal order."""
        return list(self._nbr(side)[u])

    def degree(self, side: str, u: int) -> int:
        return len(self._nbr(side)[u])

    def _nbr(self, side: str) -> List[List[int]]:
        if side == P_SIDE:
            return self.nbr_p
        if side == Q_SIDE:
            return self.nbr_q
        raise ValueError(f"side must be 'P' or 'Q', got {side!r}")

    def revealed_edges(self) -> List[Tuple[int, int]]:
        """Every revealed (p, q) edge, terminals first, in reveal order."""
        return list(self._edges)

    def free_count(self, side: str, vertices: Sequence[int]) -> int:
        """Vertices of ``vertices`` whose revealed degree is below d."""
        nbr = self._nbr(side)
        return sum(1 for u in vertices if len(nbr[u]) < self.d)

    def _free_vertices(
        self, side: str, vertices: Sequence[int]
    ) -> List[int]:
        nbr = self._nbr(side)
        return [u for u in vertices if len(nbr[u]) < self.d]

    def _low_on_free(self) -> bool:
        layout = self.layout
        return (
            self.free_count(Q_SIDE, layout.q1) < self.d + 1
            or self.free_count(P_SIDE, layout.p2) < self.d + 1
        )

    def _evasive_partner(self, side: str, u: int) -> Optional[int]:
        layout = self.layout
        if side == P_SIDE:
            candidates = layout.q1 if u in layout.p1 else layout.q2
            other = Q_SIDE
        else:
            candidates = layout.p1 if u in layout.q1 else layout.p2
            other = P_SIDE
        taken = set(self._nbr(side)[u])
        other_nbr = self._nbr(other)
        for v in candidates:
            if v not in taken and len(other_nbr[v]) < self.d:
                return v
        return None

    def check_conditions(self) -> ValidationReport:
        """Check that the revealed graph still extends to a canonical one."""
        layout = self.layout
        d = self.d
        for side, nbr in ((P_SIDE, self.nbr_p), (Q_SIDE, self.nbr_q)):
            for u, row in enumerate(nbr):
                if len(row) > d:
                    return ValidationReport.violation(
                        "degree", u, f"{side}{u} has {len(row)} > {d} edges"
                    )
        if self.nbr_q[layout.s] != list(layout.p1)[:d]:
            return ValidationReport.violation(
                "terminal_s", layout.s, "s edges changed"
            )
        if self.nbr_p[layout.t] != list(layout.q2)[:d]:
            return ValidationReport.violation(
                "terminal_t", layout.t, "t edges changed"
            )
        if self.mode == Mode.EVASIVE:
            for p, q in self._edges:
                if p == layout.t or q == layout.s:
                    continue
                if layout.pair_of(p) != layout.pair_of(q):
                    return ValidationReport.violation(
                        "pairs", p, f"edge ({p}, {q}) crosses pairs"
                    )
        if (
            self.free_count(Q_SIDE, layout.q1) < d
            or self.free_count(P_SIDE, layout.p2) < d
        ):
            return ValidationReport.violation(
                "free", None, "fewer than d free vertices in Q1 or P2"
            )
        return ValidationReport.passed()

    def complete_canonical(self) -> CanonicalGraph:
        """
        Extend the revealed graph to a member of the canonical family.

        M' joins the lowest d free vertices of Q1 to the lowest d free
        vertices of P2; the remaining deficits are paired inside each pair.
        Rows of the result list every revealed neighbour first, in reveal
        order.

        Raises:
            AdversaryError: If the revealed graph admits no completion
        """
        report = self.check_conditions()
        if not report.ok:
            raise AdversaryError(f"cannot complete: {report.message}")
        layout = self.layout
        d = self.d
        q_free = self._free_vertices(Q_SIDE, layout.q1)[:d]
        p_free = self._free_vertices(P_SIDE, layout.p2)[:d]
        hidden = list(zip(p_free, q_free))
        edges = self.revealed_edges() + hidden
        edges += complete_regular(layout.n, d, edges, layout.groups())
        graph = graph_from_edges(layout.n, d, edges)
        graph.multigraph = any(len(set(row)) != len(row) for row in graph.adj_p)
        canonical = CanonicalGraph(graph=graph, hidden=hidden, layout=layout)
        report = validate_canonical(canonical)
        if not report.ok:
            raise AdversaryError(
                f"completion is not canonical: {report.message}"
            )
        return canonical

    def _commit(self) -> None:
        self.committed = self.complete_canonical()
        self.mode = Mode.NONEVASIVE
        logger.debug(
            "adversary committed after %d evasive probes (d=%d)",
            self.evasive_probes,
            self.d,
        )

    def answer_query(self, side: str, u: int) -> ProbeRecord:
        """
        Reveal one more neighbour of ``u``.

        While evasive, the answer is the lowest-index free vertex on the
        other side of u's pair that is not already a neighbour of u; the
        game commits right after the answer that leaves Q1 or P2 with at
        most d free vertices. Once committed, the answer is the next
        unrevealed neighbour of u in the committed graph, in row order.

        Raises:
            ProberContractError: If u is unknown or already saturated
        """
        position = self.probe_count + 1
        nbr = self._nbr(side)
        if not 0 <= u < len(nbr):
            raise ProberContractError(f"no vertex {side}{u}", position)
        if len(nbr[u]) >= self.d:
            raise ProberContractError(f"{side}{u} is saturated", position)
        mode = self.mode
        v: Optional[int] = None
        if mode == Mode.EVASIVE:
            v = self._evasive_partner(side, u)
            if v is None:
                # only reachable once a pair holds d**2 answered edges
                self._commit()
                mode = self.mode
        if mode == Mode.NONEVASIVE:
            assert self.committed is not None
            graph = self.committed.graph
            row = graph.adj_p[u] if side == P_SIDE else graph.adj_q[u]
            unseen = Counter(row)
            unseen.subtract(nbr[u])
            v = next(w for w in row if unseen[w] > 0)
        assert v is not None
        p, q = (u, v) if side == P_SIDE else (v, u)
        self._reveal(p, q)
        self.probe_count += 1
        hidden = (
            self.committed is not None and (p, q) in self.committed.hidden_set
        )
        record = ProbeRecord(
            step=self.probe_count,
            u_side=side,
            u=u,
            v_side=Q_SIDE if side == P_SIDE else P_SIDE,
            v=v,
            mode=mode.value,
            hidden=hidden,
        )
        if mode == Mode.EVASIVE:
            self.evasive_probes += 1
            if self._low_on_free():
                self._commit()
        return record


class Prober(Protocol):
    """A deterministic probing strategy."""

    name: str

    def next_query(self, adversary: Adversary) -> Optional[Query]:
        """Return the next (side, vertex) to query, or None to stop."""
        ...


class SequentialScanProber:
    """Query P vertices in index order until saturated, then Q vertices."""

    name = "scan"

    def next_query(self, adversary: Adversary) -> Optional[Query]:
        n = adversary.layout.n
        for side in (P_SIDE, Q_SIDE):
            for u in range(n):
                if adversary.degree(side, u) < adversary.d:
                    return side, u
        return None


class GreedyAugmentingProber:
    """
    Grow a matching over the revealed edges, probing only when stuck.

    Before each query the prober augments its matching along any
    alternating path of revealed edges, found by depth-first search from
    the free P vertices. When none exists it queries the first unsaturated
    P vertex the search visited, or failing that the first unsaturated Q
    vertex visited by the same search from the free Q vertices. It stops
    once its matching is perfect.
    """

    name = "greedy"

    def __init__(self) -> None:
        self.match_p: Dict[int, int] = {}
        self.match_q: Dict[int, int] = {}

    def _augment(self, adversary: Adversary) -> Optional[List[int]]:
        """Augment once if possible, else list P vertices in DFS order."""
        n = adversary.layout.n
        parent: Dict[int, Tuple[int, int]] = {}
        order: List[int] = []
        stack: List[int] = []
        for p in reversed(range(n)):
            if p not in self.match_p:
                parent[p] = (NONE, NONE)
                stack.append(p)
        while stack:
            p = stack.pop()
            order.append(p)
            for q in reversed(adversary.nbr_p[p]):
                if self.match_p.get(p) == q:
                    continue
                mate = self.match_q.get(q)
                if mate is None:
                    while p != NONE:
                        previous_p, previous_q = parent[p]
                        self.match_p[p] = q
                        self.match_q[q] = p
                        p, q = previous_p, previous_q
                    return None
                if mate not in parent:
                    parent[mate] = (p, q)
                    stack.append(mate)
        return order

    def _reach_from_free_q(self, adversary: Adversary) -> List[int]:
        n = adversary.layout.n
        seen = {q for q in range(n) if q not in self.match_q}
        order: List[int] = []
        stack = sorted(seen, reverse=True)
        while stack:
            q = stack.pop()
            order.append(q)
            for p in reversed(adversary.nbr_q[q]):
                mate = self.match_p.get(p)
                if mate is not None and mate != q and mate not in seen:
                    seen.add(mate)
                    stack.append(mate)
        return order

    def next_query(self, adversary: Adversary) -> Optional[Query]:
        n = adversary.layout.n
        while True:
            if len(self.match_p) == n:
                return None
            order = self._augment(adversary)
            if order is not None:
                break
        for p in order:
            if adversary.degree(P_SIDE, p) < adversary.d:
                return P_SIDE, p
        for q in self._reach_from_free_q(adversary):
            if adversary.degree(Q_SIDE, q) < adversary.d:
                return Q_SIDE, q
        return None


PROBERS = {
    SequentialScanProber.name: SequentialScanProber,
    GreedyAugmentingProber.name: GreedyAugmentingProber,
}


def make_prober(name: str) -> Prober:
    """Instantiate a reference prober by id."""
    try:
        return PROBERS[name]()
    except KeyError:
        raise ValueError(
            f"unknown prober {name!r}; choose from {sorted(PROBERS)}"
        )


@dataclass
class GameResult:
    """Outcome of one game, including the full transcript."""

    prober: str
    d: int
    probes_at_reveal: Optional[int]
    evasive_probes: int
    halted: bool
    transcript: List[ProbeRecord] = field(default_factory=list)
    committed: Optional[CanonicalGraph] = None

    @property
    def probes(self) -> int:
        """Probes until the first M' edge, or all probes if none came."""
        if self.probes_at_reveal is not None:
            return self.probes_at_reveal
        return len(self.transcript)

    def to_record(self) -> GameRecord:
        return GameRecord(
            prober=self.prober,
            d=self.d,
            probes=self.probes,
            evasive_probes=self.evasive_probes,
            halted=self.halted,
        )


def run_game(
    prober: Prober, d: int, stop_at_reveal: bool = True
) -> GameResult:
    """
    Play ``prober`` against a fresh adversary of degree d.

    The game ends at the first revealed M' edge (when ``stop_at_reveal``),
    when the prober stops, or when every edge is revealed.

    Raises:
        ProberContractError: If the prober queries a saturated vertex
    """
    adversary = Adversary(d)
    transcript: List[ProbeRecord] = []
    probes_at_reveal: Optional[int] = None
    halted = False
    limit = adversary.layout.n * d
    while len(transcript) < limit:
        query = prober.next_query(adversary)
        if query is None:
            halted = True
            break
        record = adversary.answer_query(*query)
        transcript.append(record)
        if record.hidden and probes_at_reveal is None:
            probes_at_reveal = record.step
            if stop_at_reveal:
                break
    if adversary.committed is None:
        adversary._commit()
    logger.info(
        "game d=%d prober=%s: %s probes before M' (d^2=%d)",
        d,
        prober.name,
        probes_at_reveal,
        d * d,
    )
    return GameResult(
        prober=prober.name,
        d=d,
        probes_at_reveal=probes_at_reveal,
        evasive_probes=adversary.evasive_probes,
        halted=halted and probes_at_reveal is None,
        transcript=transcript,
        committed=adversary.committed,
    )


def replay_transcript(
    transcript: Sequence[ProbeRecord], committed: CanonicalGraph
) -> ValidationReport:
    """Check every answer of a transcript against a committed graph."""
    available = Counter(committed.graph.edges())
    for record in transcript:
        if record.u_side == P_SIDE:
            edge = (record.u, record.v)
        else:
            edge = (record.v, record.u)
        if available[edge] <= 0:
            return ValidationReport.violation(
                "consistency",
                record.step,
                f"answer {edge} of probe {record.step} is not an edge",
            )
        available[edge] -= 1
        if record.hidden != (edge in committed.hidden_set):
            return ValidationReport.violation(
                "hidden", record.step, f"probe {record.step} mislabels M'"
            )
    return ValidationReport.passed()
