"""Tests for the probe game adversary and the reference probers."""

from types import SimpleNamespace

import pytest

from regmatch.adversary import (
    P_SIDE,
    Q_SIDE,
    Adversary,
    GreedyAugmentingProber,
    Mode,
    SequentialScanProber,
    make_prober,
    replay_transcript,
    run_game,
)
from regmatch.exceptions import ProberContractError
from regmatch.graph import validate_canonical
from regmatch.models import ProbeRecord

PROBERS = [SequentialScanProber, GreedyAugmentingProber]


class TestAdversary:
    """Tests for the Adversary state machine."""

    def test_terminal_edges_are_free(self) -> None:
        """Test s and t start saturated with the lowest indices."""
        adversary = Adversary(3)
        layout = adversary.layout

        assert adversary.neighbours(Q_SIDE, layout.s) == [0, 1, 2]
        assert adversary.neighbours(P_SIDE, layout.t) == [6, 7, 8]
        assert adversary.probe_count == 0
        assert adversary.mode == Mode.EVASIVE

    def test_first_answer(self) -> None:
        """Test the first answer is the lowest free partner in the pair."""
        record = Adversary(2).answer_query(P_SIDE, 0)

        assert record.step == 1
        assert record.v_side == Q_SIDE
        assert record.v == 0
        assert record.mode == "EVASIVE"
        assert not record.hidden

    def test_evasive_answers_stay_in_pair(self) -> None:
        """Test evasive answers never cross between the pairs."""
        adversary = Adversary(4)
        layout = adversary.layout

        while adversary.mode == Mode.EVASIVE:
            u = next(
                p
                for p in layout.p2
                if adversary.degree(P_SIDE, p) < adversary.d
            )
            record = adversary.answer_query(P_SIDE, u)
            if record.mode == "EVASIVE":
                assert record.v in layout.q2
        assert adversary.check_conditions().ok

    def test_repeated_queries_give_new_neighbours(self) -> None:
        """Test a vertex is never told the same neighbour twice early on."""
        adversary = Adversary(5)

        answers = [adversary.answer_query(Q_SIDE, 3).v for _ in range(5)]

        assert len(set(answers)) == 5
        assert adversary.degree(Q_SIDE, 3) == 5

    def test_saturated_query(self) -> None:
        """Test querying a saturated vertex breaks the contract."""
        adversary = Adversary(2)
        adversary.answer_query(P_SIDE, 3)
        adversary.answer_query(P_SIDE, 3)

        with pytest.raises(ProberContractError) as exc_info:
            adversary.answer_query(P_SIDE, 3)

        assert exc_info.value.position == 3
        assert "saturated" in str(exc_info.value)

    def test_terminal_query(self) -> None:
        """Test terminals are saturated from the start."""
        adversary = Adversary(2)

        with pytest.raises(ProberContractError):
            adversary.answer_query(P_SIDE, adversary.layout.t)

    def test_unknown_vertex(self) -> None:
        """Test indices outside the graph break the contract."""
        with pytest.raises(ProberContractError):
            Adversary(2).answer_query(Q_SIDE, 99)

    def test_unknown_side(self) -> None:
        """Test sides other than P and Q are rejected."""
        with pytest.raises(ValueError):
            Adversary(2).answer_query("R", 0)

    def test_fresh_completion_is_canonical(self) -> None:
        """Test the initial state extends to a family member."""
        adversary = Adversary(3)

        canonical = adversary.complete_canonical()

        assert validate_canonical(canonical).ok
        assert canonical.hidden == [(6, 0), (7, 1), (8, 2)]

    def test_invalid_degree(self) -> None:
        """Test degrees below one are rejected."""
        with pytest.raises(ValueError):
            Adversary(0)


class TestRunGame:
    """Tests for complete games."""

    @pytest.mark.parametrize("prober_class", PROBERS)
    @pytest.mark.parametrize(
        "d",
        [
            1,
            2,
            4,
            8,
            pytest.param(16, marks=pytest.mark.slow),
            pytest.param(32, marks=pytest.mark.slow),
        ],
    )
    def test_lower_bound(self, prober_class: type, d: int) -> None:
        """Test at least d squared probes come before any M' edge."""
        result = run_game(prober_class(), d)

        assert result.probes >= d * d
        assert result.evasive_probes >= d * d
        assert result.probes_at_reveal is not None
        assert not result.halted

    @pytest.mark.parametrize("prober_class", PROBERS)
    @pytest.mark.parametrize(
        "d",
        [
            2,
            4,
            8,
            pytest.param(16, marks=pytest.mark.slow),
            pytest.param(32, marks=pytest.mark.slow),
        ],
    )
    def test_transcript_is_consistent(
        self, prober_class: type, d: int
    ) -> None:
        """Test every answer is an edge of the committed graph."""
        result = run_game(prober_class(), d)

        assert result.committed is not None
        assert validate_canonical(result.committed).ok
        assert replay_transcript(result.transcript, result.committed).ok

    @pytest.mark.parametrize("d", [2, 4])
    def test_no_hidden_edge_while_evasive(self, d: int) -> None:
        """Test evasive answers precede committed ones and are never M'."""
        result = run_game(SequentialScanProber(), d, stop_at_reveal=False)
        modes = [record.mode for record in result.transcript]

        assert modes == sorted(modes)
        for record in result.transcript:
            if record.mode == "EVASIVE":
                assert not record.hidden

    def test_full_game_reveals_every_edge(self) -> None:
        """Test a game played to the end reveals the whole graph."""
        d = 3
        result = run_game(SequentialScanProber(), d, stop_at_reveal=False)

        assert result.halted is False
        assert len(result.transcript) == (4 * d + 1) * d - 2 * d
        hidden_probes = [r for r in result.transcript if r.hidden]
        assert len(hidden_probes) == d

    def test_record(self) -> None:
        """Test the summary row of a game."""
        record = run_game(GreedyAugmentingProber(), 2).to_record()

        assert record.prober == "greedy"
        assert record.d_squared == 4
        assert record.to_row()["d_squared"] == "4"


class TestReplay:
    """Tests for transcript replay."""

    def test_detects_foreign_edge(self) -> None:
        """Test an answer outside the committed graph is reported."""
        result = run_game(SequentialScanProber(), 2)
        forged = ProbeRecord(
            step=1,
            u_side=P_SIDE,
            u=0,
            v_side=Q_SIDE,
            v=4,
            mode="EVASIVE",
        )

        report = replay_transcript([forged], result.committed)

        assert report.invariant == "consistency"
        assert report.index == 1

    def test_detects_mislabelled_hidden_edge(self) -> None:
        """Test a hidden flag that disagrees with M' is reported."""
        result = run_game(SequentialScanProber(), 2)
        p, q = result.committed.hidden[0]
        forged = ProbeRecord(
            step=1, u_side=P_SIDE, u=p, v_side=Q_SIDE, v=q, mode="NONEVASIVE"
        )

        assert replay_transcript([forged], result.committed).invariant == (
            "hidden"
        )


class TestGreedyAugmentingSearch:
    """Tests for the alternating-path search of the greedy player."""

    @pytest.fixture
    def greedy(self) -> GreedyAugmentingProber:
        """Return a greedy player holding p -> p for p = 1, 2, 3."""
        greedy = GreedyAugmentingProber()
        for v in (1, 2, 3):
            greedy.match_p[v] = v
            greedy.match_q[v] = v
        return greedy

    def test_depth_first_order(self, greedy) -> None:
        """Test a branch is finished before its sibling is entered."""
        revealed = SimpleNamespace(
            layout=SimpleNamespace(n=4), nbr_p=[[1, 2], [1, 3], [2], [3]]
        )

        assert greedy._augment(revealed) == [0, 1, 3, 2]

    def test_augments_along_deep_path(self, greedy) -> None:
        """Test a free Q vertex at the end of a branch is matched."""
        revealed = SimpleNamespace(
            layout=SimpleNamespace(n=4), nbr_p=[[1, 2], [1, 3], [2], [3, 0]]
        )

        assert greedy._augment(revealed) is None
        assert greedy.match_p == {0: 1, 1: 3, 2: 2, 3: 0}
        assert greedy.match_q == {1: 0, 3: 1, 2: 2, 0: 3}


class TestMakeProber:
    """Tests for make_prober."""

    @pytest.mark.parametrize(
        "name, cls",
        [("scan", SequentialScanProber), ("greedy", GreedyAugmentingProber)],
    )
    def test_known(self, name: str, cls: type) -> None:
        """Test reference probers are found by id."""
        assert isinstance(make_prober(name), cls)

    def test_unknown(self) -> None:
        """Test unknown ids are rejected."""
        with pytest.raises(ValueError):
            make_prober("oracle")
