"""Tests for support matchings and Birkhoff-von Neumann decomposition."""

from typing import Optional

import numpy as np
import pytest

from regmatch.bvn import (
    StochasticSupportMatrix,
    decompose,
    extract_matching,
    find_support_matching,
    format_decomposition,
    format_matrix,
    from_dense,
    gen_convex_permutations,
    gen_integer_regular,
    load_matrix,
    parse_decomposition,
    parse_matrix,
    reconstruct,
    support_adjacency,
    verify_decomposition,
)
from regmatch.baselines import hopcroft_karp
from regmatch.config import Settings
from regmatch.exceptions import (
    GraphFormatError,
    NotDoublyStochasticError,
    SupportError,
)
from regmatch.graph import Matching
from regmatch.rng import RandomStream
from regmatch.walk import hitting_time, run_augmentations


def _rounding_leftovers(
    settings: Optional[Settings] = None,
) -> StochasticSupportMatrix:
    # Both rows end up holding about 1e-11 in column 0 only.
    matrix = from_dense(np.full((2, 2), 0.5), settings=settings)
    matrix._subtract(0, 1, 0.5)
    matrix._subtract(1, 1, 0.5)
    matrix._subtract(0, 0, 0.5 - 1e-11)
    matrix._subtract(1, 0, 0.5 - 1e-11)
    return matrix


class TestLoadMatrix:
    """Tests for load_matrix."""

    def test_uniform(self, uniform_matrix: StochasticSupportMatrix) -> None:
        """Test a valid float matrix loads with its mass and support."""
        assert uniform_matrix.n == 2
        assert uniform_matrix.m == 4
        assert uniform_matrix.mass == 2.0
        assert uniform_matrix.mode == "float"
        assert uniform_matrix.row_sum(0) == 1.0

    def test_integer(self, integer_matrix: StochasticSupportMatrix) -> None:
        """Test integer weights stay exact."""
        assert integer_matrix.mode == "integer"
        assert integer_matrix.mass == 6
        assert integer_matrix.weight(0, 0) == 2
        assert integer_matrix.weight(0, 1) == 1

    def test_row_sum_error(self) -> None:
        """Test an unbalanced row is named with its sum."""
        with pytest.raises(NotDoublyStochasticError) as exc_info:
            from_dense(np.array([[0.6, 0.5], [0.4, 0.5]]))

        assert "row 0 sums to 1.1" in str(exc_info.value)

    def test_column_sum_error(self) -> None:
        """Test an unbalanced column is reported."""
        with pytest.raises(NotDoublyStochasticError) as exc_info:
            load_matrix([(0, 0, 1.0), (1, 0, 1.0)])

        assert "column 0 sums to 2, expected 1" in str(exc_info.value)

    def test_integer_total_not_divisible(self) -> None:
        """Test integer totals must divide by n."""
        with pytest.raises(NotDoublyStochasticError) as exc_info:
            load_matrix([(0, 0, 1), (1, 1, 2)], integer=True)

        assert "not divisible" in str(exc_info.value)

    @pytest.mark.parametrize(
        "triplets",
        [
            [(0, 0, 1.0), (0, 0, 1.0)],
            [(0, 0, 1.0), (1, 1, 0.0)],
            [(0, 0, 1.0), (1, 1, -1.0)],
        ],
    )
    def test_bad_entries(self, triplets: list) -> None:
        """Test duplicates and nonpositive weights are format errors."""
        with pytest.raises(GraphFormatError):
            load_matrix(triplets)

    def test_index_out_of_range(self) -> None:
        """Test indices must lie below n."""
        with pytest.raises(GraphFormatError):
            load_matrix([(0, 0, 1.0), (1, 2, 1.0)], n=2)

    def test_dense_round_trip(self, uniform_matrix) -> None:
        """Test the dense view holds every entry."""
        assert uniform_matrix.to_dense().tolist() == [[0.5, 0.5], [0.5, 0.5]]


class TestSupportMatching:
    """Tests for perfect matchings inside a support."""

    def test_matching_lies_in_support(self) -> None:
        """Test every matched pair is a support entry."""
        matrix = gen_convex_permutations(30, 3, seed=4)
        matching = find_support_matching(matrix, rng=1)

        assert matching.is_perfect
        for p, q in matching.pairs():
            assert matrix.weight(p, q) > 0

    def test_sparse_support(self) -> None:
        """Test a permutation matrix yields that permutation."""
        matrix = load_matrix([(0, 2, 1.0), (1, 0, 1.0), (2, 1, 1.0)])

        assert find_support_matching(matrix, rng=0).match_p == [2, 0, 1]

    def test_support_without_matching(self) -> None:
        """Test a support with no perfect matching raises SupportError."""
        rows = [[(0, 0.5), (1, 0.5)] for _ in range(3)]
        matrix = StochasticSupportMatrix(
            3, rows, settings=Settings(untruncated_cap_factor=10)
        )

        with pytest.raises(SupportError):
            find_support_matching(matrix, rng=0)

    def test_agrees_with_hopcroft_karp(self) -> None:
        """Test the walk and Hopcroft-Karp both match a large support."""
        matrix = gen_convex_permutations(128, 50, seed=1)

        matching = find_support_matching(matrix, rng=2)
        oracle = hopcroft_karp(support_adjacency(matrix), n_q=128)

        assert matching.is_perfect
        assert oracle.size == 128
        for p, q in matching.pairs():
            assert matrix.weight(p, q) > 0

    def test_dead_end_supernode(self) -> None:
        """Test a row with a single entry cannot serve as a supernode."""
        rows = [[(0, 1.0)], [(0, 1.0)]]
        matrix = StochasticSupportMatrix(2, rows)

        with pytest.raises(SupportError):
            find_support_matching(matrix, rng=0)


class TestExtractMatching:
    """Tests for peeling a single term."""

    def test_uniform(self, uniform_matrix) -> None:
        """Test one term removes half of the 2 x 2 uniform matrix."""
        coefficient, permutation = extract_matching(uniform_matrix, rng=3)

        assert coefficient == 0.5
        assert sorted(permutation) == [0, 1]
        assert uniform_matrix.m == 2
        assert uniform_matrix.mass == pytest.approx(1.0)
        for p, q in enumerate(permutation):
            assert uniform_matrix.weight(p, q) == 0

    def test_removes_an_entry(self) -> None:
        """Test every extraction deletes at least one entry."""
        matrix = gen_convex_permutations(20, 4, seed=2)
        before = matrix.m

        extract_matching(matrix, rng=5)

        assert matrix.m < before

    def test_sums_stay_balanced(self) -> None:
        """Test rows and columns share one sum after every extraction."""
        matrix = gen_convex_permutations(32, 6, seed=11)
        stream = RandomStream.from_seed(3)
        tolerance = 1e-9 * 32

        while matrix.m >= matrix.n and matrix.mass > 1e-6:
            extract_matching(matrix, stream)

            dense = matrix.to_dense()
            target = matrix.mass / matrix.n
            for sums in (dense.sum(axis=1), dense.sum(axis=0), matrix.colsum):
                assert np.allclose(sums, target, rtol=0, atol=tolerance)

    @pytest.mark.slow
    @pytest.mark.parametrize("unmatched", [64, 32])
    def test_weighted_hitting_time(self, unmatched: int) -> None:
        """Test weighted walks stay below 2 + n / k steps on average."""
        matrix = gen_convex_permutations(64, 8, seed=9)
        stream = RandomStream.from_seed(4)
        matching = Matching(64)
        if unmatched < 64:
            run_augmentations(
                matrix, matching, stream, target_size=64 - unmatched
            )
        lengths = [hitting_time(matrix, matching, stream) for _ in range(10**4)]

        assert sum(lengths) / len(lengths) <= 1.1 * (2 + 64 / unmatched)


class TestDecompose:
    """Tests for the full decomposition."""

    def test_identity(self) -> None:
        """Test the identity decomposes into itself."""
        matrix = from_dense(np.eye(3))
        decomposition = decompose(matrix, rng=0)

        assert len(decomposition.terms) == 1
        assert decomposition.terms[0].coefficient == 1.0
        assert decomposition.terms[0].permutation == [0, 1, 2]
        assert decomposition.residual == 0.0

    def test_uniform_two_by_two(self, uniform_matrix) -> None:
        """Test the uniform matrix splits into both permutations."""
        decomposition = decompose(uniform_matrix, rng=1)

        assert [t.coefficient for t in decomposition.terms] == [0.5, 0.5]
        assert sorted(t.permutation for t in decomposition.terms) == [
            [0, 1],
            [1, 0],
        ]
        assert uniform_matrix.m == 0

    def test_integer_exact(self, integer_matrix) -> None:
        """Test integer decompositions reconstruct exactly."""
        original = integer_matrix.to_dense()
        decomposition = decompose(integer_matrix, rng=2)

        assert decomposition.integer
        assert decomposition.coefficient_sum == 3
        assert len(decomposition.terms) == 2
        assert (reconstruct(decomposition) == original).all()
        assert verify_decomposition(decomposition, original).ok

    def test_term_limit(self) -> None:
        """Test k caps the number of terms and leaves a residual."""
        matrix = gen_convex_permutations(16, 4, seed=8)
        decomposition = decompose(matrix, k=1, rng=0)

        assert len(decomposition.terms) == 1
        assert 0 < decomposition.residual < 1

    def test_convex_combination(self) -> None:
        """Test a random convex combination is decomposed and rebuilt."""
        matrix = gen_convex_permutations(32, 4, seed=6)
        original = matrix.to_dense()
        entries = matrix.m

        decomposition = decompose(matrix, rng=7)

        assert len(decomposition.terms) <= entries - 32 + 1
        assert decomposition.coefficient_sum == pytest.approx(1.0, abs=1e-9)
        report = verify_decomposition(
            decomposition, original, matrix.to_dense()
        )
        assert report.ok
        for term in decomposition.terms:
            assert term.coefficient > 0
            assert sorted(term.permutation) == list(range(32))

    def test_successive_terms_differ(self) -> None:
        """Test no permutation is extracted twice in a row."""
        matrix = gen_convex_permutations(24, 5, seed=3)
        terms = decompose(matrix, rng=4).terms

        for first, second in zip(terms, terms[1:]):
            assert first.permutation != second.permutation

    def test_rounding_leftovers_become_residual(self) -> None:
        """Test leftover mass with no perfect matching ends the run."""
        matrix = _rounding_leftovers()

        decomposition = decompose(matrix, rng=0)

        assert decomposition.terms == []
        assert decomposition.residual == pytest.approx(1e-11, rel=1e-3)
        assert matrix.m == 2

    def test_unmatchable_mass_above_tolerance(self) -> None:
        """Test the same leftovers raise once they exceed the tolerance."""
        matrix = _rounding_leftovers(Settings(sum_tolerance=1e-13))

        with pytest.raises(SupportError):
            decompose(matrix, rng=0)

    @pytest.mark.slow
    def test_acceptance_size(self) -> None:
        """Test fifty permutations of size 128 decompose within 1e-9."""
        matrix = gen_convex_permutations(128, 50, seed=1)
        original = matrix.to_dense()
        entries = matrix.m

        decomposition = decompose(matrix, rng=2)

        assert len(decomposition.terms) <= entries - 128 + 1
        assert decomposition.coefficient_sum == pytest.approx(1.0, abs=1e-9)
        assert np.abs(reconstruct(decomposition) - original).max() <= 1e-9
        assert verify_decomposition(
            decomposition, original, matrix.to_dense()
        ).ok

    @pytest.mark.slow
    def test_integer_acceptance_size(self) -> None:
        """Test a 12-regular integer matrix of size 64 decomposes exactly."""
        matrix = gen_integer_regular(64, 12, seed=4)
        original = matrix.to_dense()

        decomposition = decompose(matrix, rng=5)

        assert decomposition.coefficient_sum == 12
        assert decomposition.residual == 0.0
        assert (reconstruct(decomposition) == original).all()
        assert verify_decomposition(decomposition, original).ok

    def test_verify_detects_mismatch(self, uniform_matrix) -> None:
        """Test a decomposition of another matrix fails verification."""
        decomposition = decompose(uniform_matrix, rng=0)

        report = verify_decomposition(decomposition, np.eye(2))
        assert report.invariant == "reconstruction"


class TestGenerators:
    """Tests for matrix generators."""

    def test_integer_regular_sums(self) -> None:
        """Test every row and column sums to the degree."""
        dense = gen_integer_regular(25, 6, seed=1).to_dense()

        assert (dense.sum(axis=0) == 6).all()
        assert (dense.sum(axis=1) == 6).all()

    def test_convex_sums(self) -> None:
        """Test rows and columns of a convex combination sum to one."""
        dense = gen_convex_permutations(25, 6, seed=1).to_dense()

        assert np.allclose(dense.sum(axis=0), 1.0)
        assert np.allclose(dense.sum(axis=1), 1.0)


class TestFormats:
    """Tests for the matrix and decomposition text formats."""

    def test_matrix_text(self, integer_matrix) -> None:
        """Test integer matrices render and parse."""
        text = format_matrix(integer_matrix)

        assert text.splitlines()[0] == "2 4 integer"
        parsed = parse_matrix(text)
        assert (parsed.to_dense() == integer_matrix.to_dense()).all()

    def test_float_weights_survive(self) -> None:
        """Test float weights are written at full precision."""
        matrix = gen_convex_permutations(10, 3, seed=5)

        parsed = parse_matrix(format_matrix(matrix))
        assert (parsed.to_dense() == matrix.to_dense()).all()

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "2 4\n",
            "2 4 complex\n",
            "2 2 float\n0 0 1.0\n",
            "1 1 float\n0 x 1\n",
        ],
    )
    def test_malformed_matrix(self, text: str) -> None:
        """Test malformed matrix text raises GraphFormatError."""
        with pytest.raises(GraphFormatError):
            parse_matrix(text)

    def test_decomposition_text(self, integer_matrix) -> None:
        """Test decomposition lines parse back to the same terms."""
        decomposition = decompose(integer_matrix, rng=0)

        parsed = parse_decomposition(
            format_decomposition(decomposition), integer=True
        )
        assert parsed.terms == decomposition.terms

    def test_decomposition_width(self) -> None:
        """Test every term must have n columns."""
        with pytest.raises(GraphFormatError):
            parse_decomposition("0.5 0 1\n0.5 1\n")
