import numpy as np
import pytest

from relgeo.evaluation import mrr, reconstruction_mse, spearman

from conftest import mrr_sort_oracle, rank_oracle


class TestMrr:
    def test_perfect_diagonal(self):
        D = np.eye(5) + 0.01
        result = mrr(D, np.arange(5))
        assert result.mrr == 1.0
        assert np.all(result.ranks == 1)

    def test_known_ranks_arithmetic(self):
        # Rows engineered to rank the truth at 1, 2 and 4.
        D = np.array([
            [0.9, 0.1, 0.2, 0.3],
            [0.8, 0.5, 0.1, 0.2],
            [0.7, 0.6, 0.5, 0.4],
        ])
        gt = np.array([0, 1, 3])
        result = mrr(D, gt)
        assert np.array_equal(result.ranks, [1, 2, 4])
        assert abs(result.mrr - (1.0 + 0.5 + 0.25) / 3.0) < 1e-15

    def test_against_sort_oracle(self, rng):
        gen = rng.generator()
        D = gen.standard_normal((50, 50))
        gt = gen.integers(0, 50, size=50)
        result = mrr(D, gt)
        oracle_value, oracle_ranks = mrr_sort_oracle(D, gt)
        assert np.array_equal(result.ranks, oracle_ranks)
        assert result.mrr == oracle_value

    def test_lower_is_better(self, rng):
        gen = rng.generator()
        D = gen.standard_normal((20, 20))
        gt = gen.integers(0, 20, size=20)
        result = mrr(D, gt, higher_is_better=False)
        oracle_value, oracle_ranks = mrr_sort_oracle(D, gt, higher_is_better=False)
        assert np.array_equal(result.ranks, oracle_ranks)
        assert result.mrr == oracle_value

    def test_symmetric_equals_explicit_average(self, rng):
        gen = rng.generator()
        D = gen.standard_normal((12, 12))
        gt = gen.integers(0, 12, size=12)
        sym = mrr(D, gt, symmetric=True)
        explicit = mrr(0.5 * (D + D.T), gt, symmetric=False)
        assert sym.mrr == explicit.mrr
        assert np.array_equal(sym.ranks, explicit.ranks)

    def test_symmetric_requires_square(self):
        with pytest.raises(ValueError, match="square"):
            mrr(np.ones((3, 4)), np.zeros(3, dtype=int), symmetric=True)

    def test_monotone_transform_invariance(self, rng):
        gen = rng.generator()
        D = gen.standard_normal((15, 15))
        gt = gen.integers(0, 15, size=15)
        base = mrr(D, gt)
        squashed = mrr(np.tanh(D), gt)  # strictly increasing transform
        assert base.mrr == squashed.mrr
        assert np.array_equal(base.ranks, squashed.ranks)

    def test_pessimistic_ties(self):
        D = np.array([[0.5, 0.5, 0.5]])
        # Truth at column 2: two equal values at smaller indices count ahead.
        assert mrr(D, [2]).ranks[0] == 3
        assert mrr(D, [0]).ranks[0] == 1

    def test_exclude_diagonal_flag(self):
        D = np.array([[1.0, 0.9], [0.8, 1.0]])
        gt = np.array([1, 0])
        with_diag = mrr(D, gt)
        without = mrr(D, gt, exclude_diagonal=True)
        assert with_diag.ranks.tolist() == [2, 2]
        assert without.ranks.tolist() == [1, 1]

    def test_gt_range_checked(self):
        with pytest.raises(ValueError, match="range"):
            mrr(np.ones((2, 2)), [0, 5])


class TestSpearman:
    def test_perfect_agreement(self, rng):
        x = rng.generator().standard_normal(30)
        assert spearman(x, x) == 1.0

    def test_perfect_reversal(self, rng):
        x = rng.generator().standard_normal(30)
        assert spearman(x, -x) == -1.0

    def test_ties_against_naive_rank_oracle(self, rng):
        gen = rng.generator()
        x = np.round(gen.standard_normal(40), 1)  # induce ties
        y = np.round(gen.standard_normal(40), 1)
        rx = rank_oracle(x)
        ry = rank_oracle(y)
        rx_c = rx - rx.mean()
        ry_c = ry - ry.mean()
        expected = (rx_c @ ry_c) / np.sqrt((rx_c @ rx_c) * (ry_c @ ry_c))
        assert abs(spearman(x, y) - expected) < 1e-12

    def test_constant_vector_rejected(self):
        with pytest.raises(ValueError, match="constant"):
            spearman(np.ones(5), np.arange(5.0))

    def test_monotone_transform_invariance(self, rng):
        gen = rng.generator()
        x = gen.standard_normal(25)
        y = gen.standard_normal(25)
        base = spearman(x, y)
        assert abs(spearman(np.exp(x), y) - base) < 1e-12
        assert abs(spearman(x, y ** 3) - base) < 1e-12

    def test_range(self, rng):
        gen = rng.generator()
        for _ in range(10):
            val = spearman(gen.standard_normal(12), gen.standard_normal(12))
            assert -1.0 <= val <= 1.0


class TestReconstructionMse:
    def test_exact_match(self, rng):
        X = rng.generator().standard_normal((6, 4))
        assert reconstruction_mse(X, X) == 0.0

    def test_unit_offset(self, rng):
        X = rng.generator().standard_normal((6, 4))
        assert abs(reconstruction_mse(X + 1.0, X) - 1.0) < 1e-12

    def test_against_naive_loop(self, rng):
        gen = rng.generator()
        A = gen.standard_normal((5, 3))
        B = gen.standard_normal((5, 3))
        total = 0.0
        for i in range(5):
            for j in range(3):
                total += (A[i, j] - B[i, j]) ** 2
        assert abs(reconstruction_mse(A, B) - total / 15.0) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            reconstruction_mse(np.ones((2, 2)), np.ones((2, 3)))
