import numpy as np
import pytest

from relgeo.alignment import (AlignmentMap, alignment_from_dict,
                              alignment_to_dict, crossspace_similarity,
                              extract_correspondence, fit_linear,
                              fit_orthogonal, stitch)
from relgeo.models import MlpDecoder
from relgeo.numerics import RngStream, random_orthogonal
from relgeo.relrep import RelRepMatrix, anchors_from_indices, relrep_cosine
from relgeo.training import init_mlp


def rel(values, fingerprint="shared"):
    return RelRepMatrix(values=np.asarray(values, dtype=np.float64),
                        mode="geo-length", anchor_fingerprint=fingerprint)


class TestCrossspaceSimilarity:
    def test_identical_matrices_unit_diagonal(self, rng):
        values = np.abs(rng.generator().standard_normal((6, 4))) + 0.1
        D = crossspace_similarity(rel(values), rel(values))
        assert np.max(np.abs(np.diag(D) - 1.0)) < 1e-12

    def test_positive_row_scaling_invariance(self, rng):
        gen = rng.generator()
        values = np.abs(gen.standard_normal((5, 3))) + 0.1
        scales = gen.uniform(0.5, 3.0, size=(5, 1))
        D1 = crossspace_similarity(rel(values), rel(values))
        D2 = crossspace_similarity(rel(values * scales), rel(values))
        assert np.max(np.abs(D1 - D2)) < 1e-12

    def test_against_naive_loop(self, rng):
        gen = rng.generator()
        A = np.abs(gen.standard_normal((4, 3))) + 0.05
        B = np.abs(gen.standard_normal((5, 3))) + 0.05
        D = crossspace_similarity(rel(A), rel(B))
        for i in range(4):
            for j in range(5):
                expected = A[i] @ B[j] / (np.linalg.norm(A[i]) * np.linalg.norm(B[j]))
                assert abs(D[i, j] - expected) < 1e-12

    def test_anchor_count_mismatch(self):
        with pytest.raises(ValueError, match="anchor count"):
            crossspace_similarity(rel(np.ones((2, 3))), rel(np.ones((2, 4))))

    def test_fingerprint_mismatch(self):
        with pytest.raises(ValueError, match="non-corresponding"):
            crossspace_similarity(rel(np.ones((2, 3)), "a"), rel(np.ones((2, 3)), "b"))


class TestExtractCorrespondence:
    def test_identity_similarity(self):
        corr = extract_correspondence(np.eye(4))
        assert np.array_equal(corr.indices, np.arange(4))

    def test_planted_permutation(self, rng):
        gen = rng.generator()
        perm = gen.permutation(6)
        D = gen.uniform(0.0, 0.4, size=(6, 6))
        D[np.arange(6), perm] = 1.0
        corr = extract_correspondence(D)
        assert np.array_equal(corr.indices, perm)
        assert np.all(corr.scores == 1.0)

    def test_tie_rule_smallest_index(self):
        corr = extract_correspondence(np.full((3, 5), 0.7))
        assert np.array_equal(corr.indices, np.zeros(3, dtype=np.int64))

    def test_permutation_equivariance(self, rng):
        gen = rng.generator()
        D = gen.standard_normal((5, 5))
        perm = gen.permutation(5)
        base = extract_correspondence(D)
        permuted = extract_correspondence(D[:, perm])
        assert np.array_equal(perm[permuted.indices], base.indices)


class TestFitOrthogonal:
    def test_planted_rotation_recovered(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((30, 4))
        Q = random_orthogonal(4, RngStream(31, 7))
        amap = fit_orthogonal(X, X @ Q, center=False)
        assert np.max(np.abs(amap.matrix - Q)) < 1e-8
        assert np.max(np.abs(amap.translation)) < 1e-12

    def test_x_equals_y_gives_identity(self, rng):
        X = rng.generator().standard_normal((20, 3))
        amap = fit_orthogonal(X, X)
        assert np.max(np.abs(amap.matrix - np.eye(3))) < 1e-8

    def test_noisy_beats_identity_map(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((40, 3))
        Q = random_orthogonal(3, RngStream(32, 7))
        Y = X @ Q + 0.01 * gen.standard_normal((40, 3))
        amap = fit_orthogonal(X, Y, center=False)
        assert amap.fit_residual < np.linalg.norm(X - Y)

    def test_orthogonality_always(self, rng):
        gen = rng.generator()
        for _ in range(10):
            X = gen.standard_normal((15, 3))
            Y = gen.standard_normal((15, 3))
            amap = fit_orthogonal(X, Y)
            assert np.max(np.abs(amap.matrix.T @ amap.matrix - np.eye(3))) < 1e-8

    def test_beats_random_orthogonal_candidates(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((10, 3))
        Y = gen.standard_normal((10, 3))
        amap = fit_orthogonal(X, Y, center=False)
        for trial in range(1000):
            Q = random_orthogonal(3, RngStream(1000 + trial, 8))
            assert amap.fit_residual <= np.linalg.norm(X @ Q - Y) + 1e-9

    def test_rank_zero_rejected(self):
        with pytest.raises(ValueError, match="rank-0"):
            fit_orthogonal(np.zeros((5, 2)), np.zeros((5, 2)), center=False)

    def test_centered_rigid_motion_recovered(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((25, 3))
        Q = random_orthogonal(3, RngStream(33, 7))
        t = gen.standard_normal(3)
        amap = fit_orthogonal(X, X @ Q + t, center=True)
        assert np.max(np.abs(amap.apply_batch(X) - (X @ Q + t))) < 1e-8


class TestFitLinear:
    def test_planted_invertible_map(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((30, 4))
        A = gen.standard_normal((4, 4)) + 2 * np.eye(4)
        amap = fit_linear(X, X @ A)
        assert np.max(np.abs(amap.matrix - A)) < 1e-8
        assert np.max(np.abs(amap.translation)) < 1e-8

    def test_x_equals_y_identity(self, rng):
        X = rng.generator().standard_normal((20, 3))
        amap = fit_linear(X, X)
        assert np.max(np.abs(amap.matrix - np.eye(3))) < 1e-8

    def test_underdetermined_flagged(self, rng):
        gen = rng.generator()
        amap = fit_linear(gen.standard_normal((3, 5)), gen.standard_normal((3, 2)))
        assert amap.underdetermined

    def test_affine_offset_recovered(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((30, 3))
        A = gen.standard_normal((3, 3)) + np.eye(3)
        b = gen.standard_normal(3)
        amap = fit_linear(X, X @ A + b)
        assert np.max(np.abs(amap.matrix - A)) < 1e-8
        assert np.max(np.abs(amap.translation - b)) < 1e-8

    def test_centered_variant(self, rng):
        gen = rng.generator()
        X = gen.standard_normal((30, 3))
        A = gen.standard_normal((3, 3)) + np.eye(3)
        b = gen.standard_normal(3)
        amap = fit_linear(X, X @ A + b, center=True)
        assert np.max(np.abs(amap.apply_batch(X) - (X @ A + b))) < 1e-8


class TestStitch:
    def make_autoencoder(self, seed):
        enc = init_mlp([4, 6, 2], ["tanh", "identity"], RngStream(seed, 1))
        dec = init_mlp([2, 6, 4], ["tanh", "identity"], RngStream(seed, 2))
        return enc, MlpDecoder(dec)

    def identity_map(self, dim):
        return AlignmentMap(kind="orthogonal", matrix=np.eye(dim),
                            translation=np.zeros(dim), fit_residual=0.0)

    def test_identity_map_reproduces_reconstruction(self, rng):
        enc, dec = self.make_autoencoder(1)
        X = rng.generator().standard_normal((7, 4))
        native = dec.forward_batch(enc.forward_batch(X))
        stitched = stitch(enc, self.identity_map(2), dec, X)
        assert np.max(np.abs(native - stitched)) < 1e-12

    def test_exact_isometry_pair(self, rng):
        gen = rng.generator()
        enc, dec = self.make_autoencoder(2)
        Q = random_orthogonal(2, RngStream(34, 7))
        t = gen.standard_normal(2)
        X = gen.standard_normal((50, 4))
        Z1 = enc.forward_batch(X)
        Z2 = Z1 @ Q + t  # model 2 latents are a rigid motion of model 1 latents
        amap = fit_orthogonal(Z1, Z2, center=True)

        class Dec2:
            input_dim = 2

            def forward_batch(self, Z):
                return dec.forward_batch((Z - t) @ Q.T)

        stitched = stitch(enc, amap, Dec2(), X)
        native = dec.forward_batch(Z1)
        assert np.max(np.abs(stitched - native)) < 1e-6

    def test_empty_input(self):
        enc, dec = self.make_autoencoder(3)
        out = stitch(enc, self.identity_map(2), dec, np.zeros((0, 4)))
        assert out.shape == (0, 4)


class TestAlignmentMapValidation:
    def test_orthogonal_invariant_enforced(self):
        with pytest.raises(ValueError, match="orthogonal"):
            AlignmentMap(kind="orthogonal", matrix=np.array([[1.0, 0.0], [0.3, 1.0]]),
                         translation=np.zeros(2), fit_residual=0.0)

    def test_serialization_round_trip(self, rng):
        gen = rng.generator()
        amap = fit_linear(gen.standard_normal((10, 3)), gen.standard_normal((10, 2)))
        again = alignment_from_dict(alignment_to_dict(amap))
        assert np.array_equal(amap.matrix, again.matrix)
        assert np.array_equal(amap.translation, again.translation)
        assert amap.kind == again.kind


class TestPipelineProperty:
    def test_correspondence_from_cosine_relreps(self, rng):
        # Rotated copies of one latent cloud must align perfectly through
        # the relative-representation correspondence route.
        gen = rng.generator()
        Z1 = gen.standard_normal((60, 3))
        Q = random_orthogonal(3, RngStream(35, 7))
        Z2 = Z1 @ Q
        idx = np.arange(0, 60, 6)
        rel1 = relrep_cosine(Z1, anchors_from_indices(Z1, idx))
        rel2 = relrep_cosine(Z2, anchors_from_indices(Z2, idx))
        corr = extract_correspondence(crossspace_similarity(rel1, rel2))
        assert np.array_equal(corr.indices, np.arange(60))
        amap = fit_linear(Z1, Z2[corr.indices])
        assert np.max(np.abs(amap.matrix - Q)) < 1e-7
