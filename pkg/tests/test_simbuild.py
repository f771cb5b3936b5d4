import numpy as np
import pytest

from multifuse.errors import DegenerateGroup, DimensionError, InvalidInput, InvalidParameter
from multifuse.matcore import is_psd
from multifuse.simbuild import (
    FeatureTable,
    IncidenceMatrix,
    Multiplex,
    SimilarityLayer,
    auto_sigma,
    cosine_from_projection,
    jaccard_from_projection,
    one_mode_projection,
    presence_similarity,
    rbf_similarity,
)


def table(rows, labels=None):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1)
    labels = labels or [f"e{i}" for i in range(rows.shape[0])]
    return FeatureTable(labels, rows)


class TestTypes:
    def test_feature_table_rejects_nonfinite(self):
        with pytest.raises(InvalidInput):
            table([[0.0], [np.inf]])

    def test_feature_table_label_mismatch(self):
        with pytest.raises(InvalidInput):
            FeatureTable(("a",), np.zeros((2, 1)))

    def test_layer_range_check(self):
        with pytest.raises(InvalidInput):
            SimilarityLayer(("a", "b"), [[1.0, 1.5], [1.5, 1.0]], "external")
        with pytest.raises(InvalidInput):
            SimilarityLayer(("a", "b"), [[1.0, -0.1], [-0.1, 1.0]], "external")

    def test_layer_diagonal_check_for_constructed_kinds(self):
        with pytest.raises(InvalidInput):
            SimilarityLayer(("a", "b"), [[0.5, 0.2], [0.2, 0.5]], "rbf")
        # external matrices need not have a unit diagonal
        SimilarityLayer(("a", "b"), [[0.5, 0.2], [0.2, 0.5]], "external")

    def test_layer_unknown_kind(self):
        with pytest.raises(InvalidParameter):
            SimilarityLayer(("a",), [[1.0]], "pearson")

    def test_multiplex_label_agreement(self):
        a = SimilarityLayer(("a", "b"), np.eye(2), "external")
        b = SimilarityLayer(("a", "c"), np.eye(2), "external")
        with pytest.raises(DimensionError):
            Multiplex((a, b))

    def test_multiplex_default_names(self):
        a = SimilarityLayer(("a", "b"), np.eye(2), "external")
        mx = Multiplex((a, a))
        assert mx.names == ("layer0", "layer1")
        assert mx.m == 2 and mx.n == 2

    def test_incidence_requires_binary(self):
        with pytest.raises(InvalidInput):
            IncidenceMatrix(("i",), ("g",), [[0.5]])


class TestRbf:
    def test_zero_distance(self):
        lay = rbf_similarity(table([[1.0, 2.0], [1.0, 2.0]]), sigma=3.0)
        assert lay.S[0, 1] == 1.0

    def test_unit_distance_unit_sigma(self):
        lay = rbf_similarity(table([0.0, 1.0]), sigma=1.0)
        assert np.isclose(lay.S[0, 1], np.exp(-1.0), atol=1e-12)
        assert np.isclose(lay.S[0, 1], 0.3678794, atol=1e-7)

    def test_large_sigma_limit(self):
        rng = np.random.default_rng(0)
        lay = rbf_similarity(table(rng.uniform(-5, 5, (6, 3))), sigma=1e9)
        assert (lay.S >= 1 - 1e-6).all()

    def test_sigma_validation(self):
        with pytest.raises(InvalidParameter):
            rbf_similarity(table([0.0, 1.0]), sigma=0.0)
        with pytest.raises(InvalidParameter):
            rbf_similarity(table([0.0, 1.0]), sigma=-2.0)

    def test_auto_sigma_is_mean_squared_distance(self):
        # distances^2 between scalars 0, 1, 3: {1, 9, 4}, mean 14/3
        assert np.isclose(auto_sigma(table([0.0, 1.0, 3.0])), 14.0 / 3.0)

    def test_auto_sigma_degenerate_rows(self):
        assert auto_sigma(table([2.0, 2.0])) == 1.0

    def test_translation_invariance(self):
        rng = np.random.default_rng(1)
        rows = rng.uniform(-1, 1, (7, 4))
        shift = rng.uniform(-100, 100, 4)
        a = rbf_similarity(table(rows), sigma=2.0)
        b = rbf_similarity(table(rows + shift), sigma=2.0)
        assert np.allclose(a.S, b.S, atol=1e-9)

    def test_exact_symmetry(self):
        rng = np.random.default_rng(2)
        lay = rbf_similarity(table(rng.standard_normal((9, 5))))
        assert np.array_equal(lay.S, lay.S.T)


class TestPresence:
    def test_equality_and_inequality(self):
        lay = presence_similarity(table([1.0, 0.0, 1.0]))
        assert lay.S[0, 2] == 1.0
        assert lay.S[0, 1] == 0.0
        assert lay.S[1, 2] == 0.0

    def test_constant_vector(self):
        lay = presence_similarity(table([1.0] * 5))
        assert np.array_equal(lay.S, np.ones((5, 5)))

    def test_rejects_non_binary(self):
        with pytest.raises(InvalidInput):
            presence_similarity(table([0.0, 0.5]))


class TestProjection:
    def test_identity(self):
        b = IncidenceMatrix(("i1", "i2", "i3"), ("g1", "g2", "g3"), np.eye(3))
        assert np.array_equal(one_mode_projection(b), np.eye(3))

    def test_hand_product(self):
        b = IncidenceMatrix(
            ("i1", "i2", "i3"), ("g1", "g2"), [[1, 1], [1, 0], [0, 1]]
        )
        assert np.array_equal(one_mode_projection(b), [[2, 1], [1, 2]])

    def test_empty_column(self):
        b = IncidenceMatrix(("i1",), ("g1", "g2"), [[1, 0]])
        g = one_mode_projection(b)
        assert g[1, 1] == 0.0


class TestJaccardCosine:
    def test_jaccard_full_overlap(self):
        lay = jaccard_from_projection([[3.0, 3.0], [3.0, 3.0]])
        assert lay.S[0, 1] == 1.0

    def test_jaccard_value(self):
        lay = jaccard_from_projection([[3.0, 2.0], [2.0, 4.0]])
        assert lay.S[0, 1] == 2.0 / 5.0

    def test_jaccard_disjoint(self):
        lay = jaccard_from_projection([[3.0, 0.0], [0.0, 4.0]])
        assert lay.S[0, 1] == 0.0

    def test_jaccard_empty_group(self):
        with pytest.raises(DegenerateGroup):
            jaccard_from_projection([[0.0, 0.0], [0.0, 4.0]])

    def test_cosine_value(self):
        lay = cosine_from_projection([[4.0, 2.0], [2.0, 1.0]])
        assert lay.S[0, 1] == 1.0

    def test_cosine_orthogonal(self):
        lay = cosine_from_projection([[4.0, 0.0], [0.0, 1.0]])
        assert lay.S[0, 1] == 0.0

    def test_cosine_identical_columns(self):
        lay = cosine_from_projection([[2.0, 2.0], [2.0, 2.0]])
        assert lay.S[0, 1] == 1.0

    def test_cosine_empty_group(self):
        with pytest.raises(DegenerateGroup):
            cosine_from_projection([[4.0, 0.0], [0.0, 0.0]])

    def test_projection_scores_are_psd_and_nonnegative(self):
        # random bipartite memberships; every group nonempty
        rng = np.random.default_rng(3)
        for _ in range(500):
            p, n = rng.integers(3, 12), rng.integers(2, 7)
            e = (rng.random((p, n)) < 0.4).astype(float)
            e[rng.integers(0, p, n), np.arange(n)] = 1.0
            b = IncidenceMatrix(
                tuple(f"i{i}" for i in range(p)), tuple(f"g{j}" for j in range(n)), e
            )
            g = one_mode_projection(b)
            for lay in (jaccard_from_projection(g), cosine_from_projection(g)):
                assert lay.S.min() >= 0.0
                assert is_psd(lay.S, tol=1e-10)
