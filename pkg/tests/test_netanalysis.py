import numpy as np
import pytest

from multifuse.errors import DimensionError, InvalidInput, InvalidParameter
from multifuse.netanalysis import (
    CorrelationTable,
    Partition,
    correlation_table,
    distance_correlation,
    louvain_communities,
    modularity,
)
from multifuse.simbuild import SimilarityLayer

from oracles import best_two_block, dcor_reference, modularity_reference


def rand_similarity(rng, n):
    s = rng.uniform(0.0, 1.0, (n, n))
    s = (s + s.T) / 2
    np.fill_diagonal(s, 1.0)
    return s


def two_cliques(n_each=4):
    n = 2 * n_each
    w = np.zeros((n, n))
    w[:n_each, :n_each] = 1.0
    w[n_each:, n_each:] = 1.0
    np.fill_diagonal(w, 0.0)
    return w


def planted_blocks(n=10, within=0.9, between=0.1):
    half = n // 2
    s = np.full((n, n), between)
    s[:half, :half] = within
    s[half:, half:] = within
    np.fill_diagonal(s, 1.0)
    return s


class TestDistanceCorrelation:
    def test_self_correlation_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rand_similarity(rng, 6)
            assert abs(distance_correlation(a, a) - 1.0) <= 1e-12

    def test_distance_scale_invariance(self):
        rng = np.random.default_rng(1)
        a = rand_similarity(rng, 6)
        b = rand_similarity(rng, 6)
        base = distance_correlation(a, b)
        for factor in (0.25, 3.0):
            assert abs(distance_correlation(a, factor * b) - base) <= 1e-12

    def test_four_node_fixture_matches_oracle(self):
        a = np.array(
            [
                [1.0, 0.8, 0.2, 0.4],
                [0.8, 1.0, 0.3, 0.1],
                [0.2, 0.3, 1.0, 0.6],
                [0.4, 0.1, 0.6, 1.0],
            ]
        )
        b = np.array(
            [
                [1.0, 0.1, 0.7, 0.3],
                [0.1, 1.0, 0.4, 0.9],
                [0.7, 0.4, 1.0, 0.2],
                [0.3, 0.9, 0.2, 1.0],
            ]
        )
        assert abs(distance_correlation(a, b) - dcor_reference(a, b)) <= 1e-12

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(3, 10))
            a, b = rand_similarity(rng, n), rand_similarity(rng, n)
            v = distance_correlation(a, b)
            assert v == distance_correlation(b, a)
            assert 0.0 <= v <= 1.0

    def test_constant_network_gives_zero(self):
        a = np.ones((4, 4))
        b = rand_similarity(np.random.default_rng(3), 4)
        assert distance_correlation(a, b) == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(4)
        a, b = rand_similarity(rng, 7), rand_similarity(rng, 7)
        perm = rng.permutation(7)
        before = distance_correlation(a, b)
        after = distance_correlation(a[np.ix_(perm, perm)], b[np.ix_(perm, perm)])
        assert abs(before - after) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            distance_correlation(np.eye(3), np.eye(4))

    def test_label_mismatch(self):
        a = SimilarityLayer(("a", "b"), np.eye(2), "external")
        b = SimilarityLayer(("a", "c"), np.eye(2), "external")
        with pytest.raises(InvalidInput):
            distance_correlation(a, b)

    def test_table_contract(self):
        rng = np.random.default_rng(5)
        nets = [rand_similarity(rng, 5) for _ in range(4)]
        table = correlation_table(("w", "x", "y", "z"), nets)
        assert table.names == ("w", "x", "y", "z")
        assert np.array_equal(table.values, table.values.T)
        assert np.abs(np.diag(table.values) - 1.0).max() <= 1e-12

    def test_profile_hook(self):
        rng = np.random.default_rng(10)
        a, b = rand_similarity(rng, 6), rand_similarity(rng, 6)
        # a profile that rescales every sample point leaves dCor unchanged
        scaled = distance_correlation(a, b, profile=lambda m: 2.0 * m)
        assert abs(scaled - distance_correlation(a, b)) <= 1e-12
        # a degenerate profile collapses the variance
        assert distance_correlation(a, b, profile=lambda m: np.ones_like(m)) == 0.0


class TestLouvain:
    def test_two_cliques_recovered(self):
        w = two_cliques(4)
        part = louvain_communities(w)
        assert part.n_communities == 2
        assert len(set(part.community[:4])) == 1
        assert len(set(part.community[4:])) == 1
        assert part.community[0] != part.community[4]
        assert np.isclose(part.modularity, 0.5, atol=1e-15)

    def test_complete_graph_single_community(self):
        w = np.ones((6, 6))
        np.fill_diagonal(w, 0.0)
        part = louvain_communities(w)
        assert part.n_communities == 1

    def test_planted_blocks_match_exhaustive_optimum(self):
        s = planted_blocks()
        part = louvain_communities(s)
        best_q, best_comm = best_two_block(np.where(np.eye(10, dtype=bool), 0.0, s))
        assert part.n_communities == 2
        got = {frozenset(np.flatnonzero(part.community == c)) for c in range(2)}
        want = {frozenset(np.flatnonzero(best_comm == c)) for c in range(2)}
        assert got == want
        assert abs(part.modularity - best_q) <= 1e-12

    def test_seed_determinism(self):
        rng = np.random.default_rng(6)
        s = rand_similarity(rng, 12)
        a = louvain_communities(s, seed=3)
        b = louvain_communities(s, seed=3)
        assert np.array_equal(a.community, b.community)
        assert a.modularity == b.modularity

    def test_reported_modularity_matches_scorer_exactly(self):
        rng = np.random.default_rng(7)
        for seed in range(5):
            s = rand_similarity(rng, 9)
            part = louvain_communities(s, seed=seed)
            assert part.modularity == modularity(s, part)

    def test_empty_graph_rejected(self):
        with pytest.raises(InvalidInput):
            louvain_communities(np.eye(4))

    def test_negative_weights_rejected(self):
        s = np.array([[0.0, -0.1], [-0.1, 0.0]])
        with pytest.raises(InvalidInput):
            louvain_communities(s)

    def test_resolution_validated(self):
        with pytest.raises(InvalidParameter):
            louvain_communities(two_cliques(), resolution=0.0)

    def test_partition_indices_contiguous(self):
        rng = np.random.default_rng(8)
        for seed in range(5):
            s = rand_similarity(rng, 10)
            part = louvain_communities(s, seed=seed)
            uniq = np.unique(part.community)
            assert np.array_equal(uniq, np.arange(uniq.size))


class TestModularity:
    def test_singleton_partition_on_edgeless_graph(self):
        assert modularity(np.eye(5), np.arange(5)) == 0.0

    def test_two_clique_hand_value(self):
        w = two_cliques(4)
        comm = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        assert np.isclose(modularity(w, comm), 0.5, atol=1e-15)

    def test_merged_cliques_score_lower(self):
        w = two_cliques(4)
        split = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        merged = np.zeros(8, dtype=int)
        assert modularity(w, merged) < modularity(w, split)

    def test_matches_reference(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(4, 9))
            s = rand_similarity(rng, n)
            comm = rng.integers(0, 3, n)
            assert abs(modularity(s, comm) - modularity_reference(s, comm)) <= 1e-12

    def test_resolution_scaling(self):
        w = two_cliques(4)
        comm = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        q1 = modularity(w, comm, resolution=1.0)
        q2 = modularity(w, comm, resolution=2.0)
        assert q2 < q1

    def test_label_mismatch_rejected(self):
        lay = SimilarityLayer(("a", "b"), np.eye(2), "external")
        part = Partition(("a", "x"), np.array([0, 1]), 0.0)
        with pytest.raises(InvalidInput):
            modularity(lay, part)

    def test_coverage_check(self):
        with pytest.raises(InvalidInput):
            modularity(two_cliques(), np.zeros(3, dtype=int))


class TestTypes:
    def test_partition_contiguity_enforced(self):
        with pytest.raises(InvalidInput):
            Partition(("a", "b"), np.array([0, 2]), 0.0)

    def test_correlation_table_validation(self):
        with pytest.raises(InvalidInput):
            CorrelationTable(("a", "b"), np.array([[1.0, 0.5], [0.4, 1.0]]))
        with pytest.raises(InvalidInput):
            CorrelationTable(("a", "b"), np.array([[0.9, 0.5], [0.5, 1.0]]))
