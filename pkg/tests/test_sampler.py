import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from dyadergm.errors import DomainError
from dyadergm.model import (
    BASELINE,
    SPARSE_DENSITY,
    SPARSE_DENSITY_RECIP,
    SPARSE_RECIPROCITY,
    NaturalParams,
    dyad_distribution,
    expected_stats,
    n_dyads,
)
from dyadergm.rng import Seed
from dyadergm.sampler import (
    DyadCensus,
    Network,
    census,
    poisson_tv_distance,
    rank_pairs,
    sample_census,
    sample_network,
    unrank_pairs,
)


class TestCensus:
    def test_hand_count(self):
        c = census(Network(3, [(0, 1), (1, 0), (0, 2)]))
        assert (c.n_null, c.n_asym, c.n_mutual) == (1, 1, 1)
        assert (c.s, c.m) == (3, 1)

    def test_empty(self):
        c = census(Network(5, []))
        assert (c.n_null, c.n_asym, c.n_mutual) == (10, 0, 0)
        assert (c.s, c.m) == (0, 0)

    def test_complete(self):
        edges = [(i, j) for i in range(4) for j in range(4) if i != j]
        c = census(Network(4, edges))
        assert c.n_mutual == 6
        assert (c.s, c.m) == (12, 6)

    def test_from_stats_roundtrip(self):
        c = DyadCensus.from_stats(10, 20, 5)
        assert (c.n_null, c.n_asym, c.n_mutual) == (30, 10, 5)

    def test_census_must_sum(self):
        with pytest.raises(DomainError):
            DyadCensus(4, 1, 1, 1)

    @pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (0, 1)], [(0, 5)]])
    def test_network_validation(self, edges):
        with pytest.raises(DomainError):
            Network(3, edges)

    def test_network_is_read_only(self):
        net = Network(3, [(0, 1)])
        with pytest.raises(ValueError):
            net.edges[0, 0] = 2


class TestPairRanking:
    def test_small_order(self):
        np.testing.assert_array_equal(
            unrank_pairs(np.arange(6)), [[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]]
        )

    def test_bijection_exhaustive(self):
        n = 60
        pairs = unrank_pairs(np.arange(n_dyads(n)))
        assert np.all(pairs[:, 0] < pairs[:, 1])
        assert pairs[:, 1].max() == n - 1
        assert len({tuple(p) for p in pairs.tolist()}) == n_dyads(n)
        np.testing.assert_array_equal(rank_pairs(pairs[:, 0], pairs[:, 1]), np.arange(n_dyads(n)))

    @given(st.integers(0, n_dyads(3_000_000_000) - 1))
    def test_large_ranks_roundtrip(self, r):
        i, j = unrank_pairs([r])[0]
        assert 0 <= i < j
        assert rank_pairs(i, j) == r


class TestSampleCensus:
    def test_uniform_mean_mutual(self):
        seed = Seed(2024)
        draws = np.array(
            [sample_census(NaturalParams(0, 0), BASELINE, 100, seed.generator(k)).n_mutual for k in range(10_000)]
        )
        c = n_dyads(100)
        se = math.sqrt(c * 0.25 * 0.75 / 10_000)
        assert abs(draws.mean() - 1237.5) < 3 * se

    def test_zero_probability_state(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            assert sample_census(NaturalParams(0.5, -50), BASELINE, 300, rng).n_mutual == 0

    @pytest.mark.parametrize("variant", [BASELINE, SPARSE_DENSITY_RECIP, SPARSE_RECIPROCITY])
    def test_goodness_of_fit(self, variant):
        # 450 dyads per draw at N=31; 250 draws gives > 1e5 dyads
        params = NaturalParams(0.3, 0.8)
        n = 31
        rng = Seed(17).generator(len(variant.tag.value))
        totals = np.zeros(3)
        for _ in range(250):
            c = sample_census(params, variant, n, rng)
            totals += (c.n_null, c.n_asym, c.n_mutual)
        d = dyad_distribution(params, variant, n)
        probs = np.array([d.p_null, d.p_asym, d.p_mutual])
        total = totals.sum()
        assert total >= 1e5
        expected = total * probs
        _, pvalue = stats.chisquare(totals, expected)
        assert pvalue > 0.001
        se = np.sqrt(total * probs * (1 - probs))
        assert np.all(np.abs(totals - expected) < 4 * se)

    def test_rejects_single_vertex(self):
        with pytest.raises(DomainError):
            sample_census(NaturalParams(0.0), BASELINE, 1, 0)

    def test_deterministic(self):
        a = sample_census(NaturalParams(-1, 2), SPARSE_RECIPROCITY, 500, Seed(9))
        b = sample_census(NaturalParams(-1, 2), SPARSE_RECIPROCITY, 500, 9)
        assert a == b


class TestSampleNetwork:
    def test_census_of_network_matches_sampled_census(self):
        params = NaturalParams(0.4, 1.0)
        for k in range(20):
            rng_a = Seed(3).generator(k)
            rng_b = Seed(3).generator(k)
            net = sample_network(params, SPARSE_RECIPROCITY, 400, rng_a)
            assert census(net) == sample_census(params, SPARSE_RECIPROCITY, 400, rng_b)

    def test_deterministic(self):
        p = NaturalParams(0.0, 1.0)
        assert sample_network(p, SPARSE_RECIPROCITY, 300, 11) == sample_network(p, SPARSE_RECIPROCITY, 300, 11)
        assert sample_network(p, SPARSE_RECIPROCITY, 300, 11) != sample_network(p, SPARSE_RECIPROCITY, 300, 12)

    def test_exchangeability(self):
        net = sample_network(NaturalParams(0.0, 1.0), SPARSE_RECIPROCITY, 200, 4)
        perm = np.random.default_rng(0).permutation(200)
        assert census(net.relabel(perm)) == census(net)

    def test_two_vertices(self):
        net = sample_network(NaturalParams(0.0), BASELINE, 2, 1)
        assert net.n_vertices == 2 and net.n_edges <= 2

    def test_dense_baseline_runs(self):
        net = sample_network(NaturalParams(3.0, 1.0), BASELINE, 300, 1)
        assert census(net).n_null < n_dyads(300) * 0.01

    def test_mean_out_degree(self):
        n, draws = 1000, 200
        exact = expected_stats(NaturalParams(0.0), SPARSE_DENSITY, n)[0] / n
        degrees = np.array(
            [sample_network(NaturalParams(0.0), SPARSE_DENSITY, n, Seed(21).generator(k)).n_edges / n
             for k in range(draws)]
        )
        # per-draw mean degree is s/N with s ~ Binomial(N(N-1), p)
        p = exact / (n - 1)
        se = math.sqrt(n * (n - 1) * p * (1 - p)) / n / math.sqrt(draws)
        assert abs(degrees.mean() - exact) < 3 * se

    def test_direction_is_uniform(self):
        net = sample_network(NaturalParams(0.0, -50), SPARSE_RECIPROCITY, 3000, 8)
        up = np.count_nonzero(net.edges[:, 0] < net.edges[:, 1])
        k = net.n_edges
        assert abs(up - k / 2) < 4 * math.sqrt(k / 4)


class TestDegreeLimits:
    def _pooled_out_degrees(self, params, variant, n, draws, key):
        seed = Seed(key)
        hist = np.zeros(64)
        for k in range(draws):
            deg = sample_network(params, variant, n, seed.generator(k)).out_degrees()
            hist += np.bincount(deg, minlength=64)[:64]
        return hist

    @pytest.mark.parametrize("alpha", [0.0, 0.7])
    def test_sparse_density_poisson(self, alpha):
        hist = self._pooled_out_degrees(NaturalParams(alpha), SPARSE_DENSITY, 2000, 30, 101)
        assert poisson_tv_distance(hist, math.exp(alpha)) < 0.02

    def test_sparse_recip_means(self):
        alpha, beta = math.log(0.5), math.log(2)
        p = NaturalParams(alpha, beta)
        for n, tol in [(500, 0.05), (5000, 0.02)]:
            deg, mut = [], []
            for k in range(40):
                c = sample_census(p, SPARSE_RECIPROCITY, n, Seed(6).generator(n, k))
                deg.append(c.s / n)
                mut.append(2 * c.m / n)
            assert np.mean(deg) == pytest.approx(math.exp(alpha) + math.exp(2 * alpha + beta), abs=tol)
            assert np.mean(mut) == pytest.approx(math.exp(2 * alpha + beta), abs=tol)

    def test_tv_distance_sanity(self):
        rng = np.random.default_rng(0)
        x = rng.poisson(1.0, size=200_000)
        assert poisson_tv_distance(np.bincount(x), 1.0) < 0.01
        assert poisson_tv_distance(np.bincount(x), 3.0) > 0.3
