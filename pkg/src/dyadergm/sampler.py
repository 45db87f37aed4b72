"""Exact sampling of networks and their reduction to dyad censuses.

Sampling is census-first: the dyad-state counts are one multinomial draw over
``C(N, 2)`` trials, and only then are the non-null dyads placed on a uniform
random subset of vertex pairs.  Nothing proportional to ``C(N, 2)`` is ever
allocated unless the sampled network is itself that dense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import ModelVariant, NaturalParams, _check_n, dyad_distribution, n_dyads
from .rng import Seed, as_seed


@dataclass(frozen=True)
class DyadCensus:
    """Counts of null, asymmetric and mutual dyads in a directed network."""

    n_vertices: int
    n_null: int
    n_asym: int
    n_mutual: int

    def __post_init__(self):
        for name in ("n_vertices", "n_null", "n_asym", "n_mutual"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_null + self.n_asym + self.n_mutual != n_dyads(self.n_vertices):
            raise DomainError(
                f"census ({self.n_null}, {self.n_asym}, {self.n_mutual}) does not sum to "
                f"C({self.n_vertices}, 2) = {n_dyads(self.n_vertices)}"
            )

    @classmethod
    def from_stats(cls, n_vertices: int, s: int, m: int) -> "DyadCensus":
        """Build the census with edge count ``s`` and mutual count ``m``."""
        n_asym = s - 2 * m
        return cls(n_vertices, n_dyads(n_vertices) - n_asym - m, n_asym, m)

    @property
    def n_dyads(self) -> int:
        return n_dyads(self.n_vertices)

    @property
    def s(self) -> int:
        """Number of directed edges."""
        return self.n_asym + 2 * self.n_mutual

    @property
    def m(self) -> int:
        """Number of mutual dyads."""
        return self.n_mutual


@dataclass(frozen=True, eq=False)
class Network:
    """Directed simple graph on vertices ``0 .. n_vertices - 1``.

    ``edges`` is a read-only ``(k, 2)`` int64 array, sorted lexicographically.
    """

    n_vertices: int
    edges: np.ndarray

    def __post_init__(self):
        n = int(self.n_vertices)
        if n < 0:
            raise DomainError(f"n_vertices must be non-negative, got {n}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise DomainError(f"edge endpoint outside [0, {n})")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise DomainError("self-loops are not allowed")
            keys = edges[:, 0] * n + edges[:, 1]
            order = np.argsort(keys, kind="stable")
            keys = keys[order]
            if np.any(keys[1:] == keys[:-1]):
                raise DomainError("duplicate edges are not allowed")
            edges = edges[order]
        edges = np.ascontiguousarray(edges)
        edges.flags.writeable = False
        object.__setattr__(self, "n_vertices", n)
        object.__setattr__(self, "edges", edges)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.n_vertices == other.n_vertices and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n_vertices, self.edges.tobytes()))

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n_vertices)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.n_vertices)

    def relabel(self, permutation) -> "Network":
        """Network with vertex ``v`` renamed to ``permutation[v]``."""
        perm = np.asarray(permutation, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.n_vertices)):
            raise DomainError("not a permutation of the vertex set")
        return Network(self.n_vertices, perm[self.edges])


def census(network: Network) -> DyadCensus:
    """Dyad census of ``network`` from one pass over its edges."""
    n = network.n_vertices
    e = network.edges
    keys = e[:, 0] * n + e[:, 1]
    reverse = e[:, 1] * n + e[:, 0]
    # edge keys are sorted by construction
    reciprocated = int(np.count_nonzero(np.isin(reverse, keys, assume_unique=True)))
    n_mutual = reciprocated // 2
    n_asym = len(e) - reciprocated
    return DyadCensus(n, n_dyads(n) - n_asym - n_mutual, n_asym, n_mutual)


def unrank_pairs(ranks) -> np.ndarray:
    """Map pair indices in ``[0, C(N, 2))`` to pairs ``(i, j)`` with ``i < j``.

    Pairs are in colexicographic order: ``rank = j*(j-1)/2 + i``.  The result
    does not depend on ``N``.
    """
    r = np.asarray(ranks, dtype=np.int64)
    j = ((1.0 + np.sqrt(1.0 + 8.0 * r.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one for large ranks
    j = np.where(j * (j - 1) // 2 > r, j - 1, j)
    j = np.where((j + 1) * j // 2 <= r, j + 1, j)
    i = r - j * (j - 1) // 2
    return np.stack([i, j], axis=-1)


def rank_pairs(i, j) -> np.ndarray:
    """Inverse of :func:`unrank_pairs` for ``i < j``."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return j * (j - 1) // 2 + i


def _draw_census(n_vertices, p_mutual, p_asym_given_not_mutual, rng):
    """Multinomial census as two sequential binomials (smallest states first)."""
    c = n_dyads(n_vertices)
    n_mutual = int(rng.binomial(c, p_mutual))
    n_asym = int(rng.binomial(c - n_mutual, p_asym_given_not_mutual))
    return c - n_mutual - n_asym, n_asym, n_mutual


def _census_probabilities(params, variant, n_vertices):
    d = dyad_distribution(params, variant, n_vertices)
    # P(asym | not mutual) without forming 1 - p_mutual
    return d.p_mutual, d.p_asym / (d.p_null + d.p_asym)


def sample_census(params: NaturalParams, variant: ModelVariant, n_vertices: int, seed) -> DyadCensus:
    """Draw the dyad census of one network.

    ``seed`` is a :class:`~dyadergm.rng.Seed`, an integer, or a
    :class:`numpy.random.Generator` to draw from directly.
    """
    n_vertices = _check_n(n_vertices)
    rng = _resolve_rng(seed)
    p_mutual, p_asym = _census_probabilities(params, variant, n_vertices)
    n_null, n_asym, n_mutual = _draw_census(n_vertices, p_mutual, p_asym, rng)
    return DyadCensus(n_vertices, n_null, n_asym, n_mutual)


def place_census(dyads: DyadCensus, rng: np.random.Generator) -> Network:
    """Realise a census as a network with uniformly random placement."""
    k = dyads.n_asym + dyads.n_mutual
    ranks = rng.choice(dyads.n_dyads, size=k, replace=False, shuffle=True)
    pairs = unrank_pairs(ranks)
    mutual = pairs[: dyads.n_mutual]
    asym = pairs[dyads.n_mutual :]
    flip = rng.integers(0, 2, size=len(asym)).astype(bool)
    asym = np.where(flip[:, None], asym[:, ::-1], asym)
    edges = np.concatenate([mutual, mutual[:, ::-1], asym]) if k else np.empty((0, 2), np.int64)
    return Network(dyads.n_vertices, edges)


def sample_network(params: NaturalParams, variant: ModelVariant, n_vertices: int, seed) -> Network:
    """Draw one network; cost is ``O(N + edges)``."""
    rng = _resolve_rng(seed)
    return place_census(sample_census(params, variant, n_vertices, rng), rng)


def _resolve_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return as_seed(seed).generator()


def poisson_tv_distance(counts, mean: float) -> float:
    """Total variation distance between an empirical histogram and Poisson(mean)."""
    counts = np.asarray(counts, dtype=np.float64)
    empirical = counts / counts.sum()
    k = np.arange(len(empirical))
    log_pmf = k * math.log(mean) - mean - np.array([math.lgamma(x + 1) for x in k])
    pmf = np.exp(log_pmf)
    # Poisson mass beyond the observed support counts fully toward the distance
    return 0.5 * (np.abs(empirical - pmf).sum() + max(0.0, 1.0 - pmf.sum()))


__all__ = [
    "DyadCensus",
    "Network",
    "Seed",
    "census",
    "place_census",
    "poisson_tv_distance",
    "rank_pairs",
    "sample_census",
    "sample_network",
    "unrank_pairs",
]
