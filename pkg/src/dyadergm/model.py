"""Exact distributional quantities of the dyad-independent models.

A directed network on ``N`` vertices is a product of ``C(N, 2)`` independent
dyads.  Each dyad is null, single (one of two directions) or mutual, with
unnormalised weights ``(1, A, A, B)`` where ``A = exp(alpha)`` and
``B = exp(2 alpha + beta)``.  The sufficient statistics are the edge count
``s`` and the mutual-dyad count ``m``.

The sparse variants are offsets of the same family:

================  ===========================  =============================
variant           effective ``log A``          effective ``log B``
================  ===========================  =============================
baseline          ``alpha``                    ``2 alpha + beta``
sparse-density    ``alpha - log N``            ``2 alpha + beta - 2 log N``
sparse-recip      ``alpha - log N``            ``2 alpha + beta - log N``
================  ===========================  =============================

Everything is evaluated from the log weights with log-sum-exp, so parameters
up to the API bound ``|theta| <= 50`` never overflow even for ``N ~ 10**6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, UnsupportedVariantError

#: Natural parameters are restricted to ``[-PARAM_BOUND, PARAM_BOUND]``.
PARAM_BOUND = 50.0

LOG2 = math.log(2.0)


class Variant(str, Enum):
    BASELINE = "baseline"
    SPARSE_DENSITY = "sparse-density"
    SPARSE_RECIPROCITY = "sparse-recip"


@dataclass(frozen=True)
class NaturalParams:
    """Natural parameters ``(alpha, beta)``; ``beta`` is 0 without reciprocity."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            if abs(value) > PARAM_BOUND:
                raise DomainError(f"{name}={value} outside [-{PARAM_BOUND:g}, {PARAM_BOUND:g}]")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


@dataclass(frozen=True)
class ModelVariant:
    """Offset regime plus whether the reciprocity term is in the model.

    ``ModelVariant(Variant.SPARSE_DENSITY, reciprocity=True)`` is the model in
    which reciprocity vanishes asymptotically.  It can be evaluated and
    sampled, but fitting and interval routines reject it.
    """

    tag: Variant
    reciprocity: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tag", Variant(self.tag))
        if self.tag is Variant.SPARSE_RECIPROCITY and not self.reciprocity:
            raise DomainError("the sparse-recip variant requires the reciprocity term")

    @classmethod
    def parse(cls, name: str, reciprocity: bool = True) -> "ModelVariant":
        try:
            tag = Variant(name)
        except ValueError:
            choices = ", ".join(v.value for v in Variant)
            raise DomainError(f"unknown variant {name!r} (choose from {choices})") from None
        return cls(tag, reciprocity)

    @property
    def is_sparse(self) -> bool:
        return self.tag is not Variant.BASELINE

    @property
    def fittable(self) -> bool:
        return not (self.tag is Variant.SPARSE_DENSITY and self.reciprocity)

    @property
    def n_params(self) -> int:
        return 2 if self.reciprocity else 1

    def offsets(self, n_vertices: int) -> tuple[float, float]:
        """Shifts added to ``(alpha, beta)`` to get baseline-scale exponents."""
        log_n = math.log(n_vertices)
        if self.tag is Variant.BASELINE:
            return 0.0, 0.0
        if self.tag is Variant.SPARSE_DENSITY:
            return -log_n, 0.0
        return -log_n, log_n

    def __str__(self):
        return self.tag.value if self.reciprocity else f"{self.tag.value}/no-recip"


BASELINE = ModelVariant(Variant.BASELINE)
BERNOULLI = ModelVariant(Variant.BASELINE, reciprocity=False)
SPARSE_DENSITY = ModelVariant(Variant.SPARSE_DENSITY, reciprocity=False)
SPARSE_DENSITY_RECIP = ModelVariant(Variant.SPARSE_DENSITY, reciprocity=True)
SPARSE_RECIPROCITY = ModelVariant(Variant.SPARSE_RECIPROCITY)


@dataclass(frozen=True)
class DyadDistribution:
    """Probabilities of the null, each single and the mutual dyad state."""

    p_null: float
    p_single: float
    p_mutual: float

    def __post_init__(self):
        probs = (self.p_null, self.p_single, self.p_mutual)
        if not all(0.0 <= p <= 1.0 for p in probs):
            raise DomainError(f"dyad probabilities out of [0, 1]: {probs}")
        total = self.p_null + 2 * self.p_single + self.p_mutual
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"dyad probabilities sum to {total!r}")

    @property
    def p_asym(self) -> float:
        """Probability of a single edge in either direction."""
        return 2 * self.p_single


@dataclass(frozen=True)
class MeanValueTargets:
    """Per-vertex mean-value parameters ``E[s/N]`` and ``E[m/N]``."""

    edges_per_vertex: float
    mutuals_per_vertex: float = 0.0

    def __post_init__(self):
        s, m = float(self.edges_per_vertex), float(self.mutuals_per_vertex)
        if not (math.isfinite(s) and math.isfinite(m)) or s < 0 or m < 0:
            raise DomainError(f"targets must be finite and non-negative, got ({s}, {m})")
        if m > s / 2:
            raise DomainError(f"mutuals_per_vertex={m} exceeds edges_per_vertex/2={s / 2}")
        object.__setattr__(self, "edges_per_vertex", s)
        object.__setattr__(self, "mutuals_per_vertex", m)


def n_dyads(n_vertices: int) -> int:
    return n_vertices * (n_vertices - 1) // 2


def _check_n(n_vertices) -> int:
    if isinstance(n_vertices, bool) or int(n_vertices) != n_vertices:
        raise DomainError(f"n_vertices must be an integer, got {n_vertices!r}")
    n_vertices = int(n_vertices)
    if n_vertices < 2:
        raise DomainError(f"n_vertices={n_vertices}: no dyads exist (need at least 2 vertices)")
    return n_vertices


def effective_log_weights(params: NaturalParams, variant: ModelVariant, n_vertices: int):
    """``(log A', log B')`` after the variant's offsets for ``n_vertices``."""
    if not variant.reciprocity and params.beta != 0.0:
        raise DomainError(f"beta={params.beta} given to a model without reciprocity")
    d_alpha, d_beta = variant.offsets(n_vertices)
    log_a = params.alpha + d_alpha
    log_b = 2 * log_a + params.beta + d_beta
    return log_a, log_b


def _log_kappa(log_a: float, log_b: float) -> float:
    return float(np.logaddexp(np.logaddexp(0.0, LOG2 + log_a), log_b))


def dyad_distribution(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> DyadDistribution:
    """Distribution of a single dyad under ``variant`` at network size ``n_vertices``.

    >>> d = dyad_distribution(NaturalParams(math.log(2)), BASELINE, 10)
    >>> round(d.p_null * 9, 12), round(d.p_single * 9, 12), round(d.p_mutual * 9, 12)
    (1.0, 2.0, 4.0)
    """
    n_vertices = _check_n(n_vertices)
    log_a, log_b = effective_log_weights(params, variant, n_vertices)
    log_k = _log_kappa(log_a, log_b)
    return DyadDistribution(
        p_null=math.exp(-log_k),
        p_single=math.exp(log_a - log_k),
        p_mutual=math.exp(log_b - log_k),
    )


def log_normalizer(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> float:
    """``psi = C(N, 2) * log(1 + 2A' + B')``."""
    n_vertices = _check_n(n_vertices)
    log_a, log_b = effective_log_weights(params, variant, n_vertices)
    return n_dyads(n_vertices) * _log_kappa(log_a, log_b)


def expected_stats(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> tuple[float, float]:
    """``(E[s], E[m])`` for the whole network."""
    d = dyad_distribution(params, variant, n_vertices)
    c = n_dyads(n_vertices)
    return c * 2 * (d.p_single + d.p_mutual), c * d.p_mutual


def dyad_stat_covariance(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> np.ndarray:
    """Covariance of one dyad's ``(s, m)`` contribution.

    Written as sums of non-negative products of state probabilities, so there
    is no cancellation when one state dominates.
    """
    d = dyad_distribution(params, variant, n_vertices)
    p0, p1, pm = d.p_null, d.p_single, d.p_mutual
    v_ss = 2 * p1 * p0 + 4 * pm * p0 + 2 * p1 * pm
    v_sm = 2 * pm * p0 + 2 * p1 * pm
    v_mm = pm * p0 + 2 * p1 * pm
    return np.array([[v_ss, v_sm], [v_sm, v_mm]])


def stat_covariance(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> np.ndarray:
    """Covariance of the per-dyad averages ``(s / C(N,2), m / C(N,2))``.

    Multiply by ``C(N, 2)**2`` to get ``Cov(s, m)``.
    """
    return dyad_stat_covariance(params, variant, n_vertices) / n_dyads(_check_n(n_vertices))


def fisher_information(params: NaturalParams, variant: ModelVariant, n_vertices: int) -> np.ndarray:
    """Exact Fisher information of the natural parameters.

    Returns a 2x2 matrix, or the 1x1 ``alpha`` block for a model without
    reciprocity (``beta`` pinned at 0, so ``B' = A'**2`` and the entry reduces
    to ``C(N,2) * 2A'/(1+A')**2``).
    """
    info = n_dyads(_check_n(n_vertices)) * dyad_stat_covariance(params, variant, n_vertices)
    return info if variant.reciprocity else info[:1, :1].copy()


def limit_information(params: NaturalParams) -> np.ndarray:
    """``lim I(theta) / N`` under the sparse-recip variant: ``[[A+2B, B], [B, B/2]]``."""
    a = math.exp(params.alpha)
    b = math.exp(2 * params.alpha + params.beta)
    return np.array([[a + 2 * b, b], [b, b / 2]])


def asymptotic_covariance(params: NaturalParams, variant: ModelVariant) -> np.ndarray:
    """Limit covariance of ``sqrt(N) * (theta_hat - theta)`` for a sparse variant.

    Sparse-density without reciprocity gives ``[[exp(-alpha)]]``; sparse-recip
    gives ``exp(-alpha) * [[1, -2], [-2, 4 + 2 exp(-alpha - beta)]]``.
    """
    if variant.tag is Variant.BASELINE:
        raise UnsupportedVariantError(
            "baseline estimates converge at rate C(N,2)**0.5; use fisher_information instead"
        )
    if not variant.fittable:
        raise UnsupportedVariantError("beta is not estimable under sparse-density with reciprocity")
    scale = math.exp(-params.alpha)
    if not variant.reciprocity:
        return np.array([[scale]])
    ratio = math.exp(-params.alpha - params.beta)
    return scale * np.array([[1.0, -2.0], [-2.0, 4.0 + 2.0 * ratio]])
