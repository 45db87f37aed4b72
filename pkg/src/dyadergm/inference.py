"""Maximum likelihood, scores, Wald intervals and mean-value inversion.

The MLE has a closed form.  The dyad census is a multinomial sample over the
states (null, single, single, mutual) with weights ``(1, A', A', B')``, so the
MLE of the effective weights is the ratio of counts::

    A' = n_asym / (2 n_null)        B' = n_mutual / n_null

and the natural parameters follow by undoing the variant's offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtri

from .errors import ConvergenceError, DomainError, NonexistentMLEError, UnsupportedVariantError
from .model import (
    ModelVariant,
    MeanValueTargets,
    NaturalParams,
    Variant,
    _check_n,
    effective_log_weights,
    expected_stats,
    fisher_information,
    log_normalizer,
    n_dyads,
)
from .sampler import DyadCensus


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_mle`.

    When ``exists`` is false, ``params_hat``, ``std_errors`` and
    ``info_observed`` are ``None`` and ``reason`` says which hull face the
    census sits on.  ``std_errors[1]`` is NaN for a model without reciprocity.
    """

    variant: ModelVariant
    n_vertices: int
    exists: bool
    params_hat: Optional[NaturalParams] = None
    std_errors: Optional[tuple[float, float]] = None
    info_observed: Optional[np.ndarray] = None
    reason: str = ""


@dataclass(frozen=True)
class ConfidenceInterval:
    level: float
    estimate: float
    lower: float
    upper: float
    method: str = "plug-in"

    def __contains__(self, value):
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class Score:
    """Gradient of ``loglik / N`` with respect to ``(alpha, beta)``."""

    d_alpha: float
    d_beta: float = 0.0


def nonexistence_reason(census: DyadCensus, reciprocity: bool = True) -> str:
    """Empty string if the MLE exists, otherwise the violated hull condition.

    With reciprocity the observed ``(s, m)`` must lie inside the triangle with
    vertices ``(0, 0)``, ``(C, 0)`` and ``(2C, C)``: ``0 < s < N(N-1)``,
    ``0 < m < s/2`` and at least one null dyad.
    """
    s, m = census.s, census.m
    if not 0 < s < census.n_vertices * (census.n_vertices - 1):
        return "s on hull boundary"
    if not reciprocity:
        return ""
    if m == 0:
        return "m on hull boundary (no mutual dyads)"
    if 2 * m == s:
        return "m on hull boundary (every tie reciprocated)"
    if census.n_null == 0:
        return "no null dyads (hull boundary)"
    return ""


def mle_exists(census: DyadCensus, reciprocity: bool = True) -> bool:
    return nonexistence_reason(census, reciprocity) == ""


def mle_arrays(n_vertices, n_null, n_asym, n_mutual, variant: ModelVariant):
    """Vectorised closed-form MLE over many censuses of equal size.

    Returns ``(exists, alpha_hat, beta_hat)`` arrays; estimates are NaN where
    the MLE does not exist.  ``beta_hat`` is all zeros without reciprocity.
    """
    if not variant.fittable:
        raise UnsupportedVariantError(
            "sparse-density with reciprocity is not a fitting target (reciprocity vanishes)"
        )
    n0 = np.asarray(n_null, dtype=np.float64)
    na = np.asarray(n_asym, dtype=np.float64)
    nm = np.asarray(n_mutual, dtype=np.float64)
    s = na + 2 * nm
    n_ordered = n_vertices * (n_vertices - 1)
    exists = (s > 0) & (s < n_ordered)
    d_alpha, d_beta = variant.offsets(n_vertices)
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant.reciprocity:
            exists &= (nm > 0) & (na > 0) & (n0 > 0)
            log_a = np.log(na) - np.log(2 * n0)
            log_b = np.log(nm) - np.log(n0)
            alpha = log_a - d_alpha
            beta = log_b - 2 * log_a - d_beta
        else:
            alpha = np.log(s) - np.log(n_ordered - s) - d_alpha
            beta = np.zeros_like(alpha)
    alpha = np.where(exists, alpha, np.nan)
    beta = np.where(exists, beta, np.nan)
    return exists, alpha, beta


def fit_mle(census: DyadCensus, variant: ModelVariant) -> FitResult:
    """Closed-form MLE with standard errors from the inverse Fisher information."""
    n = census.n_vertices
    exists, alpha, beta = mle_arrays(n, census.n_null, census.n_asym, census.n_mutual, variant)
    if not exists:
        return FitResult(variant, n, False, reason=nonexistence_reason(census, variant.reciprocity))
    params = NaturalParams(float(alpha), float(beta))
    info = fisher_information(params, variant, n)
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    std_errors = (float(se[0]), float(se[1]) if variant.reciprocity else math.nan)
    return FitResult(variant, n, True, params, std_errors, info)


def log_likelihood(census: DyadCensus, params: NaturalParams, variant: ModelVariant) -> float:
    """Exact log-likelihood of ``(alpha, beta)`` given a census."""
    log_a, log_b = effective_log_weights(params, variant, census.n_vertices)
    # log_b - 2 log_a is the effective beta
    return (
        log_a * census.s
        + (log_b - 2 * log_a) * census.m
        - log_normalizer(params, variant, census.n_vertices)
    )


def score(census: DyadCensus, params: NaturalParams, variant: ModelVariant) -> Score:
    """Per-vertex score ``(s - E[s], m - E[m]) / N``.

    Equals ``((N-1)/2) * (s_bar - E s_bar, m_bar - E m_bar)`` with
    ``s_bar = s / C(N, 2)``.
    """
    n = census.n_vertices
    e_s, e_m = expected_stats(params, variant, n)
    d_beta = (census.m - e_m) / n if variant.reciprocity else 0.0
    return Score((census.s - e_s) / n, d_beta)


def normal_quantile(p):
    """Standard normal quantile (``scipy.special.ndtri``)."""
    return ndtri(p)


def critical_value(level: float) -> float:
    """Two-sided ``z*`` for confidence ``level``."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must be in (0, 1), got {level}")
    return float(-normal_quantile((1.0 - level) / 2.0))


def plugin_std_errors(alpha_hat, beta_hat, n_vertices: int, reciprocity: bool = True):
    """Plug-in standard errors from the sparse-regime limit covariance.

    ``sqrt(exp(-alpha)/N)`` for alpha and
    ``sqrt(exp(-alpha) * (4 + 2 exp(-alpha - beta)) / N)`` for beta.
    Accepts arrays.
    """
    alpha_hat = np.asarray(alpha_hat, dtype=np.float64)
    scale = np.exp(-alpha_hat) / n_vertices
    se_alpha = np.sqrt(scale)
    if not reciprocity:
        return se_alpha, np.full_like(se_alpha, np.nan)
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    se_beta = np.sqrt(scale * (4.0 + 2.0 * np.exp(-alpha_hat - beta_hat)))
    return se_alpha, se_beta


def _require_fit(fit: FitResult):
    if not fit.exists:
        raise NonexistentMLEError(f"MLE does not exist: {fit.reason}")


def wald_ci(fit: FitResult, level: float = 0.95):
    """Plug-in Wald intervals for a sparse-variant fit.

    Returns ``(ci_alpha, ci_beta)``; ``ci_beta`` is ``None`` for the
    sparse-density model without reciprocity.  Baseline fits have no plug-in
    formula, see :func:`observed_info_ci`.
    """
    _require_fit(fit)
    if fit.variant.tag is Variant.BASELINE:
        raise UnsupportedVariantError(
            "no plug-in Wald formula for the baseline variant; use observed_info_ci"
        )
    z = critical_value(level)
    a, b = fit.params_hat.alpha, fit.params_hat.beta
    se_a, se_b = plugin_std_errors(a, b, fit.n_vertices, fit.variant.reciprocity)
    ci_a = ConfidenceInterval(level, a, a - z * float(se_a), a + z * float(se_a))
    if not fit.variant.reciprocity:
        return ci_a, None
    return ci_a, ConfidenceInterval(level, b, b - z * float(se_b), b + z * float(se_b))


def observed_info_ci(fit: FitResult, level: float = 0.95):
    """Wald intervals from the inverse information at the estimate (any variant)."""
    _require_fit(fit)
    z = critical_value(level)
    out = []
    for est, se in zip((fit.params_hat.alpha, fit.params_hat.beta), fit.std_errors):
        if math.isnan(se):
            out.append(None)
        else:
            out.append(ConfidenceInterval(level, est, est - z * se, est + z * se, "observed-information"))
    return tuple(out)


@dataclass(frozen=True)
class NewtonResult:
    params: NaturalParams
    iterations: int
    residual: float


def _check_targets(targets: MeanValueTargets, n_vertices: int, reciprocity: bool):
    s, m = targets.edges_per_vertex, targets.mutuals_per_vertex
    if not 0 < s < n_vertices - 1:
        raise DomainError(f"edges_per_vertex={s} not strictly inside (0, {n_vertices - 1})")
    if reciprocity:
        if not 0 < m < s / 2:
            raise DomainError(f"mutuals_per_vertex={m} not strictly inside (0, {s / 2})")
        # at least one expected null dyad: m > s - (N-1)/2
        if m <= s - (n_vertices - 1) / 2:
            raise DomainError(f"targets ({s}, {m}) leave no null dyads at N={n_vertices}")


def _sparse_limit_start(targets: MeanValueTargets, n_vertices: int, variant: ModelVariant):
    """Starting point from the sparse-recip limits ``E[s]/N -> A+B``, ``E[m]/N -> B/2``.

    Computed on the sparse scale, then converted to ``variant``'s scale.
    """
    s, m = targets.edges_per_vertex, targets.mutuals_per_vertex
    log_n = math.log(n_vertices)
    if variant.reciprocity:
        alpha = math.log(s - 2 * m)
        beta = math.log(2 * m) - 2 * alpha
        eff = (alpha - log_n, beta + log_n)
    else:
        eff = (math.log(s) - log_n, 0.0)
    d_alpha, d_beta = variant.offsets(n_vertices)
    return np.array([eff[0] - d_alpha, eff[1] - d_beta])


def newton_moment_match(
    targets: MeanValueTargets,
    n_vertices: int,
    variant: ModelVariant,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> NewtonResult:
    """Solve ``expected_stats(theta) / N = targets`` by damped Newton steps.

    The Jacobian of the per-vertex mean map is ``fisher_information / N``.  A
    step is halved until the max-norm residual decreases.  Without
    reciprocity only ``edges_per_vertex`` is matched.
    """
    n_vertices = _check_n(n_vertices)
    _check_targets(targets, n_vertices, variant.reciprocity)
    k = variant.n_params
    goal = np.array([targets.edges_per_vertex, targets.mutuals_per_vertex])[:k]

    def residual(theta):
        params = NaturalParams(theta[0], theta[1] if k == 2 else 0.0)
        return np.array(expected_stats(params, variant, n_vertices))[:k] / n_vertices - goal, params

    theta = _sparse_limit_start(targets, n_vertices, variant)[:k]
    r, params = residual(theta)
    norm = np.max(np.abs(r))
    for it in range(1, max_iter + 1):
        if norm < tol:
            return NewtonResult(params, it - 1, float(norm))
        jac = fisher_information(params, variant, n_vertices) / n_vertices
        step = np.linalg.solve(jac, r)
        t = 1.0
        while True:
            candidate = theta - t * step
            try:
                r_new, p_new = residual(candidate)
                n_new = np.max(np.abs(r_new))
            except DomainError:
                n_new = math.inf
            if n_new < norm or t < 1e-12:
                break
            t /= 2
        if not math.isfinite(n_new):
            break
        theta, r, params, norm = candidate, r_new, p_new, n_new
    if norm < tol:
        return NewtonResult(params, max_iter, float(norm))
    raise ConvergenceError(
        f"Newton did not converge in {max_iter} iterations (residual {norm:.3g})",
        last_iterate=tuple(float(x) for x in theta),
        residual=float(norm),
    )


def mean_value_to_natural(
    targets: MeanValueTargets, n_vertices: int, variant: ModelVariant
) -> NaturalParams:
    """Natural parameters whose per-vertex expected statistics equal ``targets``."""
    return newton_moment_match(targets, n_vertices, variant).params


__all__ = [
    "ConfidenceInterval",
    "FitResult",
    "NewtonResult",
    "Score",
    "critical_value",
    "fit_mle",
    "log_likelihood",
    "mean_value_to_natural",
    "mle_arrays",
    "mle_exists",
    "newton_moment_match",
    "nonexistence_reason",
    "normal_quantile",
    "observed_info_ci",
    "plugin_std_errors",
    "score",
    "wald_ci",
]
