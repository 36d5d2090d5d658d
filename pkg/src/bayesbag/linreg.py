"""Conjugate normal-inverse-gamma linear regression feature selection.

A model is a binary inclusion vector ``gamma`` selecting columns of the
regressor matrix.  Conditional on ``gamma`` with ``d = sum(gamma)`` active
columns Z_g, the assumed model is::

    sigma^2                    ~ InvGamma(a0, b0)
    beta_j | sigma^2           ~ Normal(0, sigma^2 / lam)   iid, j = 1..d
    y_n | z_n, beta, sigma^2   ~ Normal(z_{g,n}' beta, sigma^2)

Integrating out (beta, sigma^2) gives a closed-form marginal likelihood.
With integer resampling weights w (observation n counted w_n times) the
data enter only through M = sum(w), Lam_g = Z_g' W Z_g + lam I and
b_g = b0 + (y' W y - y' W Z_g Lam_g^{-1} Z_g' W y) / 2, where W = diag(w):

    log ml = a0 log b0 + lgamma(a0 + M/2) - (M/2) log 2pi - lgamma(a0)
             + (d/2) log lam - (a0 + M/2) log b_g - (1/2) log |Lam_g|

so weighting is exactly equivalent to evaluating the unit-weight formula
on the dataset with rows replicated per their counts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, lgamma, log, pi

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import digamma, polygamma

from .errors import (
    InvalidArgumentError,
    NumericDomainError,
    ResourceLimitError,
    VarianceUndefinedError,
)

__all__ = [
    "RegressionDataset",
    "NIGHyperparams",
    "ParamMoments",
    "SuffStats",
    "weighted_stats",
    "log_marginal_likelihood",
    "log_marginal_likelihood_from_stats",
    "model_log_marginals",
    "make_evaluator",
    "enumerate_models",
    "log_prior_gamma",
    "log_priors",
    "pips",
    "posterior_param_moments",
    "param_moments_from_stats",
]

LOG_2PI = log(2.0 * pi)

# Total admissible models sum_{j<=k*} C(D, j) must not exceed this.
MODEL_ENUMERATION_GUARD = 10_000_000

# Diagonal jitter escalation before declaring a matrix non-PD; lam > 0
# guarantees positive definiteness in exact arithmetic, so jitter only
# covers float edge cases.
_JITTERS = (0.0, 1e-12, 1e-10)


@dataclass(frozen=True)
class RegressionDataset:
    """Regressors ``z`` (n x d) and responses ``y`` (length n)."""

    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        z = np.atleast_2d(np.asarray(self.z, dtype=float))
        y = np.asarray(self.y, dtype=float)
        if z.ndim != 2 or y.ndim != 1 or z.shape[0] != y.shape[0]:
            raise InvalidArgumentError(
                f"z must be (n, d) and y length n; got {z.shape} and {y.shape}"
            )
        if z.shape[0] < 1 or z.shape[1] < 1:
            raise InvalidArgumentError("need n >= 1 observations and d >= 1 regressors")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("z and y must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def d(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class NIGHyperparams:
    """Prior settings: inverse-gamma (a0, b0), coefficient precision scale
    ``lam``, prior inclusion probability ``q0``, and sparsity cap ``k_star``."""

    a0: float
    b0: float
    lam: float
    q0: float
    k_star: int

    def __post_init__(self):
        if not (self.a0 > 0 and self.b0 > 0 and self.lam > 0):
            raise InvalidArgumentError("a0, b0 and lam must be positive")
        if not 0.0 < self.q0 < 1.0:
            raise InvalidArgumentError(f"q0 must be in (0, 1), got {self.q0}")
        if self.k_star < 1:
            raise InvalidArgumentError(f"k_star must be >= 1, got {self.k_star}")


@dataclass(frozen=True)
class ParamMoments:
    """Posterior moments of (log sigma^2, beta) for one inclusion vector.

    ``mean_beta``/``var_beta`` cover the active coordinates only, in the
    order of the included columns.
    """

    mean_log_sigma2: float
    var_log_sigma2: float
    mean_beta: np.ndarray
    var_beta: np.ndarray


@dataclass(frozen=True)
class SuffStats:
    """Weighted sufficient statistics: Z'WZ, Z'Wy, y'Wy and M = sum(w)."""

    zwz: np.ndarray
    zwy: np.ndarray
    ywy: float
    m: float


def weighted_stats(data: RegressionDataset, weights) -> SuffStats:
    """Precompute the weighted sufficient statistics for one weight vector."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (data.n,):
        raise InvalidArgumentError(
            f"weights must have length n={data.n}, got shape {w.shape}"
        )
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be finite and nonnegative")
    zw = data.z * w[:, None]
    return SuffStats(
        zwz=zw.T @ data.z,
        zwy=zw.T @ data.y,
        ywy=float(w @ (data.y * data.y)),
        m=float(w.sum()),
    )


def _spd_cholesky(a: np.ndarray) -> np.ndarray:
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(a if jitter == 0.0 else a + jitter * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise NumericDomainError(
        "Z'WZ + lam*I is not positive definite; inputs contain NaN or are corrupt"
    )


def log_marginal_likelihood_from_stats(
    stats: SuffStats, gamma, hyper: NIGHyperparams
) -> float:
    """Weighted log marginal likelihood for one inclusion vector, from
    precomputed sufficient statistics."""
    idx = np.flatnonzero(gamma)
    d_active = idx.size
    a_n = hyper.a0 + 0.5 * stats.m
    if d_active == 0:
        quad = 0.0
        logdet = 0.0
    else:
        lam_mat = stats.zwz[np.ix_(idx, idx)] + hyper.lam * np.eye(d_active)
        chol = _spd_cholesky(lam_mat)
        t = solve_triangular(chol, stats.zwy[idx], lower=True, check_finite=False)
        quad = float(t @ t)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    b_g = hyper.b0 + 0.5 * (stats.ywy - quad)
    return (
        hyper.a0 * log(hyper.b0)
        + lgamma(a_n)
        - 0.5 * stats.m * LOG_2PI
        - lgamma(hyper.a0)
        + 0.5 * d_active * log(hyper.lam)
        - a_n * log(b_g)
        - 0.5 * logdet
    )


def log_marginal_likelihood(
    data: RegressionDataset, weights, gamma, hyper: NIGHyperparams
) -> float:
    """Weighted log marginal likelihood of one inclusion vector.

    All-zero weights give 0.0 (the empty dataset has evidence 1).
    """
    return log_marginal_likelihood_from_stats(weighted_stats(data, weights), gamma, hyper)


def model_log_marginals(stats: SuffStats, models: np.ndarray, hyper: NIGHyperparams) -> np.ndarray:
    """Log marginal likelihoods for every row of an enumerated model set."""
    return np.array(
        [log_marginal_likelihood_from_stats(stats, g, hyper) for g in models]
    )


def make_evaluator(data: RegressionDataset, models: np.ndarray, hyper: NIGHyperparams):
    """Weighted log-marginal-likelihood evaluator over an enumerated model
    set, suitable for ``core.bagged_model_posterior``.

    Sufficient statistics are computed once per weight vector and shared
    by all models.  The returned callable is pure and thread-safe.
    """

    def evaluate(weights) -> np.ndarray:
        return model_log_marginals(weighted_stats(data, weights), models, hyper)

    return evaluate


def enumerate_models(d: int, k_star: int) -> np.ndarray:
    """All inclusion vectors with at most ``k_star`` ones, as a (count, d)
    binary matrix ordered by model size then lexicographically."""
    if not 1 <= k_star <= d:
        raise InvalidArgumentError(f"need 1 <= k_star <= d, got k_star={k_star}, d={d}")
    counts = [comb(d, j) for j in range(k_star + 1)]
    total = sum(counts)
    if total > MODEL_ENUMERATION_GUARD:
        raise ResourceLimitError(
            f"{total} models exceed the enumeration guard "
            f"({MODEL_ENUMERATION_GUARD}); lower k_star or drop regressors"
        )
    out = np.zeros((total, d), dtype=np.uint8)
    start = 1  # row 0 is the empty model
    for j in range(1, k_star + 1):
        block = np.zeros((counts[j], d), dtype=np.uint8)
        for i, positions in enumerate(itertools.combinations(range(d), j)):
            block[i, list(positions)] = 1
        # combinations order is lexicographic in positions, which is
        # reverse-lexicographic in the binary vectors.
        out[start : start + counts[j]] = block[::-1]
        start += counts[j]
    return out


def log_prior_gamma(gamma, hyper: NIGHyperparams) -> float:
    """Unnormalized log prior of one inclusion vector:
    d_g log q0 + (D - d_g) log(1 - q0)."""
    gamma = np.asarray(gamma)
    d_active = int(gamma.sum())
    return d_active * log(hyper.q0) + (gamma.size - d_active) * log(1.0 - hyper.q0)


def log_priors(models: np.ndarray, hyper: NIGHyperparams) -> np.ndarray:
    """Unnormalized log priors for every row of an enumerated model set."""
    sizes = models.sum(axis=1).astype(float)
    return sizes * log(hyper.q0) + (models.shape[1] - sizes) * log(1.0 - hyper.q0)


def pips(posterior, models: np.ndarray) -> np.ndarray:
    """Posterior inclusion probabilities: pip_d = sum_g gamma_d * P(gamma).

    ``posterior`` is a ``ModelPosterior`` (or a bare probability vector)
    aligned with the rows of ``models``.
    """
    probs = np.asarray(getattr(posterior, "probs", posterior), dtype=float)
    if probs.shape != (models.shape[0],):
        raise InvalidArgumentError(
            f"posterior has {probs.shape} probabilities for {models.shape[0]} models"
        )
    return probs @ models.astype(float)


def param_moments_from_stats(stats: SuffStats, gamma, hyper: NIGHyperparams) -> ParamMoments:
    """Conjugate posterior moments from precomputed sufficient statistics.

    The posterior is sigma^2 ~ InvGamma(a_n, b_g) with a_n = a0 + M/2, and
    beta | sigma^2 ~ Normal(beta_hat, sigma^2 Lam_g^{-1}); marginally each
    beta_j is Student-t with variance b_g/(a_n - 1) * (Lam_g^{-1})_jj, and
    log sigma^2 has mean log b_g - digamma(a_n) and variance trigamma(a_n).
    """
    a_n = hyper.a0 + 0.5 * stats.m
    if a_n <= 1.0:
        raise VarianceUndefinedError(
            f"posterior variance needs a0 + M/2 > 1, got {a_n}"
        )
    idx = np.flatnonzero(gamma)
    d_active = idx.size
    if d_active == 0:
        mean_beta = np.empty(0)
        var_beta = np.empty(0)
        b_g = hyper.b0 + 0.5 * stats.ywy
    else:
        lam_mat = stats.zwz[np.ix_(idx, idx)] + hyper.lam * np.eye(d_active)
        chol = _spd_cholesky(lam_mat)
        rhs = stats.zwy[idx]
        t = solve_triangular(chol, rhs, lower=True, check_finite=False)
        mean_beta = solve_triangular(chol.T, t, lower=False, check_finite=False)
        inv_chol = solve_triangular(
            chol, np.eye(d_active), lower=True, check_finite=False
        )
        inv_diag = np.sum(inv_chol * inv_chol, axis=0)
        b_g = hyper.b0 + 0.5 * (stats.ywy - float(t @ t))
        var_beta = b_g / (a_n - 1.0) * inv_diag
    return ParamMoments(
        mean_log_sigma2=log(b_g) - float(digamma(a_n)),
        var_log_sigma2=float(polygamma(1, a_n)),
        mean_beta=mean_beta,
        var_beta=var_beta,
    )


def posterior_param_moments(
    data: RegressionDataset, weights, gamma, hyper: NIGHyperparams
) -> ParamMoments:
    """Conjugate posterior moments of (log sigma^2, beta) for one model."""
    return param_moments_from_stats(weighted_stats(data, weights), gamma, hyper)
