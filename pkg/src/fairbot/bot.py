"""The four Box ordinate transform variants for multivariate Gaussian forecasts.

The theoretical transform evaluates the known predictive law directly; the
naive, adjusted, and fair variants plug in ensemble-based moment estimates.
The fair variant maps the rescaled Mahalanobis distance through the exact
F-law of the Hotelling statistic, so calibrated ensembles of any size n > p
yield exactly uniform values.

Scalar functions operate on one case; the batch_* companions evaluate whole
case blocks with stacked LAPACK calls and are numerically equivalent (they are
tested against the scalar route).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import matstat, specialfn
from .errors import DimensionMismatch, NotPositiveDefinite, TooFewMembers

VARIANTS = ("theoretical", "naive", "adjusted", "fair")
SAMPLE_VARIANTS = ("naive", "adjusted", "fair")


@dataclass(eq=False)
class GaussianLaw:
    """A p-dimensional Gaussian predictive law with cached Cholesky factor."""

    mean: np.ndarray
    covariance: np.ndarray
    chol: matstat.CholeskyFactor = field(init=False, repr=False)

    def __post_init__(self):
        self.mean = matstat.as_vector(self.mean, "mean")
        self.covariance = matstat.as_sym_matrix(self.covariance, "covariance")
        if self.covariance.shape[0] != self.mean.size:
            raise DimensionMismatch(
                f"mean has length {self.mean.size}, covariance is {self.covariance.shape}"
            )
        self.chol = matstat.cholesky(self.covariance)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(eq=False)
class EnsembleCase:
    """One verification instance: an observation and an n x p member block."""

    obs: np.ndarray
    members: np.ndarray

    def __post_init__(self):
        self.obs = matstat.as_vector(self.obs, "observation")
        self.members = np.asarray(self.members, dtype=float)
        if self.members.ndim != 2 or self.members.shape[0] < 1:
            raise DimensionMismatch(
                f"members must be a nonempty 2-d array, got shape {self.members.shape}"
            )
        if self.members.shape[1] != self.obs.size:
            raise DimensionMismatch(
                f"observation has length {self.obs.size}, members have dimension "
                f"{self.members.shape[1]}"
            )

    @property
    def dim(self) -> int:
        return self.obs.size

    @property
    def n_members(self) -> int:
        return self.members.shape[0]


def fair_scale(n: int, p: int) -> float:
    """Factor mapping the squared Mahalanobis distance onto the F(p, n-p) scale."""
    return n * (n - p) / (p * (n**2 - 1))


def bot_theoretical(law: GaussianLaw, obs) -> float:
    """Ordinate transform of the observation under a fully known Gaussian law."""
    obs_v = matstat.as_vector(obs, "observation")
    if obs_v.size != law.dim:
        raise DimensionMismatch(f"observation has length {obs_v.size}, law dimension {law.dim}")
    d2 = matstat.mahalanobis_sq(obs_v, law.mean, law.chol)
    return 1.0 - specialfn.chi2_cdf(law.dim, d2)


def bot_naive(case: EnsembleCase) -> float:
    """Plug-in transform using ensemble-only moment estimates."""
    mean, cov = matstat.ensemble_moments(case.members)
    chol = matstat.cholesky(cov)
    d2 = matstat.mahalanobis_sq(case.obs, mean, chol)
    return 1.0 - specialfn.chi2_cdf(case.dim, d2)


def bot_adjusted(case: EnsembleCase) -> float:
    """Plug-in transform with the observation folded into the moment estimates."""
    mean, cov = matstat.augmented_moments(case.members, case.obs)
    chol = matstat.cholesky(cov)
    d2 = matstat.mahalanobis_sq(case.obs, mean, chol)
    return 1.0 - specialfn.chi2_cdf(case.dim, d2)


def bot_fair(case: EnsembleCase) -> float:
    """Finite-ensemble exact transform via the Hotelling-to-F identity.

    Requires n > p. n = p + 1 is supported; the resulting F law has a single
    denominator degree of freedom and is extremely heavy-tailed, but the
    transform remains exact.
    """
    n, p = case.n_members, case.dim
    if n <= p:
        raise TooFewMembers(f"fair transform needs n > p, got n={n}, p={p}")
    mean, cov = matstat.ensemble_moments(case.members)
    chol = matstat.cholesky(cov)
    d2 = matstat.mahalanobis_sq(case.obs, mean, chol)
    return 1.0 - specialfn.f_cdf(p, n - p, fair_scale(n, p) * d2)


def _batch_cholesky(matrices: np.ndarray, what: str) -> np.ndarray:
    """Stacked Cholesky of per-case sample covariances.

    Unlike matstat.cholesky, no pivot floor is applied: sample covariances of
    continuous draws with n > p are positive definite with probability one,
    and ensembles of barely more than p members legitimately produce very
    small (but valid) pivots. Only an outright LAPACK failure is treated as a
    degenerate case.
    """
    try:
        return np.linalg.cholesky(matrices)
    except np.linalg.LinAlgError:
        bad = _first_failing_case(matrices)
        raise NotPositiveDefinite(f"{what} is not positive definite at case {bad}") from None


def _first_failing_case(matrices: np.ndarray) -> int:
    for i, m in enumerate(matrices):
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return i
    return -1


def _batch_mahalanobis_sq(diff: np.ndarray, lower: np.ndarray) -> np.ndarray:
    w = np.linalg.solve(lower, diff[:, :, None])[:, :, 0]
    return np.einsum("ni,ni->n", w, w)


def batch_theoretical(law: GaussianLaw, obs_block) -> np.ndarray:
    """Theoretical transform of each row of an (N, p) observation block."""
    obs = np.asarray(obs_block, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != law.dim:
        raise DimensionMismatch(f"observation block must be (N, {law.dim}), got {obs.shape}")
    w = np.linalg.solve(law.chol.lower, (obs - law.mean).T)
    d2 = np.einsum("pn,pn->n", w, w)
    return 1.0 - specialfn.chi2_cdf(law.dim, d2)


def batch_sample(obs_block, member_block) -> dict[str, np.ndarray]:
    """Naive, adjusted, and fair transforms for N cases at once.

    obs_block is (N, p), member_block is (N, n, p) with n > p.
    """
    obs = np.asarray(obs_block, dtype=float)
    members = np.asarray(member_block, dtype=float)
    if members.ndim != 3 or obs.ndim != 2 or members.shape[0] != obs.shape[0] \
            or members.shape[2] != obs.shape[1]:
        raise DimensionMismatch(
            f"incompatible block shapes {obs.shape} and {members.shape}"
        )
    n_cases, n, p = members.shape
    if n <= p:
        raise TooFewMembers(f"fair transform needs n > p, got n={n}, p={p}")

    mean = members.mean(axis=1)
    centered = members - mean[:, None, :]
    cov = centered.transpose(0, 2, 1) @ centered / (n - 1)
    lower = _batch_cholesky(cov, "ensemble covariance")
    d2 = _batch_mahalanobis_sq(obs - mean, lower)
    u_naive = 1.0 - specialfn.chi2_cdf(p, d2)
    u_fair = 1.0 - specialfn.f_cdf(p, n - p, fair_scale(n, p) * d2)

    stacked = np.concatenate([obs[:, None, :], members], axis=1)
    mean_aug = stacked.mean(axis=1)
    centered_aug = stacked - mean_aug[:, None, :]
    cov_aug = centered_aug.transpose(0, 2, 1) @ centered_aug / n
    lower_aug = _batch_cholesky(cov_aug, "augmented covariance")
    d2_aug = _batch_mahalanobis_sq(obs - mean_aug, lower_aug)
    u_adjusted = 1.0 - specialfn.chi2_cdf(p, d2_aug)

    return {"naive": u_naive, "adjusted": u_adjusted, "fair": u_fair}
