"""Dense symmetric linear algebra and multivariate Gaussian sampling kernel.

Factorizations are delegated to LAPACK through numpy.linalg; this module adds
the validation, error taxonomy, and deterministic sampling streams the rest of
the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    TooFewMembers,
)

# A Cholesky pivot below this fraction of the largest diagonal entry is treated
# as numerically semidefinite even when LAPACK itself succeeds.
PIVOT_RTOL = 1e-12

# Supported variate stream algorithm: PCG64 uniforms fed through the Marsaglia
# polar transform. Fixed so that seeded runs are bit-reproducible per platform.
POLAR_PCG64 = "pcg64-polar"


def as_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 1-d array, got shape {arr.shape}")
    return arr


def as_sym_matrix(a, name: str = "matrix", rtol: float = 1e-8) -> np.ndarray:
    """Validate a square symmetric matrix (within a small relative tolerance)."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    scale = np.max(np.abs(arr))
    if scale > 0 and np.max(np.abs(arr - arr.T)) > rtol * scale:
        raise DomainError(f"{name} is not symmetric")
    return arr


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T equal to the source matrix."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray   # sorted descending
    eigenvectors: np.ndarray  # column i pairs with eigenvalues[i]


def cholesky(a) -> CholeskyFactor:
    """Cholesky factorization of a symmetric positive definite matrix.

    Raises NotPositiveDefinite when LAPACK fails or when any pivot falls at or
    below PIVOT_RTOL times the largest diagonal entry.
    """
    arr = as_sym_matrix(a)
    max_diag = float(np.max(np.diag(arr)))
    if max_diag <= 0.0:
        raise NotPositiveDefinite("matrix has no positive diagonal entry")
    try:
        lower = np.linalg.cholesky(arr)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"matrix is not positive definite: {exc}") from None
    pivots = np.diag(lower) ** 2
    if np.min(pivots) <= PIVOT_RTOL * max_diag:
        raise NotPositiveDefinite(
            f"matrix is numerically semidefinite (pivot {np.min(pivots):.3e} "
            f"vs diagonal scale {max_diag:.3e})"
        )
    return CholeskyFactor(lower)


def solve_spd(chol: CholeskyFactor, b) -> np.ndarray:
    """Solve A y = b given the Cholesky factor of A."""
    rhs = as_vector(b, "right-hand side")
    if rhs.size != chol.dim:
        raise DimensionMismatch(f"factor is {chol.dim}-dimensional, rhs has length {rhs.size}")
    w = np.linalg.solve(chol.lower, rhs)
    return np.linalg.solve(chol.lower.T, w)


def sym_eigen(a) -> SpectralDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back descending; each eigenvector has unit norm with its
    largest-magnitude component (the first such, on ties) made positive.
    """
    arr = as_sym_matrix(a)
    try:
        values, vectors = np.linalg.eigh(arr)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(f"eigendecomposition failed: {exc}") from None
    order = np.argsort(-values, kind="stable")  # stable: ties keep LAPACK's order
    values = values[order]
    vectors = vectors[:, order].copy()
    for i in range(vectors.shape[1]):
        col = vectors[:, i]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, i] = -col
    return SpectralDecomposition(values, vectors)


def mahalanobis_sq(x, center, chol: CholeskyFactor) -> float:
    """Squared Mahalanobis distance (x - center)' A^{-1} (x - center)."""
    xv = as_vector(x, "x")
    cv = as_vector(center, "center")
    if xv.size != cv.size or xv.size != chol.dim:
        raise DimensionMismatch(
            f"x has length {xv.size}, center {cv.size}, factor dimension {chol.dim}"
        )
    w = np.linalg.solve(chol.lower, xv - cv)
    return float(w @ w)


def ensemble_moments(members) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance (divisor n - 1) of an n x p member array."""
    arr = np.asarray(members, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"members must be a 2-d array, got shape {arr.shape}")
    n = arr.shape[0]
    if n < 2:
        raise TooFewMembers(f"need at least 2 members, got {n}")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / (n - 1)
    return mean, cov


def augmented_moments(members, obs) -> tuple[np.ndarray, np.ndarray]:
    """Moments over the n members plus the observation, with covariance divisor n."""
    arr = np.asarray(members, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise DimensionMismatch(f"members must be a nonempty 2-d array, got shape {arr.shape}")
    obs_v = as_vector(obs, "observation")
    if obs_v.size != arr.shape[1]:
        raise DimensionMismatch(
            f"observation has length {obs_v.size}, members have dimension {arr.shape[1]}"
        )
    n = arr.shape[0]
    stacked = np.vstack([obs_v[None, :], arr])
    mean = stacked.mean(axis=0)
    centered = stacked - mean
    cov = centered.T @ centered / n
    return mean, cov


class NormalSource:
    """Buffered stream of standard normal variates.

    Uniform doubles from the wrapped generator are consumed strictly in pairs
    and transformed by the Marsaglia polar method, so the resulting variate
    sequence depends only on the generator state, never on how deliveries are
    sliced across calls.
    """

    def __init__(self, generator: np.random.Generator):
        self._gen = generator
        self._buffer = np.empty(0)

    def normals(self, shape) -> np.ndarray:
        size = int(np.prod(shape))
        need = size - self._buffer.size
        parts = [self._buffer] if self._buffer.size else []
        while need > 0:
            pairs = (need >> 1) + (need >> 3) + 16
            uv = self._gen.random((pairs, 2)) * 2.0 - 1.0
            s = uv[:, 0] ** 2 + uv[:, 1] ** 2
            accepted = (s > 0.0) & (s < 1.0)
            s_ok = s[accepted]
            factor = np.sqrt(-2.0 * np.log(s_ok) / s_ok)
            z = (uv[accepted] * factor[:, None]).ravel()
            parts.append(z)
            need -= z.size
        flat = parts[0] if len(parts) == 1 else np.concatenate(parts)
        self._buffer = flat[size:]
        return flat[:size].reshape(shape)


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of a reproducible, independent variate stream."""

    root_seed: int
    stream_index: int = 0
    algorithm: str = POLAR_PCG64

    def __post_init__(self):
        if self.stream_index < 0:
            raise DomainError(f"stream index must be nonnegative, got {self.stream_index}")
        if self.algorithm != POLAR_PCG64:
            raise DomainError(f"unsupported stream algorithm {self.algorithm!r}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.root_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))

    def source(self) -> NormalSource:
        return NormalSource(self.generator())


def mvn_sample(mean, chol: CholeskyFactor, source: NormalSource) -> np.ndarray:
    """One draw from N(mean, L L') using the next variates of the stream."""
    mean_v = as_vector(mean, "mean")
    if mean_v.size != chol.dim:
        raise DimensionMismatch(f"mean has length {mean_v.size}, factor dimension {chol.dim}")
    z = source.normals((mean_v.size,))
    return mean_v + chol.lower @ z
