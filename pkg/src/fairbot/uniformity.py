"""Kolmogorov-Smirnov uniformity assessment and histograms for BOT samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptySample
from .specialfn import kolmogorov_pvalue


def ks_statistic(values) -> float:
    """One-sample KS distance between the sample and the standard uniform CDF."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptySample("KS statistic of an empty sample")
    u = np.sort(v)
    n = u.size
    steps = np.arange(1, n + 1) / n
    d_plus = np.max(steps - u)
    d_minus = np.max(u - (steps - 1.0 / n))
    return float(max(d_plus, d_minus, 0.0))


def ks_test(values) -> tuple[float, float]:
    """KS statistic and its asymptotic p-value against the standard uniform."""
    v = np.asarray(values, dtype=float).ravel()
    d = ks_statistic(v)
    return d, kolmogorov_pvalue(d, v.size)


def histogram(values, bins: int = 20) -> np.ndarray:
    """Equal-width bin counts on [0, 1]; the last bin is closed so u = 1 lands in it."""
    bins = int(bins)
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return np.zeros(bins, dtype=np.int64)
    if np.any((v < 0.0) | (v > 1.0)) or not np.all(np.isfinite(v)):
        raise DomainError("histogram values must lie in [0, 1]")
    idx = np.minimum((v * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, minlength=bins)


@dataclass
class BotSeries:
    """BOT values of one variant with their uniformity summary."""

    variant: str
    values: np.ndarray
    d_stat: float
    p_value: float
    histogram: np.ndarray

    @classmethod
    def from_values(cls, variant: str, values, bins: int = 20) -> "BotSeries":
        v = np.asarray(values, dtype=float).ravel()
        d, p = ks_test(v)
        return cls(variant=variant, values=v, d_stat=d, p_value=p, histogram=histogram(v, bins))

    @property
    def n_values(self) -> int:
        return self.values.size
