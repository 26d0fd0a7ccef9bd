"""Truth/forecast law construction and the simulation experiments.

A ScenarioConfig names one miscalibration recipe; build_pair turns it into a
(truth, forecast) pair of Gaussian laws. run_experiment draws independent
forecast cases, evaluates all four transform variants, and packages the
uniformity summaries; rejection_rate and power_curve repeat that over
replications and parameter grids.

Seeding: replication r of a study uses stream index base + r * STREAM_SPACING,
so each replication is independent and can be re-run in isolation with
run_experiment. Offsets within a replication: +0 for case draws, +1 for member
selection (used by the verification front-end).
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from . import bot, matstat, specialfn
from .errors import DomainError
from .uniformity import BotSeries

STREAM_SPACING = 8
CASE_DRAW_OFFSET = 0
SELECTION_OFFSET = 1

# Cases per sampling batch are capped so one block stays around 32 MB.
_BATCH_ELEMENTS = 1 << 22


class Kind(str, Enum):
    CALIBRATED = "calibrated"
    TYPE1 = "type1"
    TYPE2 = "type2"
    MIXED = "mixed"
    ALT_VARIANCE = "alt_variance"
    ALT_CORRELATION = "alt_correlation"
    BIAS = "bias"


@dataclass(frozen=True)
class ScenarioConfig:
    """Named miscalibration recipe: truth parameters plus forecast deviations.

    Only the fields relevant to `kind` are consulted. Unset forecast
    parameters default to the truth values, so e.g. a type1 config with
    sigma_f_sq equal to sigma0_sq is a calibrated forecast (power-curve grids
    include that point).
    """

    p: int
    n: int
    kind: Kind = Kind.CALIBRATED
    sigma0_sq: float = 1.0
    rho0: float = 0.6
    sigma_f_sq: float | None = None
    rho_f: float | None = None
    sigma_delta_sq: float | None = None
    rho_delta: float | None = None
    bias_axis: int = 1
    bias_sign: int = 1
    bias_alpha: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.p < 1:
            raise DomainError(f"dimension must be >= 1, got {self.p}")
        if self.n < 1:
            raise DomainError(f"ensemble size must be >= 1, got {self.n}")
        _check_variance(self.sigma0_sq, "sigma0_sq")
        _check_correlation(self.rho0, "rho0")
        if self.sigma_f_sq is not None:
            _check_variance(self.sigma_f_sq, "sigma_f_sq")
        if self.rho_f is not None:
            _check_correlation(self.rho_f, "rho_f")
        if self.kind in (Kind.ALT_VARIANCE, Kind.ALT_CORRELATION):
            sd = self.sigma_delta_sq if self.sigma_delta_sq is not None else 0.0
            rd = self.rho_delta if self.rho_delta is not None else 0.0
            if sd < 0.0 or sd >= self.sigma0_sq:
                raise DomainError(
                    f"sigma_delta_sq must lie in [0, sigma0_sq), got {sd}"
                )
            _check_correlation(self.rho0 + rd, "rho0 + rho_delta")
            _check_correlation(self.rho0 - rd, "rho0 - rho_delta")
        if self.kind is Kind.BIAS:
            if self.bias_axis not in (1, 2):
                raise DomainError(f"bias axis must be 1 or 2, got {self.bias_axis}")
            if self.bias_axis > self.p:
                raise DomainError(f"bias axis {self.bias_axis} exceeds dimension {self.p}")
            if self.bias_sign not in (-1, 1):
                raise DomainError(f"bias sign must be +1 or -1, got {self.bias_sign}")
            if not 0.0 < self.bias_alpha < 1.0:
                raise DomainError(f"bias alpha must lie in (0, 1), got {self.bias_alpha}")


def _check_variance(value: float, name: str):
    if not value > 0.0:
        raise DomainError(f"{name} must be positive, got {value}")


def _check_correlation(value: float, name: str):
    if not -1.0 < value < 1.0:
        raise DomainError(f"{name} must lie strictly in (-1, 1), got {value}")


# CLI scenario names and the field overrides they stand for. The numeric
# values are the classic simulation settings: variance under/over 0.65/1.35,
# correlation under/over 0.45/0.75, alternating loadings 0.35 and 0.15, and a
# mean displaced to the 15% probability ellipsoid along a principal axis.
SCENARIO_NAMES: dict[str, dict[str, Any]] = {
    "calibrated": dict(kind=Kind.CALIBRATED),
    "type1-under": dict(kind=Kind.TYPE1, sigma_f_sq=0.65),
    "type1-over": dict(kind=Kind.TYPE1, sigma_f_sq=1.35),
    "type2-under": dict(kind=Kind.TYPE2, rho_f=0.45),
    "type2-over": dict(kind=Kind.TYPE2, rho_f=0.75),
    "mixed-under": dict(kind=Kind.MIXED, sigma_f_sq=0.65, rho_f=0.45),
    "mixed-over": dict(kind=Kind.MIXED, sigma_f_sq=1.35, rho_f=0.75),
    "alt-variance": dict(kind=Kind.ALT_VARIANCE, sigma_delta_sq=0.35, rho_delta=0.0),
    "alt-correlation": dict(kind=Kind.ALT_CORRELATION, sigma_delta_sq=0.0, rho_delta=0.15),
    "bias-a1p": dict(kind=Kind.BIAS, bias_axis=1, bias_sign=1),
    "bias-a1m": dict(kind=Kind.BIAS, bias_axis=1, bias_sign=-1),
    "bias-a2p": dict(kind=Kind.BIAS, bias_axis=2, bias_sign=1),
    "bias-a2m": dict(kind=Kind.BIAS, bias_axis=2, bias_sign=-1),
}


def named_config(name: str, p: int, n: int, **overrides) -> ScenarioConfig:
    """Build the ScenarioConfig behind a CLI scenario name."""
    try:
        fields = dict(SCENARIO_NAMES[name])
    except KeyError:
        raise DomainError(
            f"unknown scenario {name!r}; expected one of {sorted(SCENARIO_NAMES)}"
        ) from None
    fields.update(overrides)
    return ScenarioConfig(p=p, n=n, **fields)


def ar1_covariance(p: int, sigma_sq: float, rho: float) -> np.ndarray:
    """Covariance sigma^2 * rho^|k - l| of a stationary AR(1) process."""
    if p < 1:
        raise DomainError(f"dimension must be >= 1, got {p}")
    _check_variance(sigma_sq, "sigma_sq")
    _check_correlation(rho, "rho")
    idx = np.arange(p)
    return sigma_sq * float(rho) ** np.abs(idx[:, None] - idx[None, :])


def alternating_covariance(
    p: int,
    sigma0_sq: float,
    rho0: float,
    sigma_delta_sq: float,
    rho_delta: float,
) -> np.ndarray:
    """AR(1)-like covariance with alternating-sign variance and correlation errors.

    Entry (k, l), 1-based:
    sqrt(s0 + (-1)^k sd) * sqrt(s0 + (-1)^l sd) * (rho0 + (-1)^|k-l| rd)^|k-l|.
    The result is verified positive definite before being returned.
    """
    if p < 1:
        raise DomainError(f"dimension must be >= 1, got {p}")
    _check_variance(sigma0_sq, "sigma0_sq")
    _check_correlation(rho0, "rho0")
    if sigma_delta_sq < 0.0 or sigma0_sq - sigma_delta_sq <= 0.0:
        raise DomainError(
            f"sigma_delta_sq must lie in [0, sigma0_sq), got {sigma_delta_sq}"
        )
    _check_correlation(rho0 + rho_delta, "rho0 + rho_delta")
    _check_correlation(rho0 - rho_delta, "rho0 - rho_delta")
    k = np.arange(1, p + 1)
    sd = np.sqrt(sigma0_sq + (-1.0) ** k * sigma_delta_sq)
    lag = np.abs(k[:, None] - k[None, :])
    cov = sd[:, None] * sd[None, :] * (rho0 + (-1.0) ** lag * rho_delta) ** lag
    matstat.cholesky(cov)
    return cov


def bias_vector(truth_cov, axis: int, sign: int, alpha: float) -> np.ndarray:
    """Mean displacement to the alpha-probability ellipsoid along a principal axis."""
    cov = matstat.as_sym_matrix(truth_cov, "truth covariance")
    p = cov.shape[0]
    if not 1 <= axis <= p:
        raise DomainError(f"axis must lie in [1, {p}], got {axis}")
    if sign not in (-1, 1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    eigen = matstat.sym_eigen(cov)
    radius = np.sqrt(specialfn.chi2_quantile(p, alpha))
    return sign * radius * np.sqrt(eigen.eigenvalues[axis - 1]) * eigen.eigenvectors[:, axis - 1]


def build_pair(config: ScenarioConfig) -> tuple[bot.GaussianLaw, bot.GaussianLaw]:
    """Truth and forecast laws for a scenario; calibrated returns one shared law."""
    truth_cov = ar1_covariance(config.p, config.sigma0_sq, config.rho0)
    truth = bot.GaussianLaw(np.zeros(config.p), truth_cov)
    kind = config.kind
    if kind is Kind.CALIBRATED:
        return truth, truth
    if kind in (Kind.TYPE1, Kind.TYPE2, Kind.MIXED):
        sigma = config.sigma_f_sq if config.sigma_f_sq is not None else config.sigma0_sq
        rho = config.rho_f if config.rho_f is not None else config.rho0
        forecast = bot.GaussianLaw(np.zeros(config.p), ar1_covariance(config.p, sigma, rho))
        return truth, forecast
    if kind in (Kind.ALT_VARIANCE, Kind.ALT_CORRELATION):
        cov = alternating_covariance(
            config.p,
            config.sigma0_sq,
            config.rho0,
            config.sigma_delta_sq if config.sigma_delta_sq is not None else 0.0,
            config.rho_delta if config.rho_delta is not None else 0.0,
        )
        return truth, bot.GaussianLaw(np.zeros(config.p), cov)
    mean = bias_vector(truth_cov, config.bias_axis, config.bias_sign, config.bias_alpha)
    return truth, bot.GaussianLaw(mean, truth_cov)


@dataclass
class ExperimentReport:
    """Per-variant BOT series plus the provenance needed to regenerate them."""

    config: Any
    n_cases: int
    seed: int
    stream_index: int
    series: dict[str, BotSeries]


def run_experiment(
    config: ScenarioConfig,
    n_cases: int,
    seed: int,
    bins: int = 20,
    stream_index: int = CASE_DRAW_OFFSET,
) -> ExperimentReport:
    """Simulate n_cases independent forecast cases and evaluate all four variants.

    Each case draws one observation from the truth law and n fresh members
    from the forecast law; the theoretical transform is evaluated under the
    forecast law. Variates are consumed case-contiguously, so results do not
    depend on internal batching.
    """
    if n_cases < 1:
        raise DomainError(f"n_cases must be >= 1, got {n_cases}")
    truth, forecast = build_pair(config)
    p, n = config.p, config.n
    source = matstat.RngStream(seed, stream_index).source()
    values = {variant: np.empty(n_cases) for variant in bot.VARIANTS}
    batch_cap = max(1, _BATCH_ELEMENTS // ((n + 1) * p))
    pos = 0
    while pos < n_cases:
        count = min(batch_cap, n_cases - pos)
        z = source.normals((count, n + 1, p))
        obs = z[:, 0, :] @ truth.chol.lower.T + truth.mean
        members = z[:, 1:, :] @ forecast.chol.lower.T + forecast.mean
        stop = pos + count
        values["theoretical"][pos:stop] = bot.batch_theoretical(forecast, obs)
        for variant, u in bot.batch_sample(obs, members).items():
            values[variant][pos:stop] = u
        pos = stop
    series = {v: BotSeries.from_values(v, values[v], bins) for v in bot.VARIANTS}
    return ExperimentReport(
        config=config, n_cases=n_cases, seed=seed, stream_index=stream_index, series=series
    )


def _replication_pvalues(args) -> dict[str, float]:
    config, n_cases, seed, bins, stream_index = args
    report = run_experiment(config, n_cases, seed, bins, stream_index)
    return {variant: s.p_value for variant, s in report.series.items()}


def rejection_rate(
    config: ScenarioConfig,
    n_cases: int,
    n_reps: int,
    level: float,
    seed: int,
    bins: int = 20,
    jobs: int = 1,
    base_stream: int = 0,
) -> dict[str, float]:
    """Fraction of independent replications whose KS p-value falls below `level`."""
    if n_reps < 1:
        raise DomainError(f"n_reps must be >= 1, got {n_reps}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    tasks = [
        (config, n_cases, seed, bins, base_stream + r * STREAM_SPACING)
        for r in range(n_reps)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replication_pvalues, tasks, chunksize=1))
    else:
        results = [_replication_pvalues(t) for t in tasks]
    rates = {}
    for variant in bot.VARIANTS:
        rejected = sum(1 for r in results if r[variant] < level)
        rates[variant] = rejected / n_reps
    return rates


SWEEPABLE = ("sigma_f_sq", "rho_f")


@dataclass(frozen=True)
class SweepPoint:
    value: float
    rates: dict[str, float]


def power_curve(
    base_config: ScenarioConfig,
    sweep: str,
    grid,
    n_cases: int,
    n_reps: int,
    level: float,
    seed: int,
    bins: int = 20,
    jobs: int = 1,
) -> list[SweepPoint]:
    """Rejection rates along a grid of one forecast parameter.

    Grid points use disjoint replication streams, so every point is an
    independent study of the same size.
    """
    if sweep not in SWEEPABLE:
        raise DomainError(f"sweep parameter must be one of {SWEEPABLE}, got {sweep!r}")
    grid = [float(g) for g in grid]
    if not grid:
        raise DomainError("sweep grid must be nonempty")
    points = []
    for g, value in enumerate(grid):
        config = dataclasses.replace(base_config, **{sweep: value})
        rates = rejection_rate(
            config,
            n_cases,
            n_reps,
            level,
            seed,
            bins,
            jobs,
            base_stream=g * n_reps * STREAM_SPACING,
        )
        points.append(SweepPoint(value=value, rates=rates))
    return points
