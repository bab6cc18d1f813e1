"""Stochastic load units and reproducible sampling of load arrays.

Each load unit is drawn by inverse-CDF from exactly one uniform variate, and
the uniforms come from a Philox counter stream in which trial ``t`` owns a
fixed block of counters.  A trial's draws therefore depend only on
``(seed, t)``, never on how trials are batched or which worker computes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import InfeasibleMoments

__all__ = [
    "Family",
    "LoadDistribution",
    "SystemDimensions",
    "LoadArraySample",
    "ConstantParams",
    "UniformParams",
    "TwoPointParams",
    "LogNormalParams",
    "TruncatedNormalParams",
    "moment_parameters",
    "sample_array",
    "sample_powers",
    "domain_totals",
    "EXACT_FAMILIES",
]

SQRT3 = math.sqrt(3.0)
# above this many loads per array, row sums switch to math.fsum
COMPENSATED_THRESHOLD = 10_000


class Family(str, Enum):
    UNIFORM = "uniform"
    TWO_POINT = "two-point"
    LOGNORMAL = "lognormal"
    TRUNCATED_NORMAL = "truncated-normal"


EXACT_FAMILIES = (Family.UNIFORM, Family.TWO_POINT, Family.LOGNORMAL)


@dataclass(frozen=True)
class LoadDistribution:
    """i.i.d. load unit with target mean ``mu`` and deviation ``sigma`` (watts)."""

    family: Family
    mu: float
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.mu >= 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be finite and >= 0, got {self.mu}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")

    @classmethod
    def from_cv(cls, family, mu: float, cv: float) -> "LoadDistribution":
        if mu <= 0:
            raise ValueError("a coefficient of variance needs mu > 0")
        return cls(family, mu, cv * mu)

    @property
    def variance(self) -> float:
        return self.sigma * self.sigma

    def coefficient_of_variance(self) -> float:
        if self.mu <= 0:
            raise ZeroDivisionError("coefficient of variance undefined for mu = 0")
        return self.sigma / self.mu


@dataclass(frozen=True)
class SystemDimensions:
    """N series-stacked domains of M parallel loads at ``v0`` volts each."""

    n_domains: int
    m_loads: int
    v0: float = 1.0

    def __post_init__(self):
        for name in ("n_domains", "m_loads"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
            object.__setattr__(self, name, int(value))
        if not (self.v0 > 0 and math.isfinite(self.v0)):
            raise ValueError(f"v0 must be > 0, got {self.v0}")

    @property
    def loads(self) -> int:
        return self.n_domains * self.m_loads


# Family parameter records.  Each maps a uniform variate in (0, 1) to a draw.


@dataclass(frozen=True)
class ConstantParams:
    value: float

    def quantile(self, u):
        return np.full(np.shape(u), self.value, dtype=np.float64)


@dataclass(frozen=True)
class UniformParams:
    low: float
    high: float

    def quantile(self, u):
        return self.low + (self.high - self.low) * u


@dataclass(frozen=True)
class TwoPointParams:
    low: float
    high: float

    def quantile(self, u):
        return np.where(u < 0.5, self.low, self.high)


@dataclass(frozen=True)
class LogNormalParams:
    log_mean: float
    log_sigma: float

    def quantile(self, u):
        return np.exp(self.log_mean + self.log_sigma * special.ndtri(u))


@dataclass(frozen=True)
class TruncatedNormalParams:
    """Normal(loc, scale) parent truncated to ``[lower, inf)``.

    The truncation shifts both moments away from ``(loc, scale**2)``;
    ``moment_biased`` is always True and :meth:`moments` gives the true values.
    """

    loc: float
    scale: float
    lower: float = 0.0
    moment_biased: bool = True

    def quantile(self, u):
        p0 = special.ndtr((self.lower - self.loc) / self.scale)
        x = self.loc + self.scale * special.ndtri(p0 + (1.0 - p0) * u)
        return np.maximum(x, self.lower)

    def moments(self) -> tuple[float, float]:
        from scipy.stats import truncnorm

        a = (self.lower - self.loc) / self.scale
        mean, var = truncnorm.stats(a, np.inf, loc=self.loc, scale=self.scale, moments="mv")
        return float(mean), float(var)


def moment_parameters(dist: LoadDistribution):
    """Return the family parameters whose moments are ``(mu, sigma**2)``.

    Raises InfeasibleMoments when the family would need negative support.
    """
    mu, sigma = dist.mu, dist.sigma
    if sigma == 0:
        return ConstantParams(mu)
    if dist.family is Family.UNIFORM:
        half_width = SQRT3 * sigma
        if mu < half_width:
            raise InfeasibleMoments(
                f"uniform loads need mu >= sqrt(3)*sigma ({mu} < {half_width})"
            )
        # max() absorbs rounding at the mu == sqrt(3)*sigma boundary
        return UniformParams(max(mu - half_width, 0.0), mu + half_width)
    if dist.family is Family.TWO_POINT:
        if mu < sigma:
            raise InfeasibleMoments(f"two-point loads need mu >= sigma ({mu} < {sigma})")
        return TwoPointParams(mu - sigma, mu + sigma)
    if dist.family is Family.LOGNORMAL:
        if mu <= 0:
            raise InfeasibleMoments("lognormal loads need mu > 0 when sigma > 0")
        s2 = math.log1p((sigma / mu) ** 2)
        return LogNormalParams(math.log(mu) - 0.5 * s2, math.sqrt(s2))
    return TruncatedNormalParams(mu, sigma)


@dataclass(frozen=True)
class LoadArraySample:
    powers: np.ndarray  # (N, M)
    domain_totals: np.ndarray  # (N,)
    grand_mean: float


@lru_cache(maxsize=256)
def _philox_key(seed: int) -> tuple[int, int]:
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    state = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def _uniforms(seed: int, start: int, count: int, per_trial: int) -> np.ndarray:
    # Philox emits 4 words per counter step; trial t owns steps [t*B, (t+1)*B)
    block = -(-per_trial // 4)
    bitgen = np.random.Philox(
        key=np.array(_philox_key(seed), dtype=np.uint64), counter=start * block
    )
    raw = bitgen.random_raw(count * block * 4).reshape(count, block * 4)[:, :per_trial]
    # 53-bit midpoint grid: strictly inside (0, 1), so ndtri stays finite
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def sample_powers(
    dist: LoadDistribution, dims: SystemDimensions, seed: int, start: int, count: int
) -> np.ndarray:
    """Draw trials ``start .. start+count-1`` as an array of shape (count, N, M)."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    params = moment_parameters(dist)
    u = _uniforms(seed, start, count, dims.loads)
    return params.quantile(u).reshape(count, dims.n_domains, dims.m_loads)


def domain_totals(powers: np.ndarray) -> np.ndarray:
    """Row sums over the last axis; compensated for very large arrays."""
    n, m = powers.shape[-2:]
    if n * m > COMPENSATED_THRESHOLD:
        return np.apply_along_axis(math.fsum, -1, powers)
    return powers.sum(axis=-1)


def sample_array(
    dist: LoadDistribution, dims: SystemDimensions, seed: int, trial_index: int
) -> LoadArraySample:
    powers = sample_powers(dist, dims, seed, trial_index, 1)[0]
    totals = domain_totals(powers)
    return LoadArraySample(powers, totals, math.fsum(totals) / dims.n_domains)
