"""Closed-form expected losses, scaling factors and normalized loss.

Coefficients are carried as :class:`fractions.Fraction` up to the final
conversion so that ratio identities between topologies hold exactly in
floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import DegenerateBaseline
from .loads import LoadDistribution, SystemDimensions
from .topology import (
    ArchitectureClass,
    Kind,
    ResourceBudget,
    TopologyModel,
    kind_coefficient,
    resistance_exact,
    resistance_slope,
    switching_port_count,
    variance_coefficient,
)

__all__ = [
    "ExpectedLoss",
    "Moment",
    "ScalingFactor",
    "BASELINE",
    "expected_loss",
    "scaling_factor",
    "normalized_loss",
    "asymptote_large_n",
    "asymptote_large_cv",
    "switching_loss",
]

BASELINE = TopologyModel(Kind.BULK_DAB_N1)


@dataclass(frozen=True)
class ExpectedLoss:
    conduction_w: float
    switching_w: float
    total_w: float

    @classmethod
    def of(cls, conduction_w: float, switching_w: float) -> "ExpectedLoss":
        return cls(conduction_w, switching_w, conduction_w + switching_w)


class Moment(str, Enum):
    VARIANCE = "variance"
    MEAN_SQUARED = "mean-squared"
    MIXED = "mixed"


@dataclass(frozen=True)
class ScalingFactor:
    m_exponent: int
    n_exponent: int
    moment: Moment

    def label(self) -> str:
        def power(sym, k):
            return sym if k == 1 else f"{sym}{'²' if k == 2 else k}"

        moment = {Moment.VARIANCE: "σ²", Moment.MEAN_SQUARED: "μ²"}.get(self.moment, "(σ²+μ²)")
        return f"S({power('M', self.m_exponent)}·{power('N', self.n_exponent)}·{moment})"


_SCALING = {
    ArchitectureClass.FULLY_COUPLED: ScalingFactor(1, 1, Moment.VARIANCE),
    ArchitectureClass.LADDER: ScalingFactor(1, 2, Moment.VARIANCE),
    ArchitectureClass.BULK: ScalingFactor(2, 2, Moment.MEAN_SQUARED),
}


def scaling_factor(topo: TopologyModel) -> ScalingFactor:
    return _SCALING[topo.architecture_class]


def _conduction_exact(topo, dims, dist, r_out: Fraction) -> Fraction:
    m, n = dims.m_loads, dims.n_domains
    var = Fraction(dist.sigma) ** 2
    per_volt2 = r_out / Fraction(dims.v0) ** 2
    if topo.is_dpp:
        return m * variance_coefficient(topo, n) * var * per_volt2
    mean2 = Fraction(dist.mu) ** 2
    return (m * n * var + m * m * n * n * mean2) * per_volt2


def switching_loss(topo: TopologyModel, dims: SystemDimensions, budget: ResourceBudget) -> float:
    """Constant shunt dissipation: ports * V0^2 * Coss*fsw."""
    return float(switching_port_count(topo, dims) * Fraction(dims.v0) ** 2 * Fraction(budget.coss_fsw))


def expected_loss(
    topo: TopologyModel,
    dims: SystemDimensions,
    dist: LoadDistribution,
    budget: ResourceBudget,
    r_out: float | None = None,
) -> ExpectedLoss:
    """Expected loss of ``topo`` over i.i.d. loads.

    Depends on ``dist`` only through ``mu`` and ``sigma``.  Passing ``r_out``
    replaces the tabulated output resistance (useful for unit checks).
    """
    r = resistance_exact(topo, dims, budget) if r_out is None else Fraction(r_out)
    conduction = float(_conduction_exact(topo, dims, dist, r))
    return ExpectedLoss.of(conduction, switching_loss(topo, dims, budget))


def normalized_loss(
    topo: TopologyModel,
    dims: SystemDimensions,
    dist: LoadDistribution,
    budget: ResourceBudget,
    include_switching: bool = False,
) -> float:
    """Expected loss of ``topo`` divided by the N:1 DAB converter's.

    Conduction-only by default; ``include_switching`` adds the shunt loss to
    numerator and denominator.
    """
    if include_switching:
        num = expected_loss(topo, dims, dist, budget).total_w
        den = expected_loss(BASELINE, dims, dist, budget).total_w
        if den == 0:
            raise DegenerateBaseline("N:1 baseline loss is zero")
        return num / den
    num = _conduction_exact(topo, dims, dist, resistance_exact(topo, dims, budget))
    den = _conduction_exact(BASELINE, dims, dist, resistance_exact(BASELINE, dims, budget))
    if den == 0:
        raise DegenerateBaseline("N:1 baseline loss is zero (mu = sigma = 0)")
    return float(num / den)


def asymptote_large_n(
    topo: TopologyModel, m_loads: int, dist: LoadDistribution, budget: ResourceBudget
) -> float:
    """Limit of the conduction normalized loss as N grows at fixed M.

    Returns ``math.inf`` for ladder topologies with nonzero load variance.
    """
    if dist.mu <= 0:
        raise ValueError("large-N asymptote requires mu > 0")
    cls = topo.architecture_class
    if cls is ArchitectureClass.BULK:
        return 1.0
    if dist.sigma == 0:
        return 0.0
    if cls is ArchitectureClass.LADDER:
        return math.inf
    # M(N-1)sigma^2 * k*N  /  (M^2 N^2 mu^2 * R_dab)  ->  sigma^2 k / (M mu^2 R_dab)
    ratio = Fraction(dist.sigma) ** 2 / Fraction(dist.mu) ** 2
    r_dab = resistance_exact(BASELINE, SystemDimensions(1, m_loads), budget)
    return float(kind_coefficient(topo) * ratio * resistance_slope(topo, budget) / (m_loads * r_dab))


def asymptote_large_cv(topo: TopologyModel, dims: SystemDimensions, budget: ResourceBudget) -> float:
    """Limit of the conduction normalized loss as C_V grows at fixed (M, N)."""
    if not topo.is_dpp:
        return 1.0
    n = dims.n_domains
    r_topo = resistance_exact(topo, dims, budget)
    r_dab = resistance_exact(BASELINE, dims, budget)
    return float(variance_coefficient(topo, n) * r_topo / (n * r_dab))
