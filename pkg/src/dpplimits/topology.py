"""Converter architectures: output resistance, loss multiplier, port count.

Output resistances are the per-port values for symmetric designs at equal
semiconductor (``g_sw``) and magnetic winding (``g_m``) conductance budgets:

    ===============  ===========================
    kind             R_out
    ===============  ===========================
    ac               8N/G_SW + 4N/G_M
    dc               32N/G_SW + 16N/G_M
    ladder-dab       (32N-32)/G_SW + (16N-16)/G_M
    ladder-bb        (8N-8)/G_SW + (4N-4)/G_M
    dab-n1           32/G_SW + 16/G_M
    ===============  ===========================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .loads import SystemDimensions

__all__ = [
    "Kind",
    "ArchitectureClass",
    "ResourceBudget",
    "TopologyModel",
    "get_topology",
    "output_resistance",
    "switching_port_count",
    "variance_coefficient",
    "kind_coefficient",
    "ALL_KINDS",
    "DPP_KINDS",
]


class Kind(str, Enum):
    AC_COUPLED = "ac"
    DC_COUPLED = "dc"
    LADDER_DAB = "ladder-dab"
    LADDER_BUCK_BOOST = "ladder-bb"
    BULK_DAB_N1 = "dab-n1"


class ArchitectureClass(str, Enum):
    FULLY_COUPLED = "fully-coupled"
    LADDER = "ladder"
    BULK = "bulk"


ALL_KINDS = tuple(Kind)
DPP_KINDS = ALL_KINDS[:4]

_CLASS = {
    Kind.AC_COUPLED: ArchitectureClass.FULLY_COUPLED,
    Kind.DC_COUPLED: ArchitectureClass.FULLY_COUPLED,
    Kind.LADDER_DAB: ArchitectureClass.LADDER,
    Kind.LADDER_BUCK_BOOST: ArchitectureClass.LADDER,
    Kind.BULK_DAB_N1: ArchitectureClass.BULK,
}

# R_out = (sw_slope*N + sw_offset)/G_SW + (m_slope*N + m_offset)/G_M
_RESISTANCE = {
    Kind.AC_COUPLED: (8, 0, 4, 0),
    Kind.DC_COUPLED: (32, 0, 16, 0),
    Kind.LADDER_DAB: (32, -32, 16, -16),
    Kind.LADDER_BUCK_BOOST: (8, -8, 4, -4),
    Kind.BULK_DAB_N1: (0, 32, 0, 16),
}

# Expected-loss coefficient of sigma^2 * M * R_out / V0^2, as a polynomial
# factor times (N-1) or (N-1)(N+1).
_LOSS_COEFFICIENT = {
    Kind.AC_COUPLED: Fraction(1),
    Kind.DC_COUPLED: Fraction(1),
    Kind.LADDER_DAB: Fraction(1, 6),
    Kind.LADDER_BUCK_BOOST: Fraction(2, 3),
}
_CLASS_BASE = {
    ArchitectureClass.FULLY_COUPLED: Kind.AC_COUPLED,
    ArchitectureClass.LADDER: Kind.LADDER_DAB,
}


@dataclass(frozen=True)
class ResourceBudget:
    g_sw: float = 1.0
    g_m: float = 1.0
    coss_fsw: float = 0.0

    def __post_init__(self):
        if not (self.g_sw > 0 and math.isfinite(self.g_sw)):
            raise ValueError(f"g_sw must be > 0, got {self.g_sw}")
        if not (self.g_m > 0 and math.isfinite(self.g_m)):
            raise ValueError(f"g_m must be > 0, got {self.g_m}")
        if not (self.coss_fsw >= 0 and math.isfinite(self.coss_fsw)):
            raise ValueError(f"coss_fsw must be >= 0, got {self.coss_fsw}")


@dataclass(frozen=True)
class TopologyModel:
    """A converter architecture.

    ``switching_ports`` overrides the default port count used for the
    switching-loss shunt; leave it None for the structural count.
    """

    kind: Kind
    switching_ports: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.switching_ports is not None and self.switching_ports < 0:
            raise ValueError("switching_ports must be >= 0")

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def architecture_class(self) -> ArchitectureClass:
        return _CLASS[self.kind]

    @property
    def is_dpp(self) -> bool:
        return self.architecture_class is not ArchitectureClass.BULK

    @property
    def loss_multiplier(self) -> Fraction:
        """Per-trial loss factor relative to the base row of the same class."""
        if not self.is_dpp:
            return Fraction(1)
        base = _CLASS_BASE[self.architecture_class]
        return _LOSS_COEFFICIENT[self.kind] / _LOSS_COEFFICIENT[base]


def get_topology(name) -> TopologyModel:
    """Look up a topology by its string name ("ac", "dc", ...) or Kind."""
    if isinstance(name, TopologyModel):
        return name
    try:
        return TopologyModel(Kind(name))
    except ValueError:
        names = ", ".join(k.value for k in Kind)
        raise ValueError(f"unknown topology {name!r}; expected one of {names}") from None


def resistance_exact(topo: TopologyModel, dims: SystemDimensions, budget: ResourceBudget) -> Fraction:
    sw_slope, sw_offset, m_slope, m_offset = _RESISTANCE[topo.kind]
    n = dims.n_domains
    return Fraction(sw_slope * n + sw_offset) / Fraction(budget.g_sw) + Fraction(
        m_slope * n + m_offset
    ) / Fraction(budget.g_m)


def output_resistance(topo: TopologyModel, dims: SystemDimensions, budget: ResourceBudget) -> float:
    """Per-port output resistance in ohms."""
    return float(resistance_exact(topo, dims, budget))


def resistance_slope(topo: TopologyModel, budget: ResourceBudget) -> Fraction:
    """dR_out/dN, the growth of the resistance per added domain."""
    sw_slope, _, m_slope, _ = _RESISTANCE[topo.kind]
    return Fraction(sw_slope) / Fraction(budget.g_sw) + Fraction(m_slope) / Fraction(budget.g_m)


def kind_coefficient(topo: TopologyModel) -> Fraction:
    """Leading rational factor of the kind's expected-loss row (1, 1, 1/6, 2/3)."""
    if not topo.is_dpp:
        raise ValueError("the bulk converter has no pure variance coefficient")
    return _LOSS_COEFFICIENT[topo.kind]


def variance_coefficient(topo: TopologyModel, n_domains: int) -> Fraction:
    """Expected-loss coefficient c(N) with E[loss] = M * c(N) * sigma^2 * R_out / V0^2.

    Not defined for the bulk converter, whose loss also depends on the mean.
    """
    n = n_domains
    cls = topo.architecture_class
    if cls is ArchitectureClass.FULLY_COUPLED:
        return _LOSS_COEFFICIENT[topo.kind] * (n - 1)
    if cls is ArchitectureClass.LADDER:
        return _LOSS_COEFFICIENT[topo.kind] * (n - 1) * (n + 1)
    raise ValueError("the bulk converter has no pure variance coefficient")


def switching_port_count(topo: TopologyModel, dims: SystemDimensions) -> int:
    if topo.switching_ports is not None:
        return topo.switching_ports
    n = dims.n_domains
    cls = topo.architecture_class
    if cls is ArchitectureClass.FULLY_COUPLED:
        return n
    if cls is ArchitectureClass.LADDER:
        return 2 * (n - 1)
    return 2
