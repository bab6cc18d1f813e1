"""Normalized-loss sweeps over N, M or C_V, with paired analytic and simulated series."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np

from .analytic import BASELINE, normalized_loss, switching_loss
from .errors import UnsupportedFormat
from .loads import Family, LoadDistribution, SystemDimensions
from .montecarlo import DEFAULT_TRIALS, ratio_from_losses, trial_losses
from .topology import DPP_KINDS, ResourceBudget, TopologyModel, get_topology

__all__ = [
    "Axis",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "run_sweep",
    "emit",
    "parse_json",
    "default_values",
    "CSV_HEADER",
]

CSV_HEADER = ("axis", "value", "topology", "analytic", "simulated", "ci_low", "ci_high")


class Axis(str, Enum):
    DOMAINS_N = "n"
    LOADS_M = "m"
    COEFF_VAR = "cv"

    @property
    def integer_valued(self) -> bool:
        return self is not Axis.COEFF_VAR


def default_values(axis: Axis) -> tuple:
    axis = Axis(axis)
    if axis is Axis.DOMAINS_N:
        return tuple(range(2, 17))
    if axis is Axis.LOADS_M:
        return tuple(range(1, 17))
    return tuple(round(0.1 * k, 10) for k in range(1, 21))


@dataclass(frozen=True)
class SweepSpec:
    """One sweep.  The swept field of ``dims``/``dist`` is overwritten per point.

    For a C_V sweep ``dist.mu`` is held and ``sigma = cv * mu``.
    """

    axis: Axis
    values: tuple
    dims: SystemDimensions = field(default_factory=lambda: SystemDimensions(8, 4))
    dist: LoadDistribution = field(default_factory=lambda: LoadDistribution(Family.UNIFORM, 1.0, 0.5))
    budget: ResourceBudget = field(default_factory=ResourceBudget)
    topologies: tuple = tuple(TopologyModel(k) for k in DPP_KINDS)
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    include_switching: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "topologies", tuple(get_topology(t) for t in self.topologies))
        values = tuple(self.values)
        if not values:
            raise ValueError("sweep values must be nonempty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.axis.integer_valued:
            if any(int(v) != v or v < 1 for v in values):
                raise ValueError(f"{self.axis.value} sweep values must be positive integers")
            values = tuple(int(v) for v in values)
        else:
            if any(v < 0 or not math.isfinite(v) for v in values):
                raise ValueError("C_V sweep values must be finite and >= 0")
            if self.dist.mu <= 0:
                raise ValueError("a C_V sweep needs mu > 0")
            values = tuple(float(v) for v in values)
        object.__setattr__(self, "values", values)
        if not self.topologies:
            raise ValueError("at least one topology is required")
        if self.trials < 2:
            raise ValueError("trials must be >= 2")

    def point(self, value) -> tuple[SystemDimensions, LoadDistribution]:
        if self.axis is Axis.DOMAINS_N:
            return replace(self.dims, n_domains=value), self.dist
        if self.axis is Axis.LOADS_M:
            return replace(self.dims, m_loads=value), self.dist
        return self.dims, replace(self.dist, sigma=value * self.dist.mu)


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    topology: str
    analytic_normalized: float
    simulated_normalized: float
    sim_ci95: tuple[float, float]


@dataclass(frozen=True)
class SweepResult:
    axis: Axis
    rows: tuple[SweepRow, ...]

    def series(self, topology: str) -> list[SweepRow]:
        return [r for r in self.rows if r.topology == topology]


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every (point, topology) pair.

    The analytic column is always the conduction-only closed form.  With
    ``include_switching`` the simulated column adds the constant shunt loss to
    both the DPP topology and the baseline.
    """
    rows = []
    for value in spec.values:
        dims, dist = spec.point(value)
        losses = trial_losses(
            [*spec.topologies, BASELINE], dims, dist, spec.budget, spec.trials, spec.seed, workers
        )
        base_offset = switching_loss(BASELINE, dims, spec.budget) if spec.include_switching else 0.0
        for topo in spec.topologies:
            offset = switching_loss(topo, dims, spec.budget) if spec.include_switching else 0.0
            sim = ratio_from_losses(losses[topo], losses[BASELINE], spec.seed, offset, base_offset)
            rows.append(
                SweepRow(
                    value,
                    topo.name,
                    normalized_loss(topo, dims, dist, spec.budget),
                    sim.ratio,
                    sim.ci95,
                )
            )
    return SweepResult(spec.axis, tuple(rows))


def _csv(result):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in result.rows:
        writer.writerow(
            [
                result.axis.value,
                repr(r.axis_value),
                r.topology,
                repr(r.analytic_normalized),
                repr(r.simulated_normalized),
                repr(r.sim_ci95[0]),
                repr(r.sim_ci95[1]),
            ]
        )
    return buf.getvalue().encode()


def _json(result):
    payload = {"axis": result.axis.value, "rows": [asdict(r) for r in result.rows]}
    return (json.dumps(payload, indent=2) + "\n").encode()


def parse_json(data: bytes | str) -> SweepResult:
    payload = json.loads(data)
    rows = tuple(
        SweepRow(
            r["axis_value"],
            r["topology"],
            r["analytic_normalized"],
            r["simulated_normalized"],
            tuple(r["sim_ci95"]),
        )
        for r in payload["rows"]
    )
    return SweepResult(Axis(payload["axis"]), rows)


_AXIS_LABEL = {
    Axis.DOMAINS_N: "series-stacked domains N",
    Axis.LOADS_M: "parallel loads per domain M",
    Axis.COEFF_VAR: "coefficient of variance C_V",
}


def _svg(result):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": "dpplimits", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        names = list(dict.fromkeys(r.topology for r in result.rows))
        for i, name in enumerate(names):
            rows = result.series(name)
            x = np.array([r.axis_value for r in rows], dtype=float)
            color = f"C{i}"
            ax.plot(x, [r.analytic_normalized for r in rows], "--", color=color, label=f"{name} calculated")
            ax.plot(x, [r.simulated_normalized for r in rows], "s", color=color, ms=4, label=f"{name} simulated")
        ax.set_yscale("log", nonpositive="mask")
        ax.set_xlabel(_AXIS_LABEL[result.axis])
        ax.set_ylabel("normalized loss")
        ax.legend(fontsize=7)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


_EMITTERS = {"csv": _csv, "json": _json, "svg": _svg}


def emit(result: SweepResult, fmt: str = "csv") -> bytes:
    if not result.rows:
        raise ValueError("cannot emit an empty sweep result")
    try:
        emitter = _EMITTERS[str(fmt).lower()]
    except KeyError:
        raise UnsupportedFormat(f"unsupported format {fmt!r}; use csv, json or svg") from None
    return emitter(result)
