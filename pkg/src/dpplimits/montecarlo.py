"""Per-trial instantaneous losses and the seeded Monte Carlo estimator.

Trials are evaluated in fixed-size chunks whose boundaries depend only on the
array size, so the per-trial loss vector, and any reduction over it in trial
order, is identical for every worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import BASELINE, switching_loss
from .errors import DegenerateBaseline
from .loads import (
    LoadArraySample,
    LoadDistribution,
    SystemDimensions,
    domain_totals,
    sample_powers,
)
from .topology import ArchitectureClass, ResourceBudget, TopologyModel, output_resistance

__all__ = [
    "TrialLoss",
    "LossEstimate",
    "RatioEstimate",
    "DEFAULT_TRIALS",
    "differential_powers",
    "ladder_differential_powers",
    "trial_loss_fully_coupled",
    "trial_loss_ladder",
    "trial_loss_bulk",
    "trial_losses",
    "summarize",
    "estimate",
    "estimate_normalized",
    "ratio_from_losses",
]

DEFAULT_TRIALS = 10_000
Z95 = 1.96
# loads drawn per chunk; bounds memory at roughly 8 MB of float64
_CHUNK_LOADS = 1 << 20


@dataclass(frozen=True)
class TrialLoss:
    conduction_w: float
    differential_powers_w: np.ndarray


@dataclass(frozen=True)
class LossEstimate:
    mean_w: float
    std_error_w: float
    ci95_w: tuple[float, float]
    trials: int
    seed: int


@dataclass(frozen=True)
class RatioEstimate:
    """Monte Carlo normalized loss with a delta-method standard error."""

    ratio: float
    std_error: float
    ci95: tuple[float, float]
    trials: int
    seed: int


def differential_powers(totals: np.ndarray) -> np.ndarray:
    """P_bar - P_i along the last axis.

    Offsets are taken relative to the first domain, which leaves the result
    unchanged but makes equal totals give exact zeros.
    """
    d = totals - totals[..., :1]
    return d.mean(axis=-1, keepdims=True) - d


def ladder_differential_powers(totals: np.ndarray) -> np.ndarray:
    """i*P_bar - sum_{k<=i} P_k for i = 1..N-1 along the last axis."""
    n = totals.shape[-1]
    d = totals - totals[..., :1]
    i = np.arange(1, n, dtype=np.float64)
    return i * d.mean(axis=-1, keepdims=True) - np.cumsum(d[..., :-1], axis=-1)


def _per_volt2(topo, dims, budget, r_out):
    r = output_resistance(topo, dims, budget) if r_out is None else float(r_out)
    return r / (dims.v0 * dims.v0)


def _check_class(topo, expected):
    if topo.architecture_class is not expected:
        raise ValueError(f"{topo.name} is not a {expected.value} topology")


def trial_loss_fully_coupled(
    sample: LoadArraySample,
    dims: SystemDimensions,
    budget: ResourceBudget,
    topo: TopologyModel,
    r_out: float | None = None,
) -> TrialLoss:
    _check_class(topo, ArchitectureClass.FULLY_COUPLED)
    dp = differential_powers(np.asarray(sample.domain_totals, dtype=np.float64))
    return TrialLoss(_per_volt2(topo, dims, budget, r_out) * float(np.dot(dp, dp)), dp)


def trial_loss_ladder(
    sample: LoadArraySample,
    dims: SystemDimensions,
    budget: ResourceBudget,
    topo: TopologyModel,
    r_out: float | None = None,
) -> TrialLoss:
    _check_class(topo, ArchitectureClass.LADDER)
    dp = ladder_differential_powers(np.asarray(sample.domain_totals, dtype=np.float64))
    k = float(topo.loss_multiplier)
    return TrialLoss(k * _per_volt2(topo, dims, budget, r_out) * float(np.dot(dp, dp)), dp)


def trial_loss_bulk(
    sample: LoadArraySample,
    dims: SystemDimensions,
    budget: ResourceBudget,
    r_out: float | None = None,
) -> TrialLoss:
    totals = np.asarray(sample.domain_totals, dtype=np.float64)
    total = math.fsum(totals)
    # the bulk converter sees one lumped flow, not per-domain differences
    return TrialLoss(_per_volt2(BASELINE, dims, budget, r_out) * total * total, totals.copy())


def _batch_conduction(topo, totals, dims, budget):
    scale = _per_volt2(topo, dims, budget, None)
    cls = topo.architecture_class
    if cls is ArchitectureClass.FULLY_COUPLED:
        dp = differential_powers(totals)
        return scale * np.einsum("ij,ij->i", dp, dp)
    if cls is ArchitectureClass.LADDER:
        dp = ladder_differential_powers(totals)
        return float(topo.loss_multiplier) * scale * np.einsum("ij,ij->i", dp, dp)
    total = totals.sum(axis=-1)
    return scale * total * total


def _chunks(trials: int, dims: SystemDimensions):
    size = max(1, _CHUNK_LOADS // dims.loads)
    return [(start, min(size, trials - start)) for start in range(0, trials, size)]


def trial_losses(
    topologies,
    dims: SystemDimensions,
    dist: LoadDistribution,
    budget: ResourceBudget,
    trials: int,
    seed: int,
    workers: int = 1,
) -> dict[TopologyModel, np.ndarray]:
    """Per-trial conduction losses of several topologies on shared samples.

    Every topology sees the same load arrays, which correlates their noise.
    """
    topologies = list(dict.fromkeys(topologies))

    def run(chunk):
        start, count = chunk
        totals = domain_totals(sample_powers(dist, dims, seed, start, count))
        return [_batch_conduction(t, totals, dims, budget) for t in topologies]

    chunks = _chunks(trials, dims)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return {
        t: np.concatenate([p[i] for p in parts]) if parts else np.empty(0)
        for i, t in enumerate(topologies)
    }


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    resid = values - mean
    var = math.fsum(resid * resid) / (n - 1)
    return mean, math.sqrt(var / n)


def summarize(losses: np.ndarray, seed: int, offset_w: float = 0.0) -> LossEstimate:
    """Mean, standard error and 95% interval of per-trial losses plus a constant."""
    if len(losses) < 2:
        raise ValueError("need at least 2 trials")
    mean, se = _mean_and_se(np.asarray(losses, dtype=np.float64))
    mean += offset_w
    return LossEstimate(mean, se, (mean - Z95 * se, mean + Z95 * se), len(losses), seed)


def _check_trials(trials):
    if int(trials) != trials or trials < 2:
        raise ValueError(f"trials must be an integer >= 2, got {trials}")


def estimate(
    topo: TopologyModel,
    dims: SystemDimensions,
    dist: LoadDistribution,
    budget: ResourceBudget,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    workers: int = 1,
) -> LossEstimate:
    """Monte Carlo expected loss: sampled conduction plus deterministic switching."""
    _check_trials(trials)
    losses = trial_losses([topo], dims, dist, budget, trials, seed, workers)[topo]
    return summarize(losses, seed, switching_loss(topo, dims, budget))


def ratio_from_losses(
    num: np.ndarray, den: np.ndarray, seed: int, num_offset: float = 0.0, den_offset: float = 0.0
) -> RatioEstimate:
    """Ratio of means of paired per-trial losses, with delta-method error."""
    n = len(num)
    a = math.fsum(num) / n + num_offset
    b = math.fsum(den) / n + den_offset
    if b == 0:
        raise DegenerateBaseline("simulated baseline loss is zero")
    ratio = a / b
    resid = (num + num_offset) - ratio * (den + den_offset)
    resid = resid - math.fsum(resid) / n
    se = math.sqrt(math.fsum(resid * resid) / (n - 1) / n) / abs(b)
    return RatioEstimate(ratio, se, (ratio - Z95 * se, ratio + Z95 * se), n, seed)


def estimate_normalized(
    topo: TopologyModel,
    dims: SystemDimensions,
    dist: LoadDistribution,
    budget: ResourceBudget,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    include_switching: bool = False,
    workers: int = 1,
) -> RatioEstimate:
    """Simulated normalized loss of ``topo`` against the N:1 baseline on shared draws."""
    _check_trials(trials)
    losses = trial_losses([topo, BASELINE], dims, dist, budget, trials, seed, workers)
    offsets = (0.0, 0.0)
    if include_switching:
        offsets = (switching_loss(topo, dims, budget), switching_loss(BASELINE, dims, budget))
    return ratio_from_losses(losses[topo], losses[BASELINE], seed, *offsets)
