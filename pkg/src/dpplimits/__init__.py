"""Performance limits of differential power processing (DPP) architectures.

Closed-form expected conduction losses for fully-coupled and ladder DPP
topologies and an N:1 dual-active-bridge baseline, checked against a seeded
Monte Carlo estimator over i.i.d. load arrays.
"""

from .analytic import (
    BASELINE,
    ExpectedLoss,
    ScalingFactor,
    asymptote_large_cv,
    asymptote_large_n,
    expected_loss,
    normalized_loss,
    scaling_factor,
)
from .errors import DegenerateBaseline, InfeasibleMoments, UnsupportedFormat
from .loads import Family, LoadArraySample, LoadDistribution, SystemDimensions, moment_parameters, sample_array
from .montecarlo import LossEstimate, estimate, estimate_normalized
from .sweep import Axis, SweepResult, SweepSpec, emit, run_sweep
from .topology import Kind, ResourceBudget, TopologyModel, get_topology, output_resistance, switching_port_count

__version__ = "0.1.0"
