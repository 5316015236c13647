"""Age-optimal codeword lengths for highest-k selective encoding."""

from selective_aoi.age import (
    AgeReport,
    CodeMoments,
    CycleMoments,
    average_age,
    average_age_via_cycles,
    code_moments,
    cycle_moments,
    moments_of_M,
)
from selective_aoi.lambertw import lambert_w0
from selective_aoi.model import (
    ConditionalPmf,
    EncodingPolicy,
    SourcePmf,
    SystemParams,
    conditional_pmf,
    load_pmf,
    normalize_pmf,
    zipf_pmf,
)
from selective_aoi.optimizer import (
    CodeDesign,
    ConvergenceError,
    SolverState,
    lengths_for,
    p_theta,
    round_lengths,
    slack_kraft_branch,
    solve,
)
from selective_aoi.simulator import SimConfig, SimResult, ValidationReport, simulate, validate
from selective_aoi.sweep import SweepPoint, SweepResult, sweep_alpha, sweep_k

__all__ = [
    "AgeReport",
    "CodeDesign",
    "CodeMoments",
    "ConditionalPmf",
    "ConvergenceError",
    "CycleMoments",
    "EncodingPolicy",
    "SimConfig",
    "SimResult",
    "SolverState",
    "SourcePmf",
    "SweepPoint",
    "SweepResult",
    "SystemParams",
    "ValidationReport",
    "average_age",
    "average_age_via_cycles",
    "code_moments",
    "conditional_pmf",
    "cycle_moments",
    "lambert_w0",
    "lengths_for",
    "load_pmf",
    "moments_of_M",
    "normalize_pmf",
    "p_theta",
    "round_lengths",
    "simulate",
    "slack_kraft_branch",
    "solve",
    "sweep_alpha",
    "sweep_k",
    "validate",
    "zipf_pmf",
]
