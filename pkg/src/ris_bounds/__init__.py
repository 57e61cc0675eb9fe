"""Sum-rate bounds and alternating optimization for RIS-aided multi-user uplink.

The RIS-BS channel is rank-1 under line of sight, which lets the uplink
sum-rate be written as ``log2|Q| + log2(1 + w^H Q^{-1} w)`` with only ``w``
depending on the RIS phases. The optimizers in :mod:`ris_bounds.optim` work on
that scalar quadratic form.
"""

from .channel import ChannelSet, assemble_global, synth_channels
from .config import PURE_LOS, ScenarioConfig, dump_config, load_config, parse_config
from .errors import BoundViolation, ConvergenceError, DomainError, ValidationError
from .harness import ExperimentRecord, calibrate_reference_power, emit_csv, run_experiment
from .optim import (
    ao_optimize,
    lower_bound_phases,
    numerical_baseline,
    quantize_phases,
    random_phases,
    relaxed_solution,
    upper_bound,
)
from .separation import SeparatedChannel, separate, sum_rate_direct, sum_rate_separated

__all__ = [
    "BoundViolation", "ChannelSet", "ConvergenceError", "DomainError", "ExperimentRecord",
    "PURE_LOS", "ScenarioConfig", "SeparatedChannel", "ValidationError", "ao_optimize",
    "assemble_global", "calibrate_reference_power", "dump_config", "emit_csv", "load_config",
    "lower_bound_phases", "numerical_baseline", "parse_config", "quantize_phases",
    "random_phases", "relaxed_solution", "run_experiment", "separate", "sum_rate_direct",
    "sum_rate_separated", "synth_channels", "upper_bound",
]
