"""Approximate floating-point transfers over silicon-photonic NoC links."""

from .exceptions import ConfigError, InputDataError, RoutingError, TraceError
from .fpapprox import ApproxMode, ApproxSpec, FloatWord, decompose, relative_truncation_bound, truncate_lsbs
from .laser import (
    LaserBudget,
    LsbMode,
    TransmitPlan,
    dbm_to_mw,
    decide_mode,
    mw_to_dbm,
    reduced_per_lambda_power,
    required_total_power,
)
from .photonics import LinkPath, LossParameters, LossTable, build_loss_table, clos_topology, path_loss, tuning_power
from .quality import percent_error, run_kernel, select_config, sensitivity_sweep
from .signaling import OOK, PAM4, SignalingScheme, effective_lambda_count, pam4_reduced_power, transmit_word
from .simcore import Packet, Policy, PolicyConfig, commanded_power, compare_policies, simulate_trace
from .workload import generate_trace
from .estimator import ApproximateLink, ApproximationTuner

__version__ = "0.1.0"
