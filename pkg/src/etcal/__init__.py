"""Calibrated early-stopping rules for sequential classifiers."""

__version__ = "0.1.0"

from .conditional import (  # noqa: E402
    ConditionalResult,
    accumulated_gap,
    calibrate_conditional,
    calibrate_split,
    screen_candidates,
    suffix_config,
    test_candidates,
)
from .config import CalibConfig  # noqa: E402
from .domain import (  # noqa: E402
    INF,
    SampleTrace,
    TraceError,
    TraceSet,
    early_loss,
    gap_loss,
    halt_time,
    halt_times,
    threshold_vector,
    validate_trace_set,
)
from .evaluation import RiskReport, evaluate_rule, guarantee_check  # noqa: E402
from .marginal import MarginalResult, calibrate_marginal, empirical_marginal_gap  # noqa: E402
from .stats import binom_cdf  # noqa: E402
from .synth import GenParams, MCReport, generate_traces, mc_validate  # noqa: E402
