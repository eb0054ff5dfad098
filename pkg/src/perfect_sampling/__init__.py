"""Perfect sampling for finite Markov chains: Fill's rejection sampler, CFTP, exact oracles."""

__version__ = "0.1.0"

from .chain import (
    DiscreteKernel,
    ReversedKernel,
    StateSpace,
    reverse_kernel,
    solve_stationary,
    step_backward,
    validate_kernel,
)
from .rules import (
    TransitionRule,
    is_monotone,
    make_independent_transitions_rule,
    make_inverse_cdf_rule,
    make_table_rule,
)
from .coalescence import full_tracking_process, monotone_bounding_process, run_detection
from .fill import FillConfig, RunRecord, acceptance_curve, fill_attempt, fill_sample
from .cftp import cftp_sample, connection_diagnostic, fill_infinite_window
from .oracle import exact_fill_report, exact_forward_coalescence, exact_joint_T_W, pi_average_check
from .models import mtf_process, random_walk_chain, toy_chain
