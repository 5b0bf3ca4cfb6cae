"""Finite-alphabet toolkit for coordinating a source, a channel state and a
channel output under lossless decoding."""
from .constraints import (
    ACHIEVABLE,
    BOUNDARY,
    NOT_ACHIEVABLE,
    ConstraintResult,
    OptimizerConfig,
    constraint_value,
    correlation_gain_check,
    independent_case_value,
    lossless_best,
    maximize_over_aux,
    min_leakage,
    side_info_constraint,
    state_amplification_value,
)
from .models import (
    ChannelLaw,
    InputPolicy,
    ModelError,
    SourceStateModel,
    TargetDistribution,
    assemble_target,
    make_fig3_channel,
    make_fig3_input_policy,
    make_fig4_source,
)
from .objectives import NoFeasiblePolicy, max_objective, min_distortion, sample_feasible_policies
from .pmf import (
    ConditionalKernel,
    FiniteAlphabet,
    JointPMF,
    chain_compose,
    conditional_mutual_information,
    entropy,
    mutual_information,
)

__version__ = "0.1.0"
