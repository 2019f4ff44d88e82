"""Subordinate jump processes built from diffusions with general scale functions."""

from .effective_scale import (
    CorollaryCheck,
    EffectiveScale,
    certify_effective_bounds,
    effective_scale_eval,
    verify_corollary_inequalities,
)
from .errors import CriterionDivergent, JumpKernelDivergence, ScaleBoundViolation
from .heat_kernel import (
    HeatKernelModel,
    VolumeModel,
    gaussian_kernel,
    hke_lower_near,
    hke_upper,
    model_kernel,
    phi_sup,
)
from .mc_lab import (
    ExitTimeEstimate,
    TailTable,
    WalkGraph,
    build_graph,
    exit_time_diffusion,
    exit_time_subordinated,
    fit_exponent,
    jump_tail_stats,
)
from .piecewise import PiecewisePower
from .scale_fn import (
    ScaleBounds,
    ScaleFunction,
    certify_scale_bounds,
    compose_inverse,
    composition,
    empirical_scale_bounds,
    eval_scale,
    inverse,
)
from .subordination import (
    DIVERGENT,
    ComparabilityReport,
    LevyMeasure,
    SamplerConfig,
    SubordinatorSampler,
    build_levy_measure,
    criterion_equivalent,
    criterion_integral,
    exponent_rule,
    jump_kernel,
    jump_kernel_detail,
    laplace_exponent,
    sample_increment,
    sufficient_condition,
    truncated_laplace_exponent,
    truncation_stats,
    verify_jump_comparability,
)

__version__ = "0.1.0"
