"""Bell locality, EPR steerability and steering cost for two-input/two-output boxes."""
from .boxkit import (
    Box,
    all_local_det_boxes,
    all_pr_boxes,
    box_from_correlators,
    chsh_value,
    chsh_values,
    correlators,
    is_local,
    local_det_box,
    make_box,
    maximally_mixed_box,
    mix,
    pr_box,
)
from .errors import NumericalFailure, ValidationError
from .lp import conic_weight, local_weight, nonlocal_cost, solve
from .steering import (
    bb84_box,
    colored_bb84_box,
    extremal_steerable_box,
    is_steerable,
    lhv_lhs_search,
    steering_cost_lower_bound,
    steering_cost_numeric,
    steering_functional,
)

__version__ = "0.1.0"
