from .bounds import BoundReport, bound_report, second_moments
from .curve import DirectionSet, acceleration_curvature, bhattacharyya_directions
from .estimator import (
    EstimatorT,
    gradient_t,
    make_locally_unbiased,
    perturb_estimator,
    time_estimate,
)
from .higher_order import HigherOrderReport, higher_order_bound, odd_term_spread, time_estimate_gradient_fd
from .skew import (
    SkewMoments,
    quantum_skew_moments,
    skew_information,
    skew_moment_decomposition,
    skew_second,
    variance,
    velocity_sq,
)
