from .calibration import (
    DualCalibration,
    KappaCalibration,
    calibrate_dual_constant,
    calibrate_kappa,
    default_dual_constant,
)
from .families import (
    BUILTIN_FAMILIES,
    DerivativeMode,
    ParamFamily,
    conjugate,
    constant_family,
    qubit_mixed_family,
    qubit_pure_family,
    reparameterize,
    unitary_curve_family,
)
from .metric import fisher_rao_analytic, gram_matrix
from .montecarlo import (
    MetricEstimate,
    density_on_pure,
    dual_expectation,
    fisher_rao_mc,
    gibbons_expectation,
    moment_oracle_mc,
)
