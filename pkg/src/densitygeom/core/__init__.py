from .algebra import (
    DensityMatrix,
    HermitianMatrix,
    PureState,
    SqrtState,
    anticommutator,
    commutator,
    derivatives_unitary,
    hermitian_basis,
    hs_inner,
    hs_norm,
    principal_sqrt,
    unitary_evolve,
)
from .ensembles import (
    make_rng,
    random_density_hs,
    random_hermitian,
    random_pure,
    random_unitary,
)
