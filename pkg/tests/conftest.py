import logging

import numpy as np
import pytest
from hypothesis import strategies as st

from densitygeom.core.algebra import principal_sqrt
from densitygeom.core.ensembles import random_density_hs, random_hermitian

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

# Канонический чистый пример: ξ = (I + σx)/2, H = σz
XI_PLUS = (I2 + SIGMA_X) / 2
RHO_34 = np.diag([0.75, 0.25]).astype(complex)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
dims = st.sampled_from([2, 3, 4])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(dim: int, seed: int):
    """Полноранговый ξ = √ρ (ρ по мере Гильберта-Шмидта) и случайный H."""
    gen = np.random.default_rng(seed)
    rho = random_density_hs(dim, gen)
    return principal_sqrt(rho), random_hermitian(dim, gen)


@pytest.fixture(autouse=True)
def _loggers_propagate():
    # caplog видит записи пакета и аудита и после dictConfig с propagate: no
    loggers = [logging.getLogger(name) for name in ("DensityGeom", "DensityGeomAudit")]
    saved = [(lg.propagate, lg.level) for lg in loggers]
    for lg in loggers:
        lg.propagate = True
        lg.setLevel(logging.INFO)
    yield
    for lg, (propagate, level) in zip(loggers, saved):
        lg.propagate = propagate
        lg.setLevel(level)
