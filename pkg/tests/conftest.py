"""Session-scoped fixtures.

The depth-2 measure build and the exact pair evaluator are the two
expensive objects in the suite; they are built once here and shared
between the unit tests and the acceptance gate.
"""

import numpy as np
import pytest

from exactorder.analysis import pair_evaluator
from exactorder.bump import widths_schedule
from exactorder.diophantine import ThetaSpec
from exactorder.layer import ScaleLayer
from exactorder.params import ApproxFunction, derive_exponents
from exactorder.spectral import ScaleSchedule, product_measure


@pytest.fixture(scope="session")
def exponents():
    """The canonical parameter set: gamma=1, tau=3, epsilon=0.02."""
    return derive_exponents(1.0, 3.0, 3.0, 0.02)


@pytest.fixture(scope="session")
def bump64():
    return widths_schedule(64, 0.27)


@pytest.fixture(scope="session")
def schedule(exponents):
    return ScaleSchedule(M1=16, beta_eps=exponents.beta_eps, depth=2,
                         delta=exponents.delta)


@pytest.fixture(scope="session")
def layers(schedule, bump64):
    psi = ApproxFunction(tau=3.0)
    return [ScaleLayer(M=int(M), epsilon=0.02, psi1=psi, psi2=psi,
                       theta=ThetaSpec.zero(), bump=bump64)
            for M in schedule.scales]


@pytest.fixture(scope="session")
def measure_levels(schedule, layers):
    """mu_hat^(1), mu_hat^(2) with dense window 10^4 at tol 1e-7 (~6 s)."""
    return product_measure(schedule, layers, W=10_000, tol=1e-7)


@pytest.fixture(scope="session")
def mu2(measure_levels):
    return measure_levels[-1]


@pytest.fixture(scope="session")
def exact_eval(layers):
    """Certified evaluator for mu_hat^(2) at frequencies beyond the window."""
    return pair_evaluator(layers[1], layers[0])


@pytest.fixture(scope="session")
def normality_cache():
    # the m = 1, 2, 3 frequency sets overlap heavily; share the value cache
    return {}


@pytest.fixture(scope="session")
def toy_layer(bump64):
    psi = ApproxFunction(tau=2.2)
    return ScaleLayer(M=10, epsilon=0.05, psi1=psi, psi2=psi,
                      theta=ThetaSpec.zero(), bump=bump64)
