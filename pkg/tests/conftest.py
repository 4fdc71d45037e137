import math

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from holling_tanner.kinetics import ModelParams, SystemParams, linear_coefficients

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")

# invariant suites run at least this many samples
N_SAMPLES = 1000

REF = SystemParams(a=0.6018, b=0.0077, d1=0.4, d2=19.37)
TRIPLE = SystemParams(a=1.472554, b=0.045949, d1=0.417243, d2=4.697383)
L_TRIPLE = 3.022593


@pytest.fixture
def reference():
    return REF


@pytest.fixture
def triple():
    return TRIPLE


def _pos(lo, hi):
    return st.floats(min_value=lo, max_value=hi, allow_nan=False, allow_infinity=False)


systems = st.builds(SystemParams, a=_pos(0.02, 8.0), b=_pos(1e-3, 0.98), d1=_pos(0.01, 30.0), d2=_pos(0.01, 30.0))


def _unstable_kinetics(s: SystemParams) -> bool:
    return linear_coefficients(s)[0] > 1e-3


# systems with A0 > 0 (the only case with bifurcations)
active_systems = st.builds(
    SystemParams, a=_pos(0.3, 8.0), b=_pos(1e-3, 0.5), d1=_pos(0.01, 5.0), d2=_pos(0.01, 40.0)
).filter(_unstable_kinetics)

# A0 > 0 and d1 < d2, where Turing instability is possible
turing_systems = active_systems.filter(lambda s: s.d2 > 1.5 * s.d1)

lengths = _pos(0.2, 12.0)
rates = _pos(0.01, 3.0)

model_params = st.builds(
    lambda s, r, l: ModelParams.from_system(s, r, l), systems, rates, lengths
)


def frac_dist(y: float) -> float:
    """Distance of y from the nearest integer."""
    return abs(y - round(y))


__all__ = ["N_SAMPLES", "REF", "TRIPLE", "L_TRIPLE", "systems", "active_systems", "turing_systems",
           "lengths", "rates", "model_params", "frac_dist", "math"]
