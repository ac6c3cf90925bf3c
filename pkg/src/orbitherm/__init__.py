"""orbitherm: ergodic optimization and zero-temperature limits for geodesic
flows on Schottky surfaces, computed from periodic orbits."""
from ._accel import HAVE_NUMBA, backend, set_threads
from .geometry import HPoint, Isometry, TangentVector, bundle_dist, flip, geodesic_flow_step, hyp_dist
from .groups import (
    CyclicGroup,
    SchottkyGroup,
    check_ping_pong,
    critical_exponent_estimate,
    enumerate_reduced_words,
    hyperbolic_from_axis,
    nested_subgroup,
    reduce_to_fundamental_domain,
)
from .potentials import Bump, ClosedOrbit, Constant, Flipped, SubgroupCore, Tail, Union, WeightedSum
from .thermo import PeriodicOrbitTable, Region, equilibrium_stats, flow_pressure, gibbs_average
from .ergopt import beta_lower, gap_test, tilted_beta_curve

__version__ = "0.1.0"
