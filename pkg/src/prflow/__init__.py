"""Periodic-orbit traces, zeta functions and Pollicott-Ruelle resonances for open hyperbolic flows."""
from .core import (
    ClosedOrbit,
    NonHyperbolicOrbitError,
    OrientabilityError,
    PrimitiveCycle,
    WeightParams,
    check_orientability,
    det_I_minus,
    expand_repetitions,
    orbit_weight,
    wedge_trace,
)
from .models import (
    ModelDescriptor,
    PoleError,
    ResonanceOracle,
    basic_example,
    cat_suspension,
    horseshoe_suspension,
    load_model,
    oracle_trace,
    resonance_oracle,
)
from .orbits import (
    OrbitCountTable,
    cat_fixed_points,
    count_orbits,
    group_into_cycles,
    lyndon_cycles,
    poincare_of_cycle,
)
from .traces import (
    TraceValue,
    continuation,
    continue_basic,
    continue_cat,
    continue_horseshoe,
    trace_sum,
    zeta_log_derivative,
    zeta_product,
)
from .resonances import ResonanceReport, locate_resonances, residue_at, verify_against_oracle
from .transport import (
    ConeCertificate,
    EscapeResult,
    certify_cones,
    check_convexity,
    escape_time,
    flow,
    pde_residual,
    resolvent_apply,
    trapped_set_approx,
)

__version__ = "0.1.0"
