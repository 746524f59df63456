"""Random intermittent interval maps: transfer operators, invariant
densities, skew products, and stochastic stability experiments."""

__version__ = "0.1.0"

from .density import (
    ConeParams,
    GridFunction,
    cone_check,
    l1_distance,
    min_growth_constant,
    pointwise_bound_suite,
    random_cone_density,
)
from .maps import (
    AffineBranch,
    LsvBranch,
    MapSpec,
    TabulatedBranch,
    affine_right,
    derivative,
    eval_map,
    invert_branch,
    lsv_left,
    lsv_map,
    verify_map_class,
)
from .orbits import OrbitRecord, birkhoff_average, empirical_density, simulate
from .presets import example4, t1_only
from .randomsys import (
    ProbabilityField,
    RandomMapSystem,
    check_condition_A,
    check_condition_B,
    check_conditions,
    constant_component,
    power_affine_component,
    transition_kernel,
)
from .skew import SkewState, horizontal_lyapunov, marginal_consistency, skew_orbit, skew_step
from .stability import (
    EpsilonFamily,
    StabilityPoint,
    make_perturbed_system,
    operator_defect,
    stability_sweep,
)
from .transfer import (
    TransferConfig,
    UlamMatrix,
    apply_exact,
    build_ulam,
    stationary_density,
    verify_cone_invariance,
    verify_lower_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
