"""Feature-hierarchical edge inference: cost models and resource-allocation solvers."""

from fhei.errors import (
    DegenerateSamples,
    EnergyInfeasible,
    FeatureTooLarge,
    FHEIError,
    InitialInfeasible,
    LatencyInfeasible,
    LengthMismatch,
    NoBracket,
    OutOfRangeClass,
    TooLarge,
    ZeroRate,
    ZeroResource,
)
from fhei.link import MobileLink, RadioParams, TimeShares, achievable_rates, shannon_rate
from fhei.profile import (
    ConvLayerSpec,
    HierarchyProfile,
    NetCostModel,
    class_loads,
    comm_load,
    fit_cost_model,
    layer_flops,
    scale_for_feature_size,
)
from fhei.cost import (
    ResourceAllocation,
    RoundRecord,
    Scenario,
    Solution,
    e2e_latency,
    fn_load,
    in_load,
    mobile_energy,
    quality,
)
from fhei.solver import (
    SolverSettings,
    alternate,
    energy_slope,
    min_pre_compute_time,
    prop1_allocate,
    prop2_local_speeds,
    solve_lambda,
    solve_p2,
    solve_p3,
)

__all__ = [name for name in dir() if not name.startswith("_")]
