"""Low-energy point configurations on compact sets.

Spreads N points over a chosen set by descending a pairwise repulsion
energy whose terms vanish beyond a short cutoff radius, so each step costs
O(N + interacting pairs) rather than O(N^2). Weighted kernels steer the
points toward a prescribed density. See the README for the command line
interface and file formats.
"""

from ._kernels import BACKEND, available_backends, thread_cap
from .energy import (
    DegenerateConfigurationError,
    EnergyBreakdown,
    SparseHessian,
    energy_full,
    energy_full_unweighted,
    energy_truncated,
    gradient_truncated,
    hessian_truncated,
)
from .geometry import (
    Circle,
    Configuration,
    FlatTorus,
    Manifold,
    Sphere2,
    SphericalShell,
    UnitCube,
    equally_spaced_circle,
    triangular_lattice_torus,
)
from .metrics import (
    DistributionReport,
    EnergyRatios,
    LimitInfo,
    ZAuditRow,
    audit_Z_bounds,
    covering_radius_estimate,
    distribution_test,
    energy_ratio,
    energy_ratios,
    epstein_zeta_hex,
    mesh_ratio,
    riemann_zeta,
    separation,
    theoretical_limit,
)
from .neighbors import (
    CellGrid,
    StaleGridError,
    build_grid,
    count_Z,
    for_each_pair_within,
)
from .optimize import DescentResult, OptimizerParams, TraceRecord, descend
from .weights import (
    ConstRadius,
    Cutoff,
    Density,
    HardCutoff,
    LogRadius,
    PairRadius,
    PolyCutoff,
    RadiusSchedule,
    RieszParams,
    UniformDensity,
    ZPolyDensity,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "available_backends",
    "thread_cap",
    "Configuration",
    "Manifold",
    "Circle",
    "Sphere2",
    "SphericalShell",
    "UnitCube",
    "FlatTorus",
    "equally_spaced_circle",
    "triangular_lattice_torus",
    "Density",
    "UniformDensity",
    "ZPolyDensity",
    "Cutoff",
    "HardCutoff",
    "PolyCutoff",
    "RadiusSchedule",
    "ConstRadius",
    "LogRadius",
    "PairRadius",
    "RieszParams",
    "CellGrid",
    "StaleGridError",
    "build_grid",
    "count_Z",
    "for_each_pair_within",
    "EnergyBreakdown",
    "SparseHessian",
    "DegenerateConfigurationError",
    "energy_full",
    "energy_full_unweighted",
    "energy_truncated",
    "gradient_truncated",
    "hessian_truncated",
    "OptimizerParams",
    "TraceRecord",
    "DescentResult",
    "descend",
    "separation",
    "covering_radius_estimate",
    "mesh_ratio",
    "riemann_zeta",
    "epstein_zeta_hex",
    "LimitInfo",
    "theoretical_limit",
    "EnergyRatios",
    "energy_ratio",
    "energy_ratios",
    "DistributionReport",
    "distribution_test",
    "ZAuditRow",
    "audit_Z_bounds",
    "__version__",
]
