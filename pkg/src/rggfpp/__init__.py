"""First-passage percolation and Richardson growth on supercritical random geometric graphs."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    GuardError,
    IntegrityError,
    NoNeighborError,
    ParameterError,
    SubcriticalError,
    SubcriticalQuotaError,
    UnsupportedDimensionError,
)
from .fpp import (  # noqa: E402
    GrowthTrace,
    PassageField,
    PassageSpec,
    assign_passage_times,
    ball_at_time,
    check_A1,
    check_A2,
    first_passage,
    growth_trace,
    passage_between,
)
from .geograph import (  # noqa: E402
    Geograph,
    build_rgg,
    components,
    count_self_avoiding_paths,
    estimate_stretch_factor,
    estimate_theta,
    graph_distance,
    nearest_giant_vertex,
)
from .kernels import BACKEND  # noqa: E402
from .point_process import Box, PointSet, derive_seed, rescale, sample_ppp  # noqa: E402
from .scaling import (  # noqa: E402
    BranchingTree,
    KernelEstimate,
    RescaledRun,
    branching_run,
    convergence_experiment,
    cube_tv_distance,
    empirical_spatial_kernel,
    limit_spatial_kernel,
    n_alpha,
    reg_check,
    rescaled_richardson_run,
)
from .shape import (  # noqa: E402
    ModelConfig,
    PercolationReport,
    ShapeProfile,
    bond_percolation,
    directional_constants,
    pc_lower_bound,
    shape_error,
)
