"""Natural stochastic processes on time-like graphs.

Tools for validating time-like graphs, deciding the no-minimal-co-terminal-
cells (NCC) property, constructing towers, realizing the natural Brownian
motion exactly and by Monte Carlo, computing harness conditional
expectations via embedded random walks, building mean-splitting embedding
graphs, and verifying the honeycomb-lattice scaling limit.
"""

from .core import (
    Vertex,
    Edge,
    TimePath,
    Cell,
    TimeLikeGraph,
    Tower,
    ConstructionStep,
    TLGError,
    InvalidGraphError,
    NotNCCError,
    CapExceededError,
    validate_tlg,
    load_tlg,
    dump_tlg,
    full_time_paths,
    time_paths_between,
    find_cells,
    classify_cell,
    is_ncc,
    build_tower,
    verify_tower,
    collapse,
    reverse,
    random_tlg,
    random_ncc_tlg,
    enumerate_strict_tlgs,
    has_two_disjoint_paths,
)
from ._plan import SampleGrid
from .gauss import (
    WienerLaw,
    TwoSidedWienerLaw,
    GaussianField,
    ZeroVarianceError,
    build_field,
    conditional_coeffs,
    cell_covariance_formula,
    covariance_inconsistency,
    tower_invariance,
    check_time_markov,
)
from .sampler import RngSpec, sample_natural, sample_bridge, mc_covariance
from .harness import (
    SupportError,
    support_check,
    filtration_levels,
    walk_distribution,
    conditional_expectation,
)
from .dubins import (
    DiscreteMeasure,
    UniformMeasure,
    dubins_tree,
    embedded_measure,
    w1_distance,
    build_embedding_tlg,
    embedding_tower,
    verify_second_moment,
)
from .honeycomb import (
    HexWindowSpec,
    LatticePoint,
    chain_stationary,
    step_variance,
    hex_window,
    finite_covariance,
    limit_covariance,
    limit_covariance_general,
    convergence_study,
    covariance_cross_check,
)

__version__ = "0.1.0"
