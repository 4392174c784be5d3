"""Constrained Bayesian optimization with max-value entropy-search acquisitions."""

from .acquisition import (
    FantasySet,
    GammaStats,
    ZBarValue,
    a_gamma,
    cmes,
    cmes_ibo,
    cmes_ibo_values,
    cmes_values,
    eic,
    eic_values,
    gamma_stats,
    make_fantasy_set,
    parallel_cmes,
    parallel_cmes_ibo,
    pi_lower_bound,
    pi_values,
    tsc_select,
    z_bar,
)
from .domain import Box, latin_hypercube
from .gp import (
    GpModel,
    HyperBounds,
    KernelSpec,
    ModelBundle,
    NumericalError,
    Standardizer,
    fit_hyperparameters,
    kernel_matrix,
)
from .loop import (
    BoConfig,
    Optimizer,
    ProblemDescriptor,
    Recommendation,
    StateError,
    UtilityGapTrace,
    maximize_acquisition,
    recommend,
    run,
    select_batch,
    single_constraint_transform,
    utility_gap,
)
from .maxvalue import (
    PathBundle,
    SampleSet,
    SolverConfig,
    draw_max_values_grid,
    sample_max_values,
    sample_max_values_finite_domain,
    solve_constrained_path_max,
)
from .problems import (
    Problem,
    gardner1,
    gardner2,
    get_problem,
    gp_synthetic,
    gramacy,
    hartmann6,
)
from .rff import FeatureMap, PathSampler, SamplePath, build_feature_map
from .session import load_session, save_session
from .truncnorm_entropy import (
    TruncatedNormalSpec,
    entropy_complement,
    entropy_complement_identity_check,
    entropy_lower_truncated,
    tmn_entropy_box,
)
from .validation import (
    check_a_gamma,
    check_theorem_bounds,
    demo_negativity,
    kde_mi_oracle,
    toy_state,
)

__version__ = "0.1.0"
