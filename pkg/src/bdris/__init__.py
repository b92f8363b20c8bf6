"""Cramer-Rao bound evaluation and unitary scattering-matrix optimization
for angle-of-arrival estimation through a beyond-diagonal reconfigurable
surface, with built-in verification oracles."""

from .errors import (
    ArgumentError,
    BdrisError,
    ConfigError,
    DegenerateSceneError,
    SingularMatrixError,
    SkewToleranceError,
)
from .estimate import (
    EstimateResult,
    MonteCarloResult,
    ObservationBlock,
    default_grid,
    fd_gradient_oracle,
    log_likelihood,
    log_likelihood_expanded,
    ml_estimate,
    monte_carlo_mse,
    synthesize,
)
from .experiments import (
    AXES,
    SCHEMES,
    WORKERS_ENV,
    ExperimentConfig,
    SweepRow,
    compare_schemes,
    default_config,
    run_convergence,
    run_sweep,
    run_verify,
    verification_suite,
)
from .fisher import (
    FisherBlocks,
    assemble_fim,
    crb_db,
    crb_from_fim_inverse,
    crb_theta,
    fim_blocks,
    noise_for_target_crb,
    objective_g,
    score_fim,
    snr_prefactor,
)
from .linalg import (
    SkewFactorization,
    UnitarityReport,
    as_rng,
    block_diag_haar,
    block_mask,
    expm_skew,
    haar_random_unitary,
    reunitarize,
    reunitarize_blocks,
    skew_eigensystem,
    unitarity_report,
)
from .optimizer import (
    GradientWorkspace,
    IterationRecord,
    OptimizerConfig,
    OptimizerTrace,
    RandomObjectiveStats,
    ScatteringMatrix,
    ascent,
    ascent_grouped,
    euclidean_gradient,
    euclidean_gradient_workspace,
    geodesic_gradient,
    make_scattering,
    multi_start_ascent,
    random_unitary_objective,
    riemannian_gradient,
    riemannian_metric,
)
from .scene import (
    ChannelBundle,
    Scenario,
    angle_at_bs,
    angle_at_ris,
    build_channel,
    channel_norms,
    geometry_to_scene,
    pathloss_gain,
    relay_matrix,
    sample_scene,
    steering_derivative,
    steering_vector,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
