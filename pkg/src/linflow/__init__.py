"""linflow: operator-valued linear stochastic flows on finite truncations.

Construct, cross-validate, and stress-test flows of the equation
dX = A X dt + sum_k B_k X dW_k at desk scale: operator algebra and Schatten
norms, reproducible bridge-refinable Wiener noise, four flow solvers with an
inverse flow, closed-form diagonal diagnostics (extreme-value growth,
three-series summability, trace plateaus), semigroup smoothing fits, and a
deterministic experiment harness with CSV artifacts.
"""

from .diagonal import (
    CriteriaReport,
    DiagonalModel,
    InconsistentModelError,
    MultiplicationReport,
    SolvabilityReport,
    ThreeSeriesReport,
    TraceSample,
    brownian_sheet_criteria,
    classify_spectrum,
    criteria_report,
    flow_criterion_rho,
    homogeneous_field_criteria,
    homogeneous_field_functionals,
    l2_solvability,
    multiplication_criteria,
    sample_eigenvalues,
    sample_prefix_max,
    sample_trace,
    three_series_diagnostic,
    zeta,
)
from .flows import (
    ChaosConfig,
    ChaosExplosionError,
    FlowSample,
    NonCommutingFamilyError,
    chaos_flow,
    chaos_tail_bound,
    cocycle_defect,
    commutative_ito_flow,
    commutative_strat_flow,
    doss_sussmann_flow,
    euler_flow,
    inverse_flow,
    yosida,
    yosida_lambda_ladder,
)
from .noise import (
    SheetSample,
    TimeGrid,
    WienerPaths,
    load_paths,
    normal_stream,
    sample_brownian_sheet,
    sample_homogeneous_field,
    sample_wiener,
    save_paths,
    sup_statistic,
)
from .operators import (
    MultiIndex,
    OperatorError,
    OperatorFamily,
    TruncatedOperator,
    commutator_defect,
    family_bound,
    matrix_exponential,
    multi_index_operator,
    operator_norm,
    schatten_norm,
)
from .rules import ExplicitRule, SequenceRule, constant, log_power, power
from .schatten import (
    PicardDivergenceError,
    PicardResult,
    SmoothingReport,
    SpectrumModel,
    apply_semigroup,
    check_smoothing,
    choose_lattice_cutoff,
    dirichlet_laplacian_spectrum,
    picard_mild_solver,
    semigroup_schatten_norm,
    semigroup_schatten_tail,
)
from .stats import (
    FitResult,
    GrowthCurve,
    MomentEstimate,
    MomentReport,
    MonteCarloNoiseError,
    diagonal_growth_medians,
    holder_slope,
    jackknife_se,
    linear_fit,
    mc_moment,
    skorokhod_growth,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
