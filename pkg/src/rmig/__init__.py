"""rmig: information geometry of exponential-family random matrix ensembles.

Exact small-n orthogonal-polynomial quadrature, Coulomb-gas MCMC sampling,
finite-n information geometry (pressure, Fisher metric, alpha-connections,
dual coordinates, Legendre transform, entropy), free-probability limits
(equilibrium measures, free entropy/pressure, conjugate variable, free
Fisher information), and statistical harnesses (Cramér-Rao, fluctuations,
loop equations).
"""

from . import cli, exact, freelimit, geometry, inference, mcmc, model, poly
from .exact import (
    EXACT_N_CAP,
    RecurrenceTable,
    build_recurrence,
    connection_exact,
    log_partition_eigen,
    metric_exact,
    one_point_density,
    pressure_exact,
)
from .freelimit import (
    EquilibriumMeasure,
    FreeReport,
    build_free_report,
    conjugate_variable,
    equilibrium_residual,
    free_fisher,
    free_pressure,
    limit_pressure_and_legendre,
    log_energy,
    reconstruct_potential,
    solve_one_cut,
)
from .geometry import (
    DualCoords,
    GeometryReport,
    alpha_connection,
    convergence_sweep,
    dual_coordinates,
    entropy,
    fisher_metric,
    geometry_report,
    gue_closed_forms,
    legendre_transform,
    lue_closed_form,
)
from .inference import (
    CRReport,
    Estimator,
    FluctuationReport,
    check_unbiased,
    cramer_rao_check,
    estimate_value,
    fluctuation_covariance,
    free_cramer_rao_check,
    loop_equation_residual,
)
from .mcmc import (
    SampleBatch,
    SamplerConfig,
    batch_mean_and_stderr,
    sample,
    sample_gue_direct,
)
from .model import (
    ModelSpec,
    ProductModel,
    as_config,
    compose_independent,
    log_joint_eigenvalue_density,
    trace_statistic,
)
from .poly import GridDensity, Polynomial, eval_poly, is_confining, pv_stieltjes

__version__ = "0.1.0"

__all__ = [
    "EXACT_N_CAP",
    "CRReport",
    "DualCoords",
    "EquilibriumMeasure",
    "Estimator",
    "FluctuationReport",
    "FreeReport",
    "GeometryReport",
    "GridDensity",
    "ModelSpec",
    "Polynomial",
    "ProductModel",
    "RecurrenceTable",
    "SampleBatch",
    "SamplerConfig",
    "alpha_connection",
    "as_config",
    "batch_mean_and_stderr",
    "build_free_report",
    "build_recurrence",
    "check_unbiased",
    "compose_independent",
    "conjugate_variable",
    "connection_exact",
    "convergence_sweep",
    "cramer_rao_check",
    "dual_coordinates",
    "entropy",
    "equilibrium_residual",
    "estimate_value",
    "eval_poly",
    "fisher_metric",
    "fluctuation_covariance",
    "free_cramer_rao_check",
    "free_fisher",
    "free_pressure",
    "geometry_report",
    "gue_closed_forms",
    "is_confining",
    "legendre_transform",
    "limit_pressure_and_legendre",
    "log_energy",
    "log_joint_eigenvalue_density",
    "log_partition_eigen",
    "lue_closed_form",
    "metric_exact",
    "one_point_density",
    "pressure_exact",
    "pv_stieltjes",
    "reconstruct_potential",
    "sample",
    "sample_gue_direct",
    "solve_one_cut",
    "trace_statistic",
]
