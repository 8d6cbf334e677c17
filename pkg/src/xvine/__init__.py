"""X-vine models: multivariate tail dependence built on regular vine tree sequences."""

from . import reference
from .errors import XVineError
from .estimate import (
    EdgeFit,
    FitOptions,
    FitReport,
    PseudoSample,
    empirical_chi,
    empirical_tau,
    fit_pair_edge,
    fit_pipeline,
    fit_tail_edge,
    from_inverted_pareto,
    mbic_curve,
    rank_transform,
    select_pair_family,
    select_tail_family,
)
from .families import (
    PAIR_KINDS,
    TAIL_KINDS,
    PairFamily,
    TailFamily,
    pair_density,
    pair_h,
    pair_h_inv,
    pair_log_density,
    pair_tau,
    tail_chi,
    tail_density,
    tail_h,
    tail_h_inv,
    tail_log_density,
    tau_inverse,
)
from .model import (
    XVineSpec,
    conditional_cdf,
    conditional_copula_density,
    conditional_quantile,
    density,
    exponent_measure_density,
    log_density,
    model_chi,
    model_from_json,
    model_to_json,
)
from .simulate import (
    RejectionStats,
    SamplerConfig,
    resolve_threads,
    sample_conditional,
    sample_inverted_pareto,
    sample_pareto,
)
from .vines import (
    Edge,
    SamplingOrder,
    StructureMatrix,
    VineSequence,
    from_structure_matrix,
    random_vine,
    sampling_order,
    validate_vine,
)

__version__ = "0.1.0"

__all__ = [
    "Edge",
    "EdgeFit",
    "FitOptions",
    "FitReport",
    "PAIR_KINDS",
    "PairFamily",
    "PseudoSample",
    "RejectionStats",
    "SamplerConfig",
    "SamplingOrder",
    "StructureMatrix",
    "TAIL_KINDS",
    "TailFamily",
    "VineSequence",
    "XVineError",
    "XVineSpec",
    "conditional_cdf",
    "conditional_copula_density",
    "conditional_quantile",
    "density",
    "empirical_chi",
    "empirical_tau",
    "exponent_measure_density",
    "fit_pair_edge",
    "fit_pipeline",
    "fit_tail_edge",
    "from_inverted_pareto",
    "from_structure_matrix",
    "log_density",
    "mbic_curve",
    "model_chi",
    "model_from_json",
    "model_to_json",
    "pair_density",
    "pair_h",
    "pair_h_inv",
    "pair_log_density",
    "pair_tau",
    "random_vine",
    "rank_transform",
    "reference",
    "resolve_threads",
    "sample_conditional",
    "sample_inverted_pareto",
    "sample_pareto",
    "sampling_order",
    "select_pair_family",
    "select_tail_family",
    "tail_chi",
    "tail_density",
    "tail_h",
    "tail_h_inv",
    "tail_log_density",
    "tau_inverse",
    "validate_vine",
]
