"""Certified convergence rates for l1-penalized inversion of truncated sequences.

The pieces fit together in the order most studies use them:

1. :mod:`l1rates.core` — truncated coefficient sequences, sign patterns and
   index-set families, and the forward operators (dense matrices, lq
   embeddings, trigonometric evaluation on a subset of the circle).
2. :mod:`l1rates.certificates` — dual certificates for a given sign pattern,
   enumeration of the injectivity constants ``gamma_n``, and full
   certification of the interpolation assumption with constant ``c``.
3. :mod:`l1rates.rate` — the concave rate function ``phi`` built from tail
   sums and the certified table, and a sampling check of the variational
   inequality it implies.
4. :mod:`l1rates.solver` — the regularized problems themselves, with exact
   path solvers for embeddings and a proximal-gradient solver for dense
   operators, plus a-priori and discrepancy parameter choice.
5. :mod:`l1rates.harness` — noise synthesis at an exact level, rate-
   confirmation sweeps, the Turan-Nazarov sampling check, and reproducible
   artifact writers.
"""

from .core import (
    ConfigError,
    DenseOperator,
    DimensionMismatchError,
    ForwardOperator,
    IndexSetFamily,
    LqEmbedding,
    SignPattern,
    TruncatedSequence,
    WienerMultiplication,
    WienerRestriction,
    load_operator,
    lq_norm,
    operator_from_config,
    trig_poly_samples,
)
from .certificates import (
    GAMMA_INFINITE,
    AssumptionCertificate,
    BudgetExceededError,
    CertificateReport,
    CertificationError,
    GammaTable,
    SingularSupportError,
    UnsupportedOperatorError,
    analytic_gamma_table,
    assemble_assumption,
    brute_force_gamma,
    brute_force_gamma_detail,
    certify_assumption,
    check_restricted_injectivity,
    find_certificate,
    min_norm_dual,
    nonsmooth_basis_check,
    smooth_basis_check,
)
from .rate import RateFunction, ViReport, build_phi, check_vi, compute_beta
from .solver import (
    MaxIterationsError,
    SolveDiagnostics,
    TikhonovProblem,
    UnsupportedProblemError,
    choose_alpha,
    soft_threshold,
    solve_tikhonov,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    ExperimentResult,
    NazarovReport,
    experiment_config_from_dict,
    nazarov_check,
    reproduce_example,
    run_rate_experiment,
    synthesize_noise,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionCertificate",
    "BudgetExceededError",
    "CertificateReport",
    "CertificationError",
    "ConfigError",
    "DenseOperator",
    "DimensionMismatchError",
    "ExperimentConfig",
    "ExperimentRecord",
    "ExperimentResult",
    "ForwardOperator",
    "GAMMA_INFINITE",
    "GammaTable",
    "IndexSetFamily",
    "LqEmbedding",
    "MaxIterationsError",
    "NazarovReport",
    "RateFunction",
    "SignPattern",
    "SingularSupportError",
    "SolveDiagnostics",
    "TikhonovProblem",
    "TruncatedSequence",
    "UnsupportedOperatorError",
    "UnsupportedProblemError",
    "ViReport",
    "WienerMultiplication",
    "WienerRestriction",
    "analytic_gamma_table",
    "assemble_assumption",
    "brute_force_gamma",
    "brute_force_gamma_detail",
    "certify_assumption",
    "check_restricted_injectivity",
    "check_vi",
    "choose_alpha",
    "compute_beta",
    "build_phi",
    "experiment_config_from_dict",
    "find_certificate",
    "load_operator",
    "lq_norm",
    "min_norm_dual",
    "nazarov_check",
    "nonsmooth_basis_check",
    "operator_from_config",
    "reproduce_example",
    "run_rate_experiment",
    "smooth_basis_check",
    "soft_threshold",
    "solve_tikhonov",
    "synthesize_noise",
    "trig_poly_samples",
]
