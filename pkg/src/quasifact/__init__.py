"""Numerical toolkit for multiplicative relative-entropy comparisons and quasi-factorization."""

from .matcore import (
    ConvergenceError,
    DomainError,
    ValidationError,
    as_density,
    loewner_leq,
    loewner_ratio,
    partial_trace,
    random_density,
    random_unitary,
    spectral_decompose,
)
from .channels import (
    Channel,
    SubalgebraBlocks,
    block_expectation,
    choi_matrix,
    commuting_square_gap,
    compose,
    convex_combine,
    from_choi,
    from_kraus,
    from_mixture,
    group_average_expectation,
    index_estimate,
    intersection_expectation,
    max_expectation_weight,
    near_zeta_sufficient,
    partial_trace_expectation,
    pinching_expectation,
    scalar_expectation,
    weighted_expectation,
)
from .entropy import (
    g_ratio,
    inv_weighted_norm_sq,
    keylem_sandwich,
    relative_entropy,
    relative_entropy_double_integral,
    von_neumann_entropy,
)
from .bounds import (
    approx_beta,
    beta_c_zeta,
    ephi_constant,
    qf_certificate,
    revconv_check,
    schedule_compose,
    thmrelent_check,
    tilde_zeta_admissible,
    worstsig_slack,
)
from .majorize import cascade_redistribute, flatten_step_delta, majorizes
from .uncertainty import (
    BasisPair,
    bardet_bound,
    fourier_pair,
    maassen_uffink_bound,
    qf_uncertainty_bound,
    rotated_pair,
)
from .graphmix import (
    GraphSpec,
    adjacency_gamma,
    build_graph,
    cmlsi_certificate,
    envelope_check,
    graph_expectation,
    graph_lindbladian,
    phi_graph,
)

__version__ = "0.1.0"
