"""Coherent-set identification in discrete stochastic transition data.

Two pipelines over the same estimated transition model: truncated SVD of the
rescaled transition matrix with clustering of singular-vector rows, and direct
likelihood ascent over hard input affiliations with a left-stochastic factor.
Projection identities tie the two views together and balancedness constants
turn likelihood gaps into Frobenius-norm bounds.
"""

from ._accel import BACKEND
from .bounds import (
    BoundConstants,
    BoundReport,
    balancedness,
    bound_constants,
    coherence_lower_bound,
    deviation_coefficient,
    frobenius_kl_bound,
    pinsker_l2,
    weighted_balancedness,
)
from .dataio import (
    canonical_json,
    read_counts,
    read_json,
    read_labels,
    read_pairs,
    write_counts,
    write_json,
    write_labels,
    write_pairs,
)
from .dbmr import (
    Affiliation,
    DbmrStep,
    DbmrTrace,
    ReducedModel,
    dbmr_run,
    log_likelihood,
    multi_start,
    output_partition,
    partition_to_affiliation,
    random_affiliation,
    reduce_with_affiliation,
    reduced_singular_values,
    relaxed_log_likelihood,
    rescaled_factor_spectrum,
    update_affiliation,
    update_factor,
)
from .generators import (
    GyreConfig,
    advect,
    gen_double_gyre,
    gen_interval_map,
    gen_three_coherent,
    gyre_velocity,
    interval_map_counts,
    pairs_from_counts,
    perturb_pairs,
    stream_function,
    three_coherent_counts,
)
from .model import (
    CountMatrix,
    PairDataset,
    TransitionModel,
    estimate,
    ingest_pairs,
    kl_divergence,
    prune_empty,
)
from .projection import (
    FactorizationResiduals,
    InducedProjection,
    build_projection,
    pythagoras_check,
    singular_value_dominance,
    verify_factorization,
)
from .report import (
    compare_experiment,
    multirun_experiment,
    render_matrix_image,
)
from .seeding import mix_seed, rng_for
from .svd import (
    ClassicalResult,
    Partition,
    SvdFactorization,
    classical_pipeline,
    degree_of_coherence,
    full_svd,
    kmeans,
    match_partitions,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Affiliation",
    "BoundConstants",
    "BoundReport",
    "ClassicalResult",
    "CountMatrix",
    "DbmrStep",
    "DbmrTrace",
    "FactorizationResiduals",
    "GyreConfig",
    "InducedProjection",
    "PairDataset",
    "Partition",
    "ReducedModel",
    "SvdFactorization",
    "TransitionModel",
    "advect",
    "balancedness",
    "bound_constants",
    "canonical_json",
    "classical_pipeline",
    "coherence_lower_bound",
    "compare_experiment",
    "dbmr_run",
    "degree_of_coherence",
    "deviation_coefficient",
    "estimate",
    "frobenius_kl_bound",
    "full_svd",
    "gen_double_gyre",
    "gen_interval_map",
    "gen_three_coherent",
    "gyre_velocity",
    "ingest_pairs",
    "interval_map_counts",
    "kl_divergence",
    "kmeans",
    "log_likelihood",
    "match_partitions",
    "mix_seed",
    "multi_start",
    "multirun_experiment",
    "output_partition",
    "pairs_from_counts",
    "partition_to_affiliation",
    "perturb_pairs",
    "pinsker_l2",
    "prune_empty",
    "pythagoras_check",
    "random_affiliation",
    "read_counts",
    "read_json",
    "read_labels",
    "read_pairs",
    "reduce_with_affiliation",
    "reduced_singular_values",
    "relaxed_log_likelihood",
    "render_matrix_image",
    "rescaled_factor_spectrum",
    "rng_for",
    "singular_value_dominance",
    "stream_function",
    "three_coherent_counts",
    "truncate",
    "update_affiliation",
    "update_factor",
    "verify_factorization",
    "weighted_balancedness",
    "write_counts",
    "write_json",
    "write_labels",
    "write_pairs",
]
