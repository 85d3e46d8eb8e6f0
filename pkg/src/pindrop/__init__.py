"""Drop calculus, dyadic-measure regularization, and pinned-distance counting."""

from .seqpart import (
    DropSequence,
    DropValue,
    IntegerPartition,
    as_drop_sequence,
    drop_M,
    drop_S,
    enumerate_tau_good,
    mtau,
    mtau_bruteforce,
)
from .lipdrop import (
    HardSet,
    PLFunction,
    RealPartition,
    construct_partition_basic,
    discretize_partition,
    hard_points,
    merge_partition,
    sequence_from_function,
    sequence_to_function,
    tau_adjust,
    tdrop_exact,
    total_drop,
)
from .bounds import (
    basic_ratio,
    chi,
    half_scale_threshold,
    lambda_wolff,
    legacy_bounds,
    phi,
    phi_argmax,
    psi_pack,
    psi_su,
    stability_envelopes,
    stability_t1,
    wolff_constants,
)
from .dyadic import (
    DyadicMeasure,
    LineMeasure,
    RegularityReport,
    RegularPiece,
    bad_direction_fraction,
    bad_test,
    bourgain_decompose,
    bourgain_split,
    cell_boxes,
    coarsen,
    energy,
    energy_pairwise,
    entropy,
    extract_sigma,
    four_corner_measure,
    l2_norm_sq,
    localize,
    marstrand_fraction,
    morton_decode,
    morton_encode,
    product_cantor_measure,
    project,
    projection_norms,
    random_measure,
    theta_grid,
    uniform_measure,
)
from .distlab import (
    BoundReport,
    distance_counts,
    entropy_chain_check,
    figure1_data,
    l2_support_bound_check,
    lower_bound_pipeline,
    pinned_counts,
    pinned_distance_measure,
)
from .witnesses import (
    BasicWitness,
    basic_drop_value,
    basic_hard_intervals,
    ladder_ratio,
    stability_drop_value,
    stability_hard_intervals,
    verify_witness,
    witness_basic,
    witness_initial,
    witness_stability,
)

__version__ = "0.1.0"
