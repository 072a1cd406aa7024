"""Spectral community detection in multi-layer networks."""
from .detectors import (
    Algorithm,
    DetectionResult,
    default_plan,
    default_sample_sizes,
    detect,
    detect_subsampled,
    ideal_detect,
    ideal_embedding,
    run,
)
from .exceptions import DegenerateInputError, EdgeListParseError, UnsupportedKError
from .ingest import (
    build_threshold_multilayer,
    largest_connected_component,
    load_edge_list,
    load_returns_panel,
    nu_sparsity,
    preprocess,
    write_edge_list,
)
from .metrics import accuracy_rate, ari, clustering_error, evaluate, hamming_error, nmi
from .model import (
    MldcsbmParams,
    NodeLabels,
    expected_adjacency,
    expected_sum,
    expected_sum_squares,
    sample_network,
    simulation_params,
)
from .modularity import estimate_k, layer_modularity, q_mnavrg
from .network import (
    AggregateMatrix,
    MultiLayerNetwork,
    SubsamplePlan,
    aggregate_sum,
    debiased_sum_squares,
    make_subsample,
    subsampled_debiased_sum_squares,
    subsampled_sum,
    sum_of_squares,
)
from .spectral import KMeansOptions, SpectralGapWarning, kmeans, row_normalize, top_k_eigen, top_k_left_singular

__version__ = "0.1.0"
