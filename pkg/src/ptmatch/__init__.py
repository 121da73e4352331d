"""Recover the hidden vertex correspondence between correlated random graphs.

The pipeline has three stages: per-vertex partition-tree signatures,
a sparsified all-pairs signature comparison producing a candidate matrix,
and greedy peeling optionally followed by neighborhood-intersection
refinement.  `match_exact` runs all of it; the intermediate stages are
exposed for experiments and diagnostics.
"""

from .comparison import (
    CandidateMatrix,
    IndexSet,
    comparison_matrix,
    sample_index_set,
    signature_distance,
)
from .errors import DataFormatError, ParameterError
from .graph import Graph, bfs_distances, bfs_spheres, from_edge_arrays, from_edge_list, neighborhood_is_tree
from .matcher import Matching, approximate_matching, matching_mismatches
from .model import (
    CorrelatedInstance,
    ModelParams,
    Permutation,
    apply_permutation,
    estimate_edge_probability,
    named_stream,
    overlap_fraction,
    sample_instance,
)
from .pipeline import (
    PipelineParams,
    Provenance,
    ResolvedParams,
    default_slack,
    default_width,
    match_almost_exact,
    match_exact,
    resolve_params,
)
from .refinement import (
    IntersectionCounts,
    RefineParams,
    default_epsilon,
    intersection_counts,
    refine_matching,
    refine_round,
)
from .signatures import (
    ClassKey,
    PartitionTree,
    SignatureEngine,
    SignatureSet,
    default_depth,
    partition_tree,
    signature_set,
    vertex_signature,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateMatrix",
    "ClassKey",
    "CorrelatedInstance",
    "DataFormatError",
    "Graph",
    "IndexSet",
    "IntersectionCounts",
    "Matching",
    "ModelParams",
    "ParameterError",
    "PartitionTree",
    "Permutation",
    "PipelineParams",
    "Provenance",
    "RefineParams",
    "ResolvedParams",
    "SignatureEngine",
    "SignatureSet",
    "apply_permutation",
    "approximate_matching",
    "bfs_distances",
    "bfs_spheres",
    "comparison_matrix",
    "default_depth",
    "default_epsilon",
    "default_slack",
    "default_width",
    "estimate_edge_probability",
    "from_edge_arrays",
    "from_edge_list",
    "intersection_counts",
    "match_almost_exact",
    "match_exact",
    "matching_mismatches",
    "named_stream",
    "neighborhood_is_tree",
    "overlap_fraction",
    "partition_tree",
    "refine_matching",
    "refine_round",
    "resolve_params",
    "sample_index_set",
    "sample_instance",
    "signature_distance",
    "signature_set",
    "vertex_signature",
]
