"""Positional analysis of large graphs.

Epsilon-equitable partitions by iterative refinement (serial and sharded
parallel), partition similarity scoring across time-evolving snapshots, and
co-evolution analysis of same-position vertex pairs.
"""

from .graphs import (
    EdgeEvent,
    GeneratorConfig,
    Graph,
    ParseError,
    SnapshotSpec,
    TemporalEdgeLog,
    VertexLabelMap,
    build_snapshots,
    generate_power_law,
    load_edge_list,
    load_temporal_edge_list,
    reciprocal_projection,
    save_edge_list,
)
from .partition import (
    ActiveList,
    IterationLimitError,
    Partition,
    degree_partition,
    degree_to_cell,
    degree_vector,
    epsilon_spread,
    equitable_oracle,
    fast_eep,
    read_partition_file,
    split,
    write_partition_file,
)
from .engine import (
    EmissionIntegrityError,
    EngineConfig,
    MapEmission,
    RefinementStats,
    ShardPlan,
    map_degrees,
    parallel_eep,
    plan_shards,
    reduce_split,
    run_refinement,
)
from .similarity import (
    SimilarityScore,
    UniverseMismatchError,
    intersection_cardinality_cellpairs,
    partition_intersection,
    partitions_equal,
    restrict_partition,
    similarity_score,
)
from .centrality import (
    CONVENTIONS,
    CentralityVector,
    betweenness_centrality,
    betweenness_centrality_exact,
    compute_measures,
    degree_centrality,
    shapley_centrality,
    triangle_counts,
)
from .coevolution import (
    DEFAULT_BIN_EDGES,
    DEFAULT_PAIR_CAP,
    CoevolutionReport,
    OverlapMatrix,
    PairDifferenceRecord,
    coevolution_report,
    overlap_matrix,
    pair_difference_histogram,
    pair_difference_records,
    pair_difference_values,
    same_position_pairs,
)

__version__ = "0.1.0"
