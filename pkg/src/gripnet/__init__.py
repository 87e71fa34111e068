"""GripNet: supergraph-based heterogeneous graph representation learning.

A heterogeneous graph is segregated into semantically coherent supervertices
connected by directed superedges; node embeddings are learned by propagating
information along the resulting DAG, then decoded for multi-relational link
prediction or node classification.
"""

from .autodiff import LabelAdjacency, Parameter, Tape, Tensor, ShapeMismatch
from .checkpoint import (
    CheckpointError,
    export_embeddings,
    load_checkpoint,
    read_embeddings,
    restore_parameters,
    save_checkpoint,
)
from .config import (
    ConfigError,
    RunConfig,
    apply_preset,
    config_from_dict,
    list_presets,
    load_preset,
    parse_config,
    write_config,
)
from .encoder import (
    EncoderGraph,
    EncoderParams,
    SupervertexConfig,
    build_adjacencies,
    combine_features,
    encode_supergraph,
    external_aggregation,
    internal_aggregation,
    internal_feature,
)
from .graph import (
    CategoricalPartition,
    GraphFormatError,
    HeteroGraph,
    SuperedgeGraph,
    SupervertexGraph,
    induce_superedge,
    induce_supervertex,
    load_edge_list,
)
from .metrics import (
    DegenerateLabelError,
    F1Report,
    RankingReport,
    SplitSpec,
    f1_metrics,
    rank_metrics,
    ranking_report,
    stratified_split,
)
from .optim import AdamState, adam_step, xavier_init
from .pipeline import (
    Assembled,
    assemble,
    run_check,
    run_eval,
    run_export,
    run_training,
)
from .supergraph import (
    CycleDetected,
    EmptySuperedge,
    Supergraph,
    SupergraphError,
    TaskNotLeaf,
    TopoSchedule,
    build_supergraph,
    topological_order,
)
from .synthetic import (
    InfeasibleSpec,
    SyntheticSpec,
    generate_synthetic,
    parse_synthetic_spec,
)
from .tasks import (
    ClassifierParams,
    DistMultParams,
    EdgeSplit,
    NodeLabels,
    SamplingError,
    TrainingOptions,
    build_edge_split,
    cns_sample,
    corrupt_sample,
    distmult_score,
    distmult_scores,
    evaluate_link_prediction,
    evaluate_node_classification,
    lp_loss,
    nc_head,
    nc_loss,
    train_link_prediction,
    train_node_classification,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "Assembled",
    "CategoricalPartition",
    "CheckpointError",
    "ClassifierParams",
    "ConfigError",
    "CycleDetected",
    "DegenerateLabelError",
    "DistMultParams",
    "EdgeSplit",
    "EmptySuperedge",
    "EncoderGraph",
    "EncoderParams",
    "F1Report",
    "GraphFormatError",
    "HeteroGraph",
    "InfeasibleSpec",
    "LabelAdjacency",
    "NodeLabels",
    "Parameter",
    "RankingReport",
    "RunConfig",
    "SamplingError",
    "ShapeMismatch",
    "SplitSpec",
    "SuperedgeGraph",
    "Supergraph",
    "SupergraphError",
    "SupervertexConfig",
    "SupervertexGraph",
    "SyntheticSpec",
    "Tape",
    "TaskNotLeaf",
    "Tensor",
    "TopoSchedule",
    "TrainingOptions",
    "adam_step",
    "apply_preset",
    "assemble",
    "build_adjacencies",
    "build_edge_split",
    "build_supergraph",
    "cns_sample",
    "combine_features",
    "config_from_dict",
    "corrupt_sample",
    "distmult_score",
    "distmult_scores",
    "encode_supergraph",
    "evaluate_link_prediction",
    "evaluate_node_classification",
    "export_embeddings",
    "external_aggregation",
    "f1_metrics",
    "generate_synthetic",
    "induce_superedge",
    "induce_supervertex",
    "internal_aggregation",
    "internal_feature",
    "list_presets",
    "load_checkpoint",
    "load_edge_list",
    "load_preset",
    "lp_loss",
    "nc_head",
    "nc_loss",
    "parse_config",
    "parse_synthetic_spec",
    "rank_metrics",
    "ranking_report",
    "read_embeddings",
    "restore_parameters",
    "run_check",
    "run_eval",
    "run_export",
    "run_training",
    "save_checkpoint",
    "stratified_split",
    "topological_order",
    "train_link_prediction",
    "train_node_classification",
    "write_config",
    "xavier_init",
]
