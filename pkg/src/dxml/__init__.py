"""Multi-label classification via embedded label graphs and clustered k-NN.

Pipeline: build a label co-occurrence graph from the training set, embed its
nodes with random walks plus skip-gram, project each point's label set to an
embedding-space target, train a sparse-input network toward those targets
under a smooth-L1 loss, cluster the embedded training points, and predict by
aggregating the label sets of nearest neighbors inside the closest cluster.
"""

from .cluster import ClusterIndex, kmeans, nearest_cluster
from .data_io import (
    Dataset,
    LabelSet,
    SparseVector,
    load_repo_file,
    normalize_features,
    parse_repo_file,
    save_repo_file,
    write_repo_file,
)
from .errors import (
    DataFormatError,
    DegenerateTargetError,
    DxmlError,
    ModelFileError,
    UnlabeledPointError,
    ValidationError,
)
from .graph_embed import (
    DeepWalkConfig,
    EmbeddingMatrix,
    WalkCorpus,
    embed_labels,
    generate_walks,
    train_skipgram,
)
from .label_graph import LabelGraph, build_label_graph
from .label_projection import project_label_vector, project_targets
from .metrics import MetricReport, evaluate, ndcg_at_k, precision_at_k, rank_k
from .model_io import ModelArtifacts, load_model, save_model
from .net import (
    MlpModel,
    OptimizerState,
    TrainConfig,
    embed_distance,
    forward,
    init_model,
    loss_and_gradients,
    sgd_step,
    smooth_l1,
    train,
)
from .predictor import Prediction, aggregate_labels, knn_search, predict, top_p

__version__ = "0.1.0"

__all__ = [
    "ClusterIndex", "kmeans", "nearest_cluster",
    "Dataset", "LabelSet", "SparseVector",
    "load_repo_file", "normalize_features", "parse_repo_file",
    "save_repo_file", "write_repo_file",
    "DataFormatError", "DegenerateTargetError", "DxmlError",
    "ModelFileError", "UnlabeledPointError", "ValidationError",
    "DeepWalkConfig", "EmbeddingMatrix", "WalkCorpus",
    "embed_labels", "generate_walks", "train_skipgram",
    "LabelGraph", "build_label_graph",
    "project_label_vector", "project_targets",
    "MetricReport", "evaluate", "ndcg_at_k", "precision_at_k", "rank_k",
    "ModelArtifacts", "load_model", "save_model",
    "MlpModel", "OptimizerState", "TrainConfig",
    "embed_distance", "forward", "init_model", "loss_and_gradients",
    "sgd_step", "smooth_l1", "train",
    "Prediction", "aggregate_labels", "knn_search", "predict", "top_p",
    "__version__",
]
