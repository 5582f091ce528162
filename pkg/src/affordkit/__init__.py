"""Open-vocabulary affordance detection for 3-D point clouds.

A self-contained numpy implementation: a trainable student point encoder
distilled against a frozen teacher (relation descriptors and attention maps),
a text-point correlation head over a bank of label embeddings, exact-gradient
training with finite-difference verification, synthetic data generation,
confusion-matrix metrics, and a CLI.
"""

from .attndistill import (
    attention_transfer_loss,
    init_projector,
    qkv_project,
    self_attention,
)
from .datagen import gen_dataset, gen_shape, gen_textbank, read_dataset, write_dataset
from .encoder import EncoderConfig, encode, init_weights, layer_dims
from .errors import (
    CheckpointError,
    ConfigError,
    DatasetFormatError,
    DegenerateCorrelationError,
    DegenerateInputWarning,
    DimensionError,
    EmptyEvaluationError,
    LabelError,
    NumericError,
    ProbeError,
)
from .estimator import AffordanceSegmenter
from .geodistill import coordinate_offsets, geo_transfer_loss, relation_descriptors
from .gradsuite import SuiteResult, run_suite
from .metrics import ConfusionMatrix, EvalReport, MetricsResult, evaluate, metrics
from .model import (
    Model,
    Teacher,
    embed_cloud,
    init_model,
    load_model,
    load_teacher,
    make_teacher,
    predict_cloud,
    save_model,
    save_teacher,
    score_cloud,
)
from .numerics import GradCheckReport, cosine, grad_check, matmul, mse, softmax_rows
from .pointcloud import AnchorSet, PointCloud, fps, knn, pairwise_sq_dist, sample_anchors
from .tape import ParamSet, Tensor
from .textcorr import (
    TAU_INIT,
    TAU_MIN,
    TextBank,
    correlation_weights,
    load_textbank,
    pointwise_softmax,
    relevance_matrix,
    save_textbank,
    text_attention_features,
    weighted_nll,
)
from .trainer import PRESETS, TrainConfig, adam_step, class_weights, preset, total_loss, train

__version__ = "0.1.0"

__all__ = [
    "AffordanceSegmenter",
    "AnchorSet",
    "CheckpointError",
    "ConfigError",
    "ConfusionMatrix",
    "DatasetFormatError",
    "DegenerateCorrelationError",
    "DegenerateInputWarning",
    "DimensionError",
    "EmptyEvaluationError",
    "EncoderConfig",
    "EvalReport",
    "GradCheckReport",
    "LabelError",
    "MetricsResult",
    "Model",
    "NumericError",
    "PRESETS",
    "ParamSet",
    "PointCloud",
    "ProbeError",
    "SuiteResult",
    "TAU_INIT",
    "TAU_MIN",
    "Teacher",
    "Tensor",
    "TextBank",
    "TrainConfig",
    "adam_step",
    "attention_transfer_loss",
    "class_weights",
    "coordinate_offsets",
    "correlation_weights",
    "cosine",
    "embed_cloud",
    "encode",
    "evaluate",
    "fps",
    "gen_dataset",
    "gen_shape",
    "gen_textbank",
    "geo_transfer_loss",
    "grad_check",
    "init_model",
    "init_projector",
    "init_weights",
    "knn",
    "layer_dims",
    "read_dataset",
    "load_model",
    "load_teacher",
    "load_textbank",
    "make_teacher",
    "matmul",
    "metrics",
    "mse",
    "pairwise_sq_dist",
    "pointwise_softmax",
    "predict_cloud",
    "preset",
    "qkv_project",
    "relation_descriptors",
    "relevance_matrix",
    "run_suite",
    "sample_anchors",
    "write_dataset",
    "save_model",
    "save_teacher",
    "save_textbank",
    "score_cloud",
    "self_attention",
    "text_attention_features",
    "total_loss",
    "train",
    "weighted_nll",
]
