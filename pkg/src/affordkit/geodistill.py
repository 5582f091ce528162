"""Geometric relation descriptors and the geometry-transfer loss.

Each anchor's descriptor is the neighborhood mean of (coordinate offset ⊕
feature offset): a Z×(3+D) matrix.  The transfer loss pulls the student's
descriptors toward the frozen teacher's.  The norm in the loss is read as
mean squared error by default (smooth gradients); ``geo_norm="l2"`` keeps the
literal per-row Euclidean-norm reading.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .errors import ConfigError, DimensionError
from .pointcloud import AnchorSet, PointCloud

GEO_NORMS = ("mse", "l2")


def coordinate_offsets(cloud: PointCloud, anchors: AnchorSet) -> np.ndarray:
    """Mean neighbor-minus-anchor coordinate offset per anchor, (Z, 3).

    Depends only on geometry, so training caches it once per cloud.
    """
    nb = cloud.coords[anchors.neighbor_indices]  # (Z, K, 3)
    return nb.mean(axis=1) - cloud.coords[anchors.anchor_indices]


def relation_descriptors_graph(
    coord_offsets: np.ndarray, embeddings: tape.Tensor, anchors: AnchorSet
) -> tape.Tensor:
    """Differentiable descriptors from a precomputed coordinate half."""
    nb = tape.gather_rows(embeddings, anchors.neighbor_indices)  # (Z, K, D)
    anchor_feats = tape.gather_rows(embeddings, anchors.anchor_indices)  # (Z, D)
    feat_offsets = tape.mean(nb, axis=1) - anchor_feats
    return tape.concat([tape.constant(coord_offsets), feat_offsets], axis=1)


def relation_descriptors(
    cloud: PointCloud, embeddings: np.ndarray, anchors: AnchorSet
) -> np.ndarray:
    """Z×(3+D) relation descriptors: mean coordinate offset ⊕ mean feature offset."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] != cloud.n:
        raise DimensionError(
            f"embeddings must be ({cloud.n}, D), got {embeddings.shape}"
        )
    return relation_descriptors_graph(
        coordinate_offsets(cloud, anchors), tape.constant(embeddings), anchors
    ).value


def geo_transfer_loss_graph(
    student_rel: tape.Tensor, teacher_rel: np.ndarray, geo_norm: str = "mse"
) -> tape.Tensor:
    if geo_norm not in GEO_NORMS:
        raise ConfigError(f"geo_norm must be one of {GEO_NORMS}, got {geo_norm!r}")
    if student_rel.value.shape != teacher_rel.shape:
        raise DimensionError(
            f"relation sets differ in shape: {student_rel.value.shape} vs {teacher_rel.shape}"
        )
    diff = student_rel - tape.constant(teacher_rel)
    if geo_norm == "mse":
        return tape.mean(diff * diff)
    z = teacher_rel.shape[0]
    return tape.sum_(tape.sqrt(tape.sum_(diff * diff, axis=1))) / float(z)


def geo_transfer_loss(
    student_rel: np.ndarray, teacher_rel: np.ndarray, geo_norm: str = "mse"
) -> float:
    """Average per-anchor descriptor discrepancy; 0 iff the sets are identical."""
    return float(
        geo_transfer_loss_graph(
            tape.constant(np.asarray(student_rel, dtype=np.float64)),
            np.asarray(teacher_rel, dtype=np.float64),
            geo_norm,
        ).value
    )
