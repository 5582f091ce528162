"""Single-head self-attention over point features and the attention-transfer loss.

Point embeddings are projected to query/key/value matrices; the attention
output Ω = softmax(QKᵀ/√d)·V is the distillation target by default
(``distill_target="weights"`` compares the pre-V softmax weights instead).
The scaling divisor uses the projection output width.
"""

from __future__ import annotations

import numpy as np

from . import tape
from .errors import ConfigError, DimensionError

DISTILL_TARGETS = ("omega", "weights")
_PROJ_NAMES = ("wq", "wk", "wv")


def init_projector(embed_dim: int, head_dim: int, seed, prefix: str = "") -> tape.ParamSet:
    """Seeded Glorot-uniform W_Q, W_K, W_V, each embed_dim×head_dim."""
    if embed_dim < 1 or head_dim < 1:
        raise ConfigError(f"projector dims must be ≥ 1, got {embed_dim}×{head_dim}")
    rng = np.random.default_rng(seed)
    limit = np.sqrt(6.0 / (embed_dim + head_dim))
    params = tape.ParamSet()
    for name in _PROJ_NAMES:
        params.add(prefix + name, rng.uniform(-limit, limit, size=(embed_dim, head_dim)))
    return params


def qkv_project_graph(
    embeddings: tape.Tensor, wq: tape.Tensor, wk: tape.Tensor, wv: tape.Tensor
) -> tuple[tape.Tensor, tape.Tensor, tape.Tensor]:
    return tape.matmul(embeddings, wq), tape.matmul(embeddings, wk), tape.matmul(embeddings, wv)


def qkv_project(
    embeddings: np.ndarray, projector: tape.ParamSet, prefix: str = ""
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plain matrix products P·W_Q, P·W_K, P·W_V."""
    emb = np.asarray(embeddings, dtype=np.float64)
    wq = projector[prefix + "wq"].value
    if emb.ndim != 2 or emb.shape[1] != wq.shape[0]:
        raise DimensionError(
            f"embeddings {emb.shape} do not match projector input dim {wq.shape[0]}"
        )
    q, k, v = qkv_project_graph(
        tape.constant(emb),
        projector[prefix + "wq"],
        projector[prefix + "wk"],
        projector[prefix + "wv"],
    )
    return q.value, k.value, v.value


def attention_weights_graph(q: tape.Tensor, k: tape.Tensor) -> tape.Tensor:
    """Row-stochastic attention weights softmax(QKᵀ/√d), d = projection width."""
    d = q.value.shape[1]
    logits = tape.matmul(q, tape.transpose(k)) / np.sqrt(float(d))
    return tape.softmax_rows(logits)


def self_attention_graph(q: tape.Tensor, k: tape.Tensor, v: tape.Tensor) -> tape.Tensor:
    return tape.matmul(attention_weights_graph(q, k), v)


def self_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Ω = softmax(QKᵀ/√d)·V with the stable row softmax."""
    q, k, v = (np.asarray(x, dtype=np.float64) for x in (q, k, v))
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise DimensionError(
            f"inconsistent attention shapes: Q{q.shape} K{k.shape} V{v.shape}"
        )
    return self_attention_graph(tape.constant(q), tape.constant(k), tape.constant(v)).value


def attention_transfer_loss_graph(
    omega_student: tape.Tensor, omega_teacher: np.ndarray
) -> tape.Tensor:
    if omega_student.value.shape != omega_teacher.shape:
        raise DimensionError(
            f"attention maps differ in shape: {omega_student.value.shape} vs {omega_teacher.shape}"
        )
    diff = omega_student - tape.constant(omega_teacher)
    return tape.mean(diff * diff)


def attention_transfer_loss(omega_student: np.ndarray, omega_teacher: np.ndarray) -> float:
    """Mean squared difference between student and teacher attention maps."""
    return float(
        attention_transfer_loss_graph(
            tape.constant(np.asarray(omega_student, dtype=np.float64)),
            np.asarray(omega_teacher, dtype=np.float64),
        ).value
    )
