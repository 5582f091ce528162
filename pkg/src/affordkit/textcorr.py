"""Text-point correlation head: label embeddings → per-point label scores.

Pipeline: correlation weights w = σ(T·Pᵀ), per-label attention features T̂
aggregated from point features, a cosine relevance matrix A between points
and T̂ rows, a temperature softmax across labels, and a class-weighted
negative log-likelihood.  The activation σ and the T̂ aggregation rule are
configurable; defaults are sigmoid (strictly positive, so the aggregation
denominator can never vanish) and the element-wise form
T̂_i = Σ_j σ(w_ij·P_j) / Σ_j w_ij.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass

import numpy as np

from . import tape
from .errors import (
    ConfigError,
    DatasetFormatError,
    DegenerateCorrelationError,
    DegenerateInputWarning,
    DimensionError,
    LabelError,
)

ACTIVATIONS = ("sigmoid", "relu", "identity")
THAT_MODES = ("literal", "weighted_mean", "relevance_only")

TAU_INIT = float(np.log(1.0 / 0.07))  # ≈ 2.6593
TAU_MIN = 1e-3

TEXTBANK_FORMAT = "affordkit-textbank"
TEXTBANK_VERSION = 1


@dataclass(frozen=True)
class TextBank:
    """Ordered affordance labels with one embedding row per label."""

    labels: tuple[str, ...]
    embeddings: np.ndarray  # (m, D)
    normalized: bool = False

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ConfigError("text bank needs at least one label")
        if any(not s for s in labels):
            raise ConfigError("text bank labels must be non-empty")
        if len(set(labels)) != len(labels):
            raise ConfigError("text bank labels must be unique")
        emb = np.array(self.embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[0] != len(labels):
            raise DimensionError(
                f"embeddings must be ({len(labels)}, D), got {emb.shape}"
            )
        if not np.all(np.isfinite(emb)):
            raise ConfigError("text bank embeddings contain non-finite values")
        if self.normalized:
            norms = np.linalg.norm(emb, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ConfigError("normalized flag set but rows are not unit length")
        emb.setflags(write=False)
        object.__setattr__(self, "embeddings", emb)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def embed_dim(self) -> int:
        return self.embeddings.shape[1]


def save_textbank(bank: TextBank, directory: str) -> None:
    """Write the label list as JSON and the embedding matrix as binary32."""
    os.makedirs(directory, exist_ok=True)
    meta = {
        "format": TEXTBANK_FORMAT,
        "version": TEXTBANK_VERSION,
        "embed_dim": bank.embed_dim,
        "labels": list(bank.labels),
        "normalized": bank.normalized,
    }
    with open(os.path.join(directory, "textbank.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, sort_keys=True, separators=(",", ":"))
    bank.embeddings.astype("<f4").tofile(os.path.join(directory, "textbank.bin"))


def load_textbank(directory: str) -> TextBank:
    meta_path = os.path.join(directory, "textbank.json")
    bin_path = os.path.join(directory, "textbank.bin")
    if not os.path.exists(meta_path) or not os.path.exists(bin_path):
        raise DatasetFormatError(f"no text bank at {directory}")
    try:
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise DatasetFormatError(f"{meta_path}: unreadable ({e})") from e
    if meta.get("format") != TEXTBANK_FORMAT or meta.get("version") != TEXTBANK_VERSION:
        raise DatasetFormatError(f"{meta_path}: unrecognized format/version")
    labels = meta["labels"]
    d = int(meta["embed_dim"])
    flat = np.fromfile(bin_path, dtype="<f4")
    if flat.size != len(labels) * d:
        raise DatasetFormatError(
            f"{bin_path}: {flat.size} values, expected {len(labels) * d}"
        )
    emb = flat.astype(np.float64).reshape(len(labels), d)
    return TextBank(labels=tuple(labels), embeddings=emb, normalized=bool(meta["normalized"]))


def _apply_activation(x: tape.Tensor, activation: str) -> tape.Tensor:
    if activation == "sigmoid":
        return tape.sigmoid(x)
    if activation == "relu":
        return tape.relu(x)
    if activation == "identity":
        return x
    raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")


def correlation_weights_graph(
    text: np.ndarray, embeddings: tape.Tensor, activation: str
) -> tape.Tensor:
    """w_{i,j} = σ(T_i · P_j), an m×n matrix."""
    if text.shape[1] != embeddings.value.shape[1]:
        raise DimensionError(
            f"text dim {text.shape[1]} does not match embedding dim {embeddings.value.shape[1]}"
        )
    return _apply_activation(
        tape.matmul(tape.constant(text), tape.transpose(embeddings)), activation
    )


def correlation_weights(
    bank: TextBank, embeddings: np.ndarray, activation: str = "sigmoid"
) -> np.ndarray:
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise DimensionError(f"embeddings must be 2-D, got shape {emb.shape}")
    return correlation_weights_graph(bank.embeddings, tape.constant(emb), activation).value


def text_attention_features_graph(
    text: np.ndarray,
    embeddings: tape.Tensor,
    weights: tape.Tensor,
    activation: str,
    that_mode: str = "literal",
    labels: tuple[str, ...] | None = None,
) -> tape.Tensor:
    """Per-label aggregated point features T̂, an m×D matrix."""
    if that_mode not in THAT_MODES:
        raise ConfigError(f"that_mode must be one of {THAT_MODES}, got {that_mode!r}")
    if that_mode == "relevance_only":
        return tape.constant(text)  # bypass aggregation: score against raw label rows
    m, n = weights.value.shape
    denom = tape.sum_(weights, axis=1, keepdims=True)  # (m, 1)
    sums = np.asarray(denom.value).reshape(-1)
    if np.any(sums == 0.0):
        i = int(np.flatnonzero(sums == 0.0)[0])
        label = labels[i] if labels is not None else f"#{i}"
        raise DegenerateCorrelationError(
            f"correlation weights for label {label!r} sum to zero"
        )
    if that_mode == "weighted_mean":
        return tape.matmul(weights, embeddings) / denom
    scaled = tape.reshape(weights, (m, n, 1)) * tape.reshape(
        embeddings, (1, n, embeddings.value.shape[1])
    )
    return tape.sum_(_apply_activation(scaled, activation), axis=1) / denom


def text_attention_features(
    bank: TextBank,
    embeddings: np.ndarray,
    weights: np.ndarray,
    activation: str = "sigmoid",
    that_mode: str = "literal",
) -> np.ndarray:
    emb = tape.constant(np.asarray(embeddings, dtype=np.float64))
    w = tape.constant(np.asarray(weights, dtype=np.float64))
    if w.value.shape != (bank.m, emb.value.shape[0]):
        raise DimensionError(
            f"weights must be ({bank.m}, {emb.value.shape[0]}), got {w.value.shape}"
        )
    return text_attention_features_graph(
        bank.embeddings, emb, w, activation, that_mode, bank.labels
    ).value


def relevance_matrix_graph(embeddings: tape.Tensor, that: tape.Tensor) -> tape.Tensor:
    """Cosine of every point row against every T̂ row, n×m (unclamped, smooth)."""
    pn = tape.sqrt(tape.sum_(embeddings * embeddings, axis=1, keepdims=True))
    tn = tape.sqrt(tape.sum_(that * that, axis=1, keepdims=True))
    return tape.matmul(embeddings / pn, tape.transpose(that / tn))


def relevance_matrix(embeddings: np.ndarray, that: np.ndarray) -> np.ndarray:
    """Array-level relevance with zero-norm guarding and [-1, 1] clamping."""
    p = np.asarray(embeddings, dtype=np.float64)
    t = np.asarray(that, dtype=np.float64)
    if p.ndim != 2 or t.ndim != 2 or p.shape[1] != t.shape[1]:
        raise DimensionError(f"incompatible shapes {p.shape} and {t.shape}")
    pn = np.linalg.norm(p, axis=1, keepdims=True)
    tn = np.linalg.norm(t, axis=1, keepdims=True)
    if np.any(pn == 0.0) or np.any(tn == 0.0):
        warnings.warn(
            "zero-norm row in relevance computation, treating as uncorrelated",
            DegenerateInputWarning,
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        a = (p / np.where(pn == 0.0, 1.0, pn)) @ (t / np.where(tn == 0.0, 1.0, tn)).T
    a[pn.reshape(-1) == 0.0, :] = 0.0
    a[:, tn.reshape(-1) == 0.0] = 0.0
    return np.clip(a, -1.0, 1.0)


def pointwise_softmax_graph(a: tape.Tensor, tau: tape.Tensor) -> tape.Tensor:
    return tape.softmax_rows(a / tau)


def pointwise_softmax(a: np.ndarray, tau: float) -> np.ndarray:
    """Per-point softmax across labels of A/τ."""
    if tau <= 0:
        raise ConfigError(f"temperature must be positive, got {tau}")
    return tape.softmax_rows_values(np.asarray(a, dtype=np.float64) / tau)


def weighted_nll_graph(
    s: tape.Tensor, ground_truth: np.ndarray, omega: np.ndarray
) -> tape.Tensor:
    """−Σ_j ω[y_j] · log S[j, y_j], with the log argument floored at 1e-300."""
    y = np.asarray(ground_truth)
    picked = tape.take_per_row(s, y)
    w = tape.constant(np.asarray(omega, dtype=np.float64)[y])
    return -tape.sum_(w * tape.log(tape.clip(picked, 1e-300, np.inf)))


def weighted_nll(s: np.ndarray, ground_truth: np.ndarray, omega: np.ndarray) -> float:
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(ground_truth)
    if y.ndim != 1 or y.shape[0] != s.shape[0]:
        raise DimensionError(f"ground truth must be ({s.shape[0]},), got {y.shape}")
    if y.size and (y.min() < 0 or y.max() >= s.shape[1]):
        raise LabelError(f"label index out of range for {s.shape[1]} classes")
    return float(weighted_nll_graph(tape.constant(s), y, omega).value)


def predict(a: np.ndarray) -> np.ndarray:
    """Per-point argmax over labels; ties resolve to the lowest label index."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError(f"relevance matrix must be 2-D, got shape {a.shape}")
    return np.argmax(a, axis=1).astype(np.int64)
