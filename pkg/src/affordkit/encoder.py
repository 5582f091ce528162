"""Per-point feature encoders mapping a cloud to n×D embeddings.

Architecture (student and teacher share it; the teacher simply runs at twice
the hidden width with frozen weights): a shared per-point tanh MLP lifts each
point's coordinates, every point's features are concatenated with the
element-wise maximum over its ``neighborhood_k`` nearest neighbors' features,
and a final shared linear layer maps to the embedding dimension.  The result
is permutation-equivariant and locality-aware, and every stage is smooth, so
finite-difference gradient checks stay meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .checkpoint import load_blob, require_kind, save_blob
from .errors import CheckpointShapeError, ConfigError, NumericError
from .pointcloud import PointCloud, knn

_ROLES = ("student", "teacher")


@dataclass(frozen=True)
class EncoderConfig:
    embed_dim: int
    hidden_widths: tuple[int, ...] = (32, 32)
    neighborhood_k: int = 8
    role: str = "student"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.embed_dim < 1:
            raise ConfigError(f"embed_dim must be ≥ 1, got {self.embed_dim}")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hidden widths must all be ≥ 1, got {self.hidden_widths}")
        if self.neighborhood_k < 1:
            raise ConfigError(f"neighborhood_k must be ≥ 1, got {self.neighborhood_k}")
        if self.role not in _ROLES:
            raise ConfigError(f"role must be one of {_ROLES}, got {self.role!r}")

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "hidden_widths": list(self.hidden_widths),
            "neighborhood_k": self.neighborhood_k,
            "role": self.role,
        }

    @staticmethod
    def from_dict(d: dict) -> "EncoderConfig":
        return EncoderConfig(
            embed_dim=int(d["embed_dim"]),
            hidden_widths=tuple(d["hidden_widths"]),
            neighborhood_k=int(d["neighborhood_k"]),
            role=str(d["role"]),
        )


def layer_dims(config: EncoderConfig) -> list[tuple[str, int, int]]:
    """(name, fan_in, fan_out) for every linear map, in forward order."""
    dims = []
    prev = 3
    for i, w in enumerate(config.hidden_widths):
        dims.append((f"mlp{i}", prev, w))
        prev = w
    dims.append(("head", 2 * prev, config.embed_dim))
    return dims


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_weights(config: EncoderConfig, seed) -> tape.ParamSet:
    """Seeded Glorot-uniform weights (|w| ≤ √(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)
    params = tape.ParamSet()
    for name, fan_in, fan_out in layer_dims(config):
        params.add(f"{name}.w", _glorot(rng, fan_in, fan_out))
        params.add(f"{name}.b", np.zeros(fan_out))
    return params


def pooling_neighbors(cloud: PointCloud, config: EncoderConfig) -> np.ndarray:
    """(n, neighborhood_k) index array of each point's nearest neighbors."""
    n = cloud.n
    if config.neighborhood_k > n - 1:
        raise ConfigError(
            f"neighborhood_k={config.neighborhood_k} needs at least "
            f"{config.neighborhood_k + 1} points, cloud has {n}"
        )
    return knn(cloud, np.arange(n), config.neighborhood_k).neighbor_indices


def _checked(t: tape.Tensor, layer: str) -> tape.Tensor:
    if not np.all(np.isfinite(t.value)):
        raise NumericError(f"non-finite activations in layer {layer!r}")
    return t


def encode_graph(
    cloud: PointCloud,
    params: tape.ParamSet,
    config: EncoderConfig,
    neighbors: np.ndarray | None = None,
) -> tape.Tensor:
    """Differentiable forward pass; ``neighbors`` may be precomputed and cached."""
    if neighbors is None:
        neighbors = pooling_neighbors(cloud, config)
    h = tape.constant(cloud.coords)
    for i in range(len(config.hidden_widths)):
        h = _checked(
            tape.tanh(tape.matmul(h, params[f"mlp{i}.w"]) + params[f"mlp{i}.b"]), f"mlp{i}"
        )
    pooled = tape.max_(tape.gather_rows(h, neighbors), axis=1)
    cat = tape.concat([h, pooled], axis=1)
    return _checked(tape.matmul(cat, params["head.w"]) + params["head.b"], "head")


def encode(
    cloud: PointCloud,
    params: tape.ParamSet,
    config: EncoderConfig,
    neighbors: np.ndarray | None = None,
) -> np.ndarray:
    """Plain-array forward pass (no gradient bookkeeping for frozen encoders)."""
    return encode_graph(cloud, params, config, neighbors).value


def save_checkpoint(params: tape.ParamSet, config: EncoderConfig, path: str) -> None:
    save_blob(path, "encoder", config.to_dict(), {n: t.value for n, t in params.items()})


def load_checkpoint(path: str) -> tuple[tape.ParamSet, EncoderConfig]:
    kind, config_dict, tensors = load_blob(path)
    require_kind(path, kind, "encoder")
    config = EncoderConfig.from_dict(config_dict)
    return params_from_tensors(tensors, config, path), config


def params_from_tensors(
    tensors: dict[str, np.ndarray], config: EncoderConfig, origin: str
) -> tape.ParamSet:
    """Validate loaded tensors against the config's layer plan."""
    params = tape.ParamSet()
    for name, fan_in, fan_out in layer_dims(config):
        for suffix, shape in ((".w", (fan_in, fan_out)), (".b", (fan_out,))):
            key = name + suffix
            if key not in tensors:
                raise CheckpointShapeError(f"{origin}: missing tensor {key!r}")
            arr = tensors[key]
            if arr.shape != shape:
                raise CheckpointShapeError(
                    f"{origin}: tensor {key!r} has shape {arr.shape}, config implies {shape}"
                )
            params.add(key, arr)
    return params
