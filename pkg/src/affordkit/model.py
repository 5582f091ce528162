"""Trainable student bundle, frozen teacher bundle, and their checkpoints.

A student bundle owns the encoder weights, the attention projector, and the
temperature, exposed as one prefixed parameter set (``enc.*``, ``proj.*``,
``tau``) so the optimizer and gradient checks see every trainable leaf.  The
teacher bundle holds the same structure at twice the hidden width, minus the
temperature, and is never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tape
from .attndistill import init_projector, qkv_project_graph, self_attention_graph
from .checkpoint import CheckpointShapeError, load_blob, require_kind, save_blob
from .encoder import EncoderConfig, encode_graph, init_weights, params_from_tensors
from .errors import ConfigError, DimensionError
from .pointcloud import PointCloud
from .textcorr import (
    TAU_INIT,
    TextBank,
    correlation_weights_graph,
    predict,
    relevance_matrix,
    text_attention_features_graph,
)

_PROJ_KEYS = ("wq", "wk", "wv")


@dataclass
class Model:
    """Student: encoder + projector + temperature, with training-time flags."""

    enc_config: EncoderConfig
    head_dim: int
    activation: str
    that_mode: str
    enc_params: tape.ParamSet
    proj_params: tape.ParamSet
    tau: tape.Tensor

    def trainable(self) -> tape.ParamSet:
        """One view over every trainable leaf; tensors are shared, not copied."""
        out = tape.ParamSet()
        for name, t in self.enc_params.items():
            out.add_tensor(f"enc.{name}", t)
        for name, t in self.proj_params.items():
            out.add_tensor(f"proj.{name}", t)
        out.add_tensor("tau", self.tau)
        return out


@dataclass(frozen=True)
class Teacher:
    """Frozen fixture: same architecture family at 2× hidden width."""

    enc_config: EncoderConfig
    head_dim: int
    enc_params: tape.ParamSet
    proj_params: tape.ParamSet


def init_model(
    enc_config: EncoderConfig, head_dim: int, activation: str, that_mode: str, seed
) -> Model:
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    enc_seed, proj_seed = ss.spawn(2)
    return Model(
        enc_config=enc_config,
        head_dim=head_dim,
        activation=activation,
        that_mode=that_mode,
        enc_params=init_weights(enc_config, enc_seed),
        proj_params=init_projector(enc_config.embed_dim, head_dim, proj_seed),
        tau=tape.parameter(np.array(TAU_INIT), name="tau"),
    )


def make_teacher(
    student_config: EncoderConfig, head_dim: int, seed, gain: float = 3.0
) -> Teacher:
    """Deterministic frozen teacher at 2× the student's hidden widths, same D.

    ``gain`` scales the encoder weight matrices so the frozen features (and
    hence the distillation targets) have O(1) magnitude instead of the
    near-zero output a freshly initialised network produces.
    """
    if gain <= 0.0:
        raise ConfigError(f"teacher gain must be positive, got {gain}")
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    enc_seed, proj_seed = ss.spawn(2)
    config = EncoderConfig(
        embed_dim=student_config.embed_dim,
        hidden_widths=tuple(2 * w for w in student_config.hidden_widths),
        neighborhood_k=student_config.neighborhood_k,
        role="teacher",
    )
    enc_params = init_weights(config, enc_seed)
    for name, p in enc_params.items():
        if name.endswith(".w"):
            p.value = p.value * gain
    return Teacher(
        enc_config=config,
        head_dim=head_dim,
        enc_params=enc_params,
        proj_params=init_projector(config.embed_dim, head_dim, proj_seed),
    )


# ---------------------------------------------------------------------------
# checkpoints


def _proj_tensors(proj: tape.ParamSet) -> dict[str, np.ndarray]:
    return {f"proj.{k}": proj[k].value for k in _PROJ_KEYS}


def _proj_from_tensors(tensors: dict, embed_dim: int, head_dim: int, origin: str) -> tape.ParamSet:
    proj = tape.ParamSet()
    for k in _PROJ_KEYS:
        key = f"proj.{k}"
        if key not in tensors:
            raise CheckpointShapeError(f"{origin}: missing tensor {key!r}")
        arr = tensors[key]
        if arr.shape != (embed_dim, head_dim):
            raise CheckpointShapeError(
                f"{origin}: tensor {key!r} has shape {arr.shape}, "
                f"config implies {(embed_dim, head_dim)}"
            )
        proj.add(k, arr)
    return proj


def save_model(model: Model, path: str) -> None:
    config = {
        "encoder": model.enc_config.to_dict(),
        "head_dim": model.head_dim,
        "activation": model.activation,
        "that_mode": model.that_mode,
    }
    tensors = {f"enc.{n}": t.value for n, t in model.enc_params.items()}
    tensors.update(_proj_tensors(model.proj_params))
    tensors["tau"] = model.tau.value
    save_blob(path, "model", config, tensors)


def load_model(path: str) -> Model:
    kind, config, tensors = load_blob(path)
    require_kind(path, kind, "model")
    enc_config = EncoderConfig.from_dict(config["encoder"])
    head_dim = int(config["head_dim"])
    enc_tensors = {n[len("enc."):]: a for n, a in tensors.items() if n.startswith("enc.")}
    if "tau" not in tensors or tensors["tau"].shape != ():
        raise CheckpointShapeError(f"{path}: missing or non-scalar tau")
    return Model(
        enc_config=enc_config,
        head_dim=head_dim,
        activation=str(config["activation"]),
        that_mode=str(config["that_mode"]),
        enc_params=params_from_tensors(enc_tensors, enc_config, path),
        proj_params=_proj_from_tensors(tensors, enc_config.embed_dim, head_dim, path),
        tau=tape.parameter(tensors["tau"], name="tau"),
    )


def save_teacher(teacher: Teacher, path: str) -> None:
    config = {"encoder": teacher.enc_config.to_dict(), "head_dim": teacher.head_dim}
    tensors = {f"enc.{n}": t.value for n, t in teacher.enc_params.items()}
    tensors.update(_proj_tensors(teacher.proj_params))
    save_blob(path, "teacher", config, tensors)


def load_teacher(path: str) -> Teacher:
    kind, config, tensors = load_blob(path)
    require_kind(path, kind, "teacher")
    enc_config = EncoderConfig.from_dict(config["encoder"])
    head_dim = int(config["head_dim"])
    enc_tensors = {n[len("enc."):]: a for n, a in tensors.items() if n.startswith("enc.")}
    return Teacher(
        enc_config=enc_config,
        head_dim=head_dim,
        enc_params=params_from_tensors(enc_tensors, enc_config, path),
        proj_params=_proj_from_tensors(tensors, enc_config.embed_dim, head_dim, path),
    )


# ---------------------------------------------------------------------------
# inference


def embed_cloud(model: Model, cloud: PointCloud, neighbors: np.ndarray | None = None) -> np.ndarray:
    """Student embeddings for one cloud, (n, D)."""
    return encode_graph(cloud, model.enc_params, model.enc_config, neighbors).value


def score_cloud(
    model: Model, cloud: PointCloud, bank: TextBank, neighbors: np.ndarray | None = None
) -> np.ndarray:
    """Relevance matrix A (n×m) of one cloud against a text bank."""
    if bank.embed_dim != model.enc_config.embed_dim:
        raise DimensionError(
            f"text bank dim {bank.embed_dim} does not match model dim "
            f"{model.enc_config.embed_dim}"
        )
    p = tape.constant(embed_cloud(model, cloud, neighbors))
    w = correlation_weights_graph(bank.embeddings, p, model.activation)
    that = text_attention_features_graph(
        bank.embeddings, p, w, model.activation, model.that_mode, bank.labels
    )
    return relevance_matrix(p.value, that.value)


def predict_cloud(
    model: Model, cloud: PointCloud, bank: TextBank, neighbors: np.ndarray | None = None
) -> np.ndarray:
    """Per-point label indices into the bank's label list."""
    return predict(score_cloud(model, cloud, bank, neighbors))


def teacher_embed(teacher: Teacher, cloud: PointCloud, neighbors: np.ndarray | None = None) -> np.ndarray:
    return encode_graph(cloud, teacher.enc_params, teacher.enc_config, neighbors).value


def teacher_attention(teacher: Teacher, embeddings: np.ndarray) -> np.ndarray:
    """Frozen Ω for distillation targets."""
    p = tape.constant(embeddings)
    q, k, v = qkv_project_graph(
        p, teacher.proj_params["wq"], teacher.proj_params["wk"], teacher.proj_params["wv"]
    )
    return self_attention_graph(q, k, v).value
