"""Combined loss, Adam with decoupled weight decay, and the training loop.

The objective per cloud is

    L_total = L_point + λ_a · L_attention + λ_t · L_geometry

where the point term is the class-weighted NLL of the text-correlation head,
and the two transfer terms pull student attention maps and relation
descriptors toward the frozen teacher's.  Zero-λ terms are skipped entirely,
so an ablated run never touches the corresponding computation.

Everything downstream of the seed is deterministic: weight init, per-epoch
shuffling, and batching derive from one seed sequence, and per-cloud geometry
(anchors, pooling neighborhoods, teacher targets) is cached once up front.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import tape
from .attndistill import (
    DISTILL_TARGETS,
    attention_transfer_loss_graph,
    attention_weights_graph,
    qkv_project_graph,
    self_attention_graph,
)
from .encoder import EncoderConfig, encode_graph, pooling_neighbors
from .errors import ConfigError, DimensionError, NumericError
from .geodistill import (
    GEO_NORMS,
    coordinate_offsets,
    geo_transfer_loss_graph,
    relation_descriptors_graph,
)
from .metrics import ConfusionMatrix
from .model import Model, Teacher, init_model, teacher_attention, teacher_embed
from .pointcloud import AnchorSet, PointCloud, sample_anchors
from .textcorr import (
    ACTIVATIONS,
    TAU_MIN,
    THAT_MODES,
    TextBank,
    correlation_weights_graph,
    predict,
    pointwise_softmax_graph,
    relevance_matrix_graph,
    text_attention_features_graph,
    weighted_nll_graph,
)


@dataclass(frozen=True)
class TrainConfig:
    # model shape
    embed_dim: int = 32
    hidden_widths: tuple[int, ...] = (32, 32)
    neighborhood_k: int = 8
    head_dim: int = 16
    # loss weights and optimizer
    lambda_a: float = 0.9
    lambda_t: float = 0.7
    lr: float = 2e-2
    weight_decay: float = 1e-4
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    # geometry
    n_points: int = 256
    r: float = 0.25
    k: int = 16
    # head behavior
    activation: str = "sigmoid"
    geo_norm: str = "mse"
    distill_target: str = "omega"
    that_mode: str = "literal"
    # testing hook: compute zero-λ terms anyway and add λ·term (must be a no-op)
    force_all_terms: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.lambda_a < 0 or self.lambda_t < 0:
            raise ConfigError("loss weights must be ≥ 0")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be ≥ 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be ≥ 0, got {self.epochs}")
        if not 0.0 < self.r <= 1.0:
            raise ConfigError(f"r must be in (0, 1], got {self.r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.geo_norm not in GEO_NORMS:
            raise ConfigError(f"geo_norm must be one of {GEO_NORMS}, got {self.geo_norm!r}")
        if self.distill_target not in DISTILL_TARGETS:
            raise ConfigError(
                f"distill_target must be one of {DISTILL_TARGETS}, got {self.distill_target!r}"
            )
        if self.that_mode not in THAT_MODES:
            raise ConfigError(f"that_mode must be one of {THAT_MODES}, got {self.that_mode!r}")

    def encoder_config(self, role: str = "student") -> EncoderConfig:
        return EncoderConfig(
            embed_dim=self.embed_dim,
            hidden_widths=self.hidden_widths,
            neighborhood_k=self.neighborhood_k,
            role=role,
        )

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["hidden_widths"] = list(self.hidden_widths)
        return d


PRESETS = {
    # small enough to train in seconds on one CPU core
    "desk": TrainConfig(),
    # full-scale values; provided for completeness, not exercised by tests
    "paper": TrainConfig(
        embed_dim=512,
        hidden_widths=(256, 512),
        neighborhood_k=16,
        head_dim=64,
        lr=1e-3,
        weight_decay=1e-4,
        epochs=200,
        batch_size=16,
        n_points=2048,
        r=0.25,
        k=16,
    ),
}


def preset(name: str, **overrides) -> TrainConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}, choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides) if overrides else PRESETS[name]


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: tape.ParamSet, state: AdamState, lr: float, weight_decay: float) -> None:
    """One Adam update with bias correction.

    Decoupled weight decay θ ← θ − lr·γ·θ is applied before the moment update,
    and only to weight matrices (ndim ≥ 2) — never to biases or the
    temperature.  Any parameter named ``tau`` is clamped above TAU_MIN after
    the step.
    """
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        value = p.value
        if weight_decay > 0.0 and value.ndim >= 2:
            value = value - lr * weight_decay * value
        m = state.m.get(name)
        v = state.v.get(name)
        m = (1 - b1) * g if m is None else b1 * m + (1 - b1) * g
        v = (1 - b2) * (g * g) if v is None else b2 * v + (1 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.value = value - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        if name.split(".")[-1] == "tau":
            p.value = np.maximum(p.value, TAU_MIN)


# ---------------------------------------------------------------------------
# loss assembly


def class_weights(label_arrays, num_classes: int) -> np.ndarray:
    """Inverse-frequency weights ω_c = N_total / (m·N_c); absent classes get 1."""
    counts = np.zeros(num_classes, dtype=np.int64)
    for labels in label_arrays:
        if labels is None:
            raise ConfigError("class weights need labeled clouds")
        counts += np.bincount(np.asarray(labels), minlength=num_classes)[:num_classes]
    total = counts.sum()
    omega = np.ones(num_classes, dtype=np.float64)
    seen = counts > 0
    omega[seen] = total / (num_classes * counts[seen].astype(np.float64))
    return omega


@dataclass(frozen=True)
class CloudCache:
    """Per-cloud quantities that never change across epochs."""

    anchors: AnchorSet
    pool_neighbors: np.ndarray  # (n, neighborhood_k)
    coord_offsets: np.ndarray  # (Z, 3), shared by student and teacher
    teacher_relations: np.ndarray | None  # (Z, 3+D); None when λ_t = 0
    teacher_attention: np.ndarray | None  # Ω or weight matrix; None when λ_a = 0


def build_cache(cloud: PointCloud, teacher: Teacher | None, config: TrainConfig) -> CloudCache:
    anchors = sample_anchors(cloud, config.r, config.k)
    pool_nb = pooling_neighbors(cloud, config.encoder_config())
    offs = coordinate_offsets(cloud, anchors)
    need_geo = config.lambda_t > 0 or config.force_all_terms
    need_att = config.lambda_a > 0 or config.force_all_terms
    rel = att = None
    if teacher is not None and (need_geo or need_att):
        t_emb = teacher_embed(teacher, cloud)
        if need_geo:
            rel = relation_descriptors_graph(offs, tape.constant(t_emb), anchors).value
        if need_att:
            if config.distill_target == "omega":
                att = teacher_attention(teacher, t_emb)
            else:
                p = tape.constant(t_emb)
                q, k, _ = qkv_project_graph(
                    p, teacher.proj_params["wq"], teacher.proj_params["wk"],
                    teacher.proj_params["wv"],
                )
                att = attention_weights_graph(q, k).value
    return CloudCache(anchors, pool_nb, offs, rel, att)


def total_loss(
    cloud: PointCloud,
    bank: TextBank,
    teacher: Teacher | None,
    model: Model,
    config: TrainConfig,
    omega: np.ndarray | None = None,
    cache: CloudCache | None = None,
) -> tuple[tape.Tensor, dict]:
    """Full differentiable objective for one labeled cloud.

    Returns the scalar loss node and a component dict with float values plus
    the per-point argmax predictions from this forward pass.
    """
    if cloud.labels is None:
        raise ConfigError("training requires labeled clouds")
    if bank.embed_dim != model.enc_config.embed_dim:
        raise DimensionError(
            f"text bank dim {bank.embed_dim} != model dim {model.enc_config.embed_dim}"
        )
    if omega is None:
        omega = np.ones(bank.m)
    if cache is None:
        cache = build_cache(cloud, teacher, config)

    p = encode_graph(cloud, model.enc_params, model.enc_config, cache.pool_neighbors)

    w = correlation_weights_graph(bank.embeddings, p, model.activation)
    that = text_attention_features_graph(
        bank.embeddings, p, w, model.activation, model.that_mode, bank.labels
    )
    a = relevance_matrix_graph(p, that)
    s = pointwise_softmax_graph(a, model.tau)
    loss = weighted_nll_graph(s, cloud.labels, omega)
    components = {"l_point": float(loss.value)}

    need_att = config.lambda_a > 0 or config.force_all_terms
    need_geo = config.lambda_t > 0 or config.force_all_terms

    if need_att:
        if cache.teacher_attention is None:
            raise ConfigError("attention transfer requested but no teacher targets cached")
        q, k, v = qkv_project_graph(
            p, model.proj_params["wq"], model.proj_params["wk"], model.proj_params["wv"]
        )
        if config.distill_target == "omega":
            student_att = self_attention_graph(q, k, v)
        else:
            student_att = attention_weights_graph(q, k)
        l_att = attention_transfer_loss_graph(student_att, cache.teacher_attention)
        components["l_att"] = float(l_att.value)
        loss = loss + config.lambda_a * l_att
    else:
        components["l_att"] = None

    if need_geo:
        if cache.teacher_relations is None:
            raise ConfigError("geometry transfer requested but no teacher targets cached")
        student_rel = relation_descriptors_graph(cache.coord_offsets, p, cache.anchors)
        l_geo = geo_transfer_loss_graph(student_rel, cache.teacher_relations, config.geo_norm)
        components["l_geo"] = float(l_geo.value)
        loss = loss + config.lambda_t * l_geo
    else:
        components["l_geo"] = None

    components["l_total"] = float(loss.value)
    components["predictions"] = predict(a.value)
    return loss, components


# ---------------------------------------------------------------------------
# training loop


def train(
    clouds: list[PointCloud],
    bank: TextBank,
    teacher: Teacher | None,
    config: TrainConfig,
) -> tuple[Model, list[dict]]:
    """Train a fresh student on labeled clouds; returns (model, per-epoch report)."""
    if not clouds:
        raise ConfigError("training set is empty")
    if any(c.labels is None for c in clouds):
        raise ConfigError("every training cloud needs labels")
    needs_teacher = config.lambda_a > 0 or config.lambda_t > 0 or config.force_all_terms
    if needs_teacher:
        if teacher is None:
            raise ConfigError("transfer losses enabled but no teacher given")
        if teacher.enc_config.embed_dim != config.embed_dim:
            raise DimensionError(
                f"teacher embed dim {teacher.enc_config.embed_dim} != student {config.embed_dim}"
            )
        if teacher.head_dim != config.head_dim:
            raise DimensionError(
                f"teacher head dim {teacher.head_dim} != student {config.head_dim}"
            )
    if bank.embed_dim != config.embed_dim:
        raise DimensionError(f"text bank dim {bank.embed_dim} != student {config.embed_dim}")
    for i, c in enumerate(clouds):
        if int(c.labels.max()) >= bank.m:
            raise DimensionError(
                f"cloud {i} has label {int(c.labels.max())} but the bank lists {bank.m}"
            )

    ss = np.random.SeedSequence(config.seed)
    init_ss, shuffle_ss = ss.spawn(2)
    model = init_model(
        config.encoder_config(), config.head_dim, config.activation, config.that_mode, init_ss
    )
    omega = class_weights([c.labels for c in clouds], bank.m)
    caches = [build_cache(c, teacher, config) for c in clouds]
    params = model.trainable()
    state = AdamState()
    rng = np.random.default_rng(shuffle_ss)

    report: list[dict] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(clouds))
        sums = {"l_total": 0.0, "l_point": 0.0, "l_att": 0.0, "l_geo": 0.0}
        conf = ConfusionMatrix(bank.m)
        for b_start in range(0, len(order), config.batch_size):
            batch = order[b_start:b_start + config.batch_size]
            batch_index = b_start // config.batch_size
            params.zero_grad()
            batch_loss = None
            for ci in batch:
                loss, comps = total_loss(
                    clouds[ci], bank, teacher, model, config,
                    omega=omega, cache=caches[ci],
                )
                batch_loss = loss if batch_loss is None else batch_loss + loss
                for key in ("l_total", "l_point", "l_att", "l_geo"):
                    if comps[key] is not None:
                        sums[key] += comps[key]
                conf.accumulate(clouds[ci].labels, comps["predictions"])
            batch_loss = batch_loss / float(len(batch))
            if not np.isfinite(batch_loss.value):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}"
                )
            batch_loss.backward()
            adam_step(params, state, config.lr, config.weight_decay)
        n_clouds = float(len(clouds))
        report.append({
            "epoch": epoch,
            "l_total": sums["l_total"] / n_clouds,
            "l_point": sums["l_point"] / n_clouds,
            "l_att": sums["l_att"] / n_clouds,
            "l_geo": sums["l_geo"] / n_clouds,
            "train_acc": float(np.trace(conf.counts) / conf.total),
            "tau": float(model.tau.value),
        })
    return model, report
