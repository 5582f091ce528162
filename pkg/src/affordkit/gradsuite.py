"""Named end-to-end gradient checks over every trainable parameter.

Each case rebuilds one training-objective term as a scalar graph over a small
fixed fixture (random cloud, pseudo text bank, frozen teacher) and compares
every analytic gradient entry against central finite differences.  The suite
is what the ``gradcheck`` command runs; it is deliberately exhaustive rather
than sampled, so keep the fixture dimensions small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attndistill import (
    attention_transfer_loss_graph,
    attention_weights_graph,
    qkv_project_graph,
    self_attention_graph,
)
from .datagen import gen_textbank
from .encoder import encode_graph
from .errors import ConfigError
from .geodistill import geo_transfer_loss_graph, relation_descriptors_graph
from .model import make_teacher
from .numerics import GradCheckReport, grad_check
from .pointcloud import PointCloud
from .trainer import TrainConfig, build_cache, total_loss
from .textcorr import (
    correlation_weights_graph,
    pointwise_softmax_graph,
    relevance_matrix_graph,
    text_attention_features_graph,
    weighted_nll_graph,
)

SUITE_LABELS = ("grasp", "pour", "contain", "cut")


@dataclass(frozen=True)
class SuiteResult:
    reports: dict[str, GradCheckReport]

    @property
    def max_rel_error(self) -> float:
        return max(r.max_rel_error for r in self.reports.values())

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values())

    @property
    def worst_case(self) -> str:
        return max(self.reports, key=lambda name: self.reports[name].max_rel_error)


def run_suite(
    seed: int = 0,
    n_points: int = 32,
    embed_dim: int = 8,
    hidden_widths: tuple[int, ...] = (8,),
    neighborhood_k: int = 4,
    head_dim: int = 8,
    num_labels: int = 4,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> SuiteResult:
    """Check point, attention, geometry, and combined objectives."""
    if num_labels < 1 or num_labels > len(SUITE_LABELS):
        raise ConfigError(f"num_labels must be in 1..{len(SUITE_LABELS)}, got {num_labels}")
    config = TrainConfig(
        embed_dim=embed_dim,
        hidden_widths=hidden_widths,
        neighborhood_k=neighborhood_k,
        head_dim=head_dim,
        n_points=n_points,
        r=0.25,
        k=min(8, n_points - 1),
        seed=seed,
    )
    ss = np.random.SeedSequence((seed, 17))
    cloud_ss, label_ss, model_ss, teacher_ss = ss.spawn(4)
    rng = np.random.default_rng(cloud_ss)
    labels = np.random.default_rng(label_ss).integers(0, num_labels, size=n_points)
    cloud = PointCloud(rng.normal(size=(n_points, 3)), labels)
    bank = gen_textbank(SUITE_LABELS[:num_labels], embed_dim, seed=seed)
    teacher = make_teacher(config.encoder_config(), head_dim, teacher_ss)
    cache = build_cache(cloud, teacher, config)

    from .model import init_model

    model = init_model(config.encoder_config(), head_dim, "sigmoid", "literal", model_ss)
    params = model.trainable()
    omega = np.ones(bank.m)

    def encode(p):
        return encode_graph(cloud, model.enc_params, model.enc_config, cache.pool_neighbors)

    def point_loss(p):
        emb = encode(p)
        w = correlation_weights_graph(bank.embeddings, emb, "sigmoid")
        that = text_attention_features_graph(
            bank.embeddings, emb, w, "sigmoid", "literal", bank.labels
        )
        a = relevance_matrix_graph(emb, that)
        s = pointwise_softmax_graph(a, model.tau)
        return weighted_nll_graph(s, cloud.labels, omega)

    def attention_loss(p):
        emb = encode(p)
        q, k, v = qkv_project_graph(
            emb, model.proj_params["wq"], model.proj_params["wk"], model.proj_params["wv"]
        )
        return attention_transfer_loss_graph(
            self_attention_graph(q, k, v), cache.teacher_attention
        )

    def attention_weight_loss(p):
        emb = encode(p)
        q, k, _ = qkv_project_graph(
            emb, model.proj_params["wq"], model.proj_params["wk"], model.proj_params["wv"]
        )
        target = np.full((n_points, n_points), 1.0 / n_points)
        return attention_transfer_loss_graph(attention_weights_graph(q, k), target)

    def geometry_loss(p):
        emb = encode(p)
        rel = relation_descriptors_graph(cache.coord_offsets, emb, cache.anchors)
        return geo_transfer_loss_graph(rel, cache.teacher_relations)

    def combined_loss(p):
        return total_loss(cloud, bank, teacher, model, config, omega=omega, cache=cache)[0]

    cases = {
        "point_nll": point_loss,
        "attention_transfer": attention_loss,
        "attention_weight_transfer": attention_weight_loss,
        "geometry_transfer": geometry_loss,
        "combined_objective": combined_loss,
    }
    return SuiteResult(
        reports={name: grad_check(fn, params, h=h, tol=tol) for name, fn in cases.items()}
    )
