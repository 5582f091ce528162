"""Point encoder: init, forward pass, invariances, and checkpoint files."""

import numpy as np
import pytest

from affordkit import tape
from affordkit.encoder import (
    EncoderConfig,
    encode,
    encode_graph,
    init_weights,
    layer_dims,
    load_checkpoint,
    params_from_tensors,
    pooling_neighbors,
    save_checkpoint,
)
from affordkit.errors import CheckpointShapeError, ConfigError, NumericError
from affordkit.numerics import grad_check
from affordkit.pointcloud import PointCloud


def _forward_oracle(coords, params, config):
    """Per-point loop restatement of the forward pass, no shared code."""
    n = coords.shape[0]
    h = coords.copy()
    for i in range(len(config.hidden_widths)):
        h = np.tanh(h @ params[f"mlp{i}.w"].value + params[f"mlp{i}.b"].value)
    pooled = np.empty_like(h)
    for i in range(n):
        d = np.sum((coords - coords[i]) ** 2, axis=1)
        d[i] = np.inf
        nearest = np.argsort(d, kind="stable")[: config.neighborhood_k]
        pooled[i] = h[nearest].max(axis=0)
    cat = np.concatenate([h, pooled], axis=1)
    return cat @ params["head.w"].value + params["head.b"].value


def _cloud(rng, n):
    return PointCloud(rng.normal(size=(n, 3)))


class TestConfig:
    def test_layer_plan(self):
        config = EncoderConfig(embed_dim=8, hidden_widths=(16, 32), neighborhood_k=4)
        assert layer_dims(config) == [("mlp0", 3, 16), ("mlp1", 16, 32), ("head", 64, 8)]

    def test_dict_round_trip(self):
        config = EncoderConfig(embed_dim=8, hidden_widths=(16,), neighborhood_k=4, role="teacher")
        assert EncoderConfig.from_dict(config.to_dict()) == config

    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            EncoderConfig(embed_dim=0)
        with pytest.raises(ConfigError):
            EncoderConfig(embed_dim=4, hidden_widths=())
        with pytest.raises(ConfigError):
            EncoderConfig(embed_dim=4, neighborhood_k=0)
        with pytest.raises(ConfigError):
            EncoderConfig(embed_dim=4, role="oracle")


class TestInit:
    def test_deterministic(self):
        config = EncoderConfig(embed_dim=8)
        a, b = init_weights(config, 3), init_weights(config, 3)
        for name in a.names():
            np.testing.assert_array_equal(a[name].value, b[name].value)

    def test_seed_changes_weights(self):
        config = EncoderConfig(embed_dim=8)
        a, b = init_weights(config, 3), init_weights(config, 4)
        assert not np.array_equal(a["mlp0.w"].value, b["mlp0.w"].value)

    def test_uniform_bound_and_zero_biases(self):
        config = EncoderConfig(embed_dim=8, hidden_widths=(8,))
        params = init_weights(config, 0)
        limit = np.sqrt(6.0 / (3 + 8))
        w = params["mlp0.w"].value
        assert np.all(np.abs(w) <= limit)
        assert np.abs(w).max() > 0.5 * limit  # actually fills the range
        np.testing.assert_array_equal(params["mlp0.b"].value, np.zeros(8))
        np.testing.assert_array_equal(params["head.b"].value, np.zeros(8))


class TestForward:
    def test_loop_oracle(self):
        rng = np.random.default_rng(11)
        config = EncoderConfig(embed_dim=5, hidden_widths=(7, 6), neighborhood_k=3)
        params = init_weights(config, 12)
        cloud = _cloud(rng, 20)
        np.testing.assert_allclose(
            encode(cloud, params, config),
            _forward_oracle(cloud.coords, params, config),
            rtol=0,
            atol=1e-12,
        )

    def test_golden_fixture(self):
        # frozen reference output: init seed 2024, unit tetrahedron corners
        config = EncoderConfig(embed_dim=2, hidden_widths=(3,), neighborhood_k=1)
        params = init_weights(config, 2024)
        coords = np.array(
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        )
        expected = np.array(
            [
                [-0.17819682340300858, 0.37669464983870965],
                [-0.33919867124374165, 0.7168841248365911],
                [-0.22343820419224208, 0.09126214262623647],
                [0.24801015917595837, 0.5144114431426614],
            ]
        )
        np.testing.assert_allclose(encode(PointCloud(coords), params, config), expected, atol=1e-12)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(21)
        config = EncoderConfig(embed_dim=6, hidden_widths=(8,), neighborhood_k=4)
        params = init_weights(config, 22)
        cloud = _cloud(rng, 24)
        base = encode(cloud, params, config)
        for _ in range(5):
            perm = rng.permutation(cloud.n)
            shuffled = encode(PointCloud(cloud.coords[perm]), params, config)
            np.testing.assert_allclose(shuffled, base[perm], atol=1e-9)

    def test_locality_of_distant_clusters(self):
        # two clusters 100 apart, k=3 < cluster size: perturbing one cluster
        # must leave the other cluster's embeddings untouched
        rng = np.random.default_rng(31)
        config = EncoderConfig(embed_dim=4, hidden_widths=(6,), neighborhood_k=3)
        params = init_weights(config, 32)
        near = rng.normal(size=(6, 3))
        far = rng.normal(size=(6, 3)) + 100.0
        moved = far.copy()
        moved[0] += 0.5
        a = encode(PointCloud(np.vstack([near, far])), params, config)
        b = encode(PointCloud(np.vstack([near, moved])), params, config)
        np.testing.assert_array_equal(a[:6], b[:6])
        assert not np.array_equal(a[6:], b[6:])

    def test_identical_points_get_identical_embeddings(self):
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 41)
        coords = np.array([[1.0, 2.0, 3.0]] * 3 + [[0.0, 0.0, 0.0]])
        emb = encode(PointCloud(coords), params, config)
        np.testing.assert_array_equal(emb[0], emb[1])
        np.testing.assert_array_equal(emb[0], emb[2])

    def test_neighborhood_needs_enough_points(self):
        config = EncoderConfig(embed_dim=4, neighborhood_k=8)
        params = init_weights(config, 0)
        cloud = _cloud(np.random.default_rng(0), 5)
        with pytest.raises(ConfigError, match="neighborhood_k=8"):
            encode(cloud, params, config)

    def test_nonfinite_weights_name_the_layer(self):
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 0)
        params["head.w"].value = params["head.w"].value * np.nan
        cloud = _cloud(np.random.default_rng(1), 6)
        with pytest.raises(NumericError, match="'head'"):
            encode(cloud, params, config)

    def test_precomputed_neighbors_match(self):
        rng = np.random.default_rng(51)
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=3)
        params = init_weights(config, 52)
        cloud = _cloud(rng, 12)
        nb = pooling_neighbors(cloud, config)
        np.testing.assert_array_equal(encode(cloud, params, config), encode(cloud, params, config, nb))

    def test_gradients_against_finite_differences(self):
        rng = np.random.default_rng(61)
        config = EncoderConfig(embed_dim=3, hidden_widths=(4,), neighborhood_k=2)
        params = init_weights(config, 62)
        cloud = _cloud(rng, 7)
        weights = rng.normal(size=(7, 3))

        def loss(p):
            return tape.sum_(encode_graph(cloud, p, config) * tape.constant(weights))

        report = grad_check(loss, params)
        assert report.passed, report.worst_param


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 71)
        path = str(tmp_path / "enc.bin")
        save_checkpoint(params, config, path)
        loaded_params, loaded_config = load_checkpoint(path)
        assert loaded_config == config
        for name in params.names():
            np.testing.assert_allclose(
                loaded_params[name].value, params[name].value.astype("<f4"), rtol=0, atol=0
            )

    def test_loaded_encoder_reproduces_outputs(self, tmp_path):
        # float32 storage: outputs agree to storage precision, not exactly
        rng = np.random.default_rng(81)
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 82)
        cloud = _cloud(rng, 9)
        path = str(tmp_path / "enc.bin")
        save_checkpoint(params, config, path)
        loaded_params, loaded_config = load_checkpoint(path)
        np.testing.assert_allclose(
            encode(cloud, loaded_params, loaded_config), encode(cloud, params, config), atol=1e-5
        )

    def test_shape_mismatch_between_config_and_tensors(self):
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 0)
        tensors = {n: t.value for n, t in params.items()}
        tensors["head.w"] = tensors["head.w"][:, :2]
        with pytest.raises(CheckpointShapeError, match="head.w"):
            params_from_tensors(tensors, config, "mem")

    def test_missing_tensor(self):
        config = EncoderConfig(embed_dim=4, hidden_widths=(5,), neighborhood_k=2)
        params = init_weights(config, 0)
        tensors = {n: t.value for n, t in params.items()}
        del tensors["mlp0.b"]
        with pytest.raises(CheckpointShapeError, match="mlp0.b"):
            params_from_tensors(tensors, config, "mem")
