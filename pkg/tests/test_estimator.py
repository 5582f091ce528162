"""Scikit-learn estimator facade: params, clone, fit/predict/transform/score."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from affordkit.datagen import gen_dataset
from affordkit.estimator import AffordanceSegmenter

LABELS = ("grasp", "pour", "contain", "cut")


def _xy(num_clouds=4, n=64, seed=60):
    clouds = gen_dataset(
        num_clouds, n, seed=seed, label_set=LABELS, families=("mug", "bottle", "knife")
    )
    return [c.coords for c in clouds], [c.labels for c in clouds]


def _fast_params():
    return dict(labels=LABELS, epochs=3, batch_size=4, seed=1)


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        est = AffordanceSegmenter(labels=LABELS, lr=0.5, epochs=7)
        params = est.get_params()
        assert params["lr"] == 0.5
        assert params["epochs"] == 7
        rebuilt = AffordanceSegmenter(**params)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        est = AffordanceSegmenter()
        est.set_params(lr=0.25, preset="paper")
        assert est.lr == 0.25 and est.preset == "paper"

    def test_clone_drops_fitted_state(self):
        X, y = _xy()
        est = AffordanceSegmenter(**_fast_params()).fit(X, y)
        fresh = clone(est)
        assert fresh.get_params() == est.get_params()
        assert not hasattr(fresh, "model_")

    def test_predict_before_fit_raises(self):
        X, _ = _xy()
        with pytest.raises(NotFittedError):
            AffordanceSegmenter().predict(X)


class TestFitPredict:
    def test_end_to_end_shapes(self):
        X, y = _xy()
        est = AffordanceSegmenter(**_fast_params()).fit(X, y)
        assert list(est.classes_) == [0, 1, 2, 3]
        assert len(est.report_) == 3

        preds = est.predict(X)
        assert len(preds) == len(X)
        for p, x in zip(preds, X):
            assert p.shape == (x.shape[0],)
            assert p.min() >= 0 and p.max() < len(LABELS)

        scores = est.decision_function(X)
        assert scores[0].shape == (X[0].shape[0], len(LABELS))

        emb = est.transform(X)
        assert emb[0].shape == (X[0].shape[0], est.config_.embed_dim)

        miou = est.score(X, y)
        assert 0.0 <= miou <= 1.0

    def test_single_array_convenience(self):
        X, y = _xy()
        est = AffordanceSegmenter(**_fast_params()).fit(X, y)
        single = est.predict(X[0])
        assert isinstance(single, np.ndarray)
        np.testing.assert_array_equal(single, est.predict([X[0]])[0])

    def test_deterministic_across_instances(self):
        X, y = _xy()
        a = AffordanceSegmenter(**_fast_params()).fit(X, y)
        b = AffordanceSegmenter(**_fast_params()).fit(X, y)
        for pa, pb in zip(a.predict(X), b.predict(X)):
            np.testing.assert_array_equal(pa, pb)

    def test_seed_changes_model(self):
        X, y = _xy()
        a = AffordanceSegmenter(**_fast_params()).fit(X, y)
        b = AffordanceSegmenter(**{**_fast_params(), "seed": 2}).fit(X, y)
        assert not np.array_equal(
            a.model_.enc_params["mlp0.w"].value, b.model_.enc_params["mlp0.w"].value
        )

    def test_mismatched_xy_lengths(self):
        X, y = _xy()
        from affordkit.errors import DimensionError

        with pytest.raises(DimensionError):
            AffordanceSegmenter(**_fast_params()).fit(X, y[:-1])

    def test_ablated_transfer_terms_need_no_teacher_targets(self):
        X, y = _xy()
        est = AffordanceSegmenter(**_fast_params(), lambda_a=0.0, lambda_t=0.0).fit(X, y)
        assert est.report_[-1]["l_att"] == 0.0
        assert est.report_[-1]["l_geo"] == 0.0

    def test_evaluate_against_replacement_bank(self):
        X, y = _xy()
        est = AffordanceSegmenter(**_fast_params()).fit(X, y)
        from affordkit.datagen import gen_textbank

        synonyms = gen_textbank(
            ("grab", "fill", "hold-inside", "slice"),
            est.config_.embed_dim,
            seed=5,
            synonym_groups=[
                ["grasp", "grab"], ["pour", "fill"],
                ["contain", "hold-inside"], ["cut", "slice"],
            ],
        )
        report = est.evaluate(X, y, bank=synonyms)
        assert 0.0 <= report.result.miou <= 1.0
        assert report.labels == ("grab", "fill", "hold-inside", "slice")
