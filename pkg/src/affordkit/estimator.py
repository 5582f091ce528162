"""Scikit-learn style front door for the whole pipeline.

``AffordanceSegmenter`` wraps text-bank generation, teacher construction,
training, and inference behind the familiar ``fit`` / ``predict`` /
``transform`` / ``score`` surface, so the detector composes with sklearn
tooling (``clone``, ``get_params``, grid-search loops).  X is a list of
point arrays (or labeled clouds); y is a list of per-point label-index
arrays aligned with ``labels``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .datagen import DEFAULT_LABELS, gen_textbank
from .errors import ConfigError, DimensionError
from .metrics import EvalReport, evaluate
from .model import make_teacher, predict_cloud, score_cloud
from .pointcloud import PointCloud
from .trainer import preset, train


def _as_clouds(X, y=None) -> list[PointCloud]:
    if isinstance(X, PointCloud):
        X = [X]
    elif isinstance(X, np.ndarray) and X.ndim == 2:
        X = [X]
    clouds = []
    for i, item in enumerate(X):
        labels = None
        if y is not None:
            if len(y) != len(X):
                raise DimensionError(f"X has {len(X)} clouds but y has {len(y)} label arrays")
            labels = np.asarray(y[i])
        if isinstance(item, PointCloud):
            clouds.append(item if labels is None else PointCloud(item.coords, labels))
        else:
            clouds.append(PointCloud(np.asarray(item, dtype=np.float64), labels))
    if not clouds:
        raise ConfigError("need at least one cloud")
    return clouds


class AffordanceSegmenter(BaseEstimator):
    """Open-vocabulary per-point affordance labeling as an sklearn estimator.

    Parameters mirror the training configuration; ``None`` means "use the
    preset's value".  ``labels`` fixes the affordance vocabulary; the text
    bank and the frozen teacher are generated deterministically from
    ``seed`` during ``fit``.

    Fitted attributes: ``model_``, ``bank_``, ``teacher_``, ``classes_``,
    ``report_``, ``config_``.
    """

    def __init__(
        self,
        labels=DEFAULT_LABELS,
        preset="desk",
        lambda_a=None,
        lambda_t=None,
        lr=None,
        weight_decay=None,
        epochs=None,
        batch_size=None,
        r=None,
        k=None,
        activation=None,
        geo_norm=None,
        distill_target=None,
        that_mode=None,
        teacher_gain=3.0,
        synonym_groups=None,
        seed=0,
    ):
        self.labels = labels
        self.preset = preset
        self.lambda_a = lambda_a
        self.lambda_t = lambda_t
        self.lr = lr
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.batch_size = batch_size
        self.r = r
        self.k = k
        self.activation = activation
        self.geo_norm = geo_norm
        self.distill_target = distill_target
        self.that_mode = that_mode
        self.teacher_gain = teacher_gain
        self.synonym_groups = synonym_groups
        self.seed = seed

    # ------------------------------------------------------------------

    def _config(self):
        overrides = {
            name: getattr(self, name)
            for name in (
                "lambda_a", "lambda_t", "lr", "weight_decay", "epochs", "batch_size",
                "r", "k", "activation", "geo_norm", "distill_target", "that_mode",
            )
            if getattr(self, name) is not None
        }
        overrides["seed"] = self.seed
        return preset(self.preset, **overrides)

    def fit(self, X, y):
        """Train a fresh student on labeled clouds."""
        config = self._config()
        clouds = _as_clouds(X, y)
        ss = np.random.SeedSequence((self.seed, 101))
        bank_ss, teacher_ss = ss.spawn(2)
        # SeedSequence children seed the generators directly
        bank = gen_textbank(
            tuple(self.labels), config.embed_dim,
            seed=int(bank_ss.generate_state(1)[0]),
            synonym_groups=self.synonym_groups,
        )
        teacher = make_teacher(
            config.encoder_config(), config.head_dim, teacher_ss, gain=self.teacher_gain
        )
        model, report = train(clouds, bank, teacher, config)
        self.config_ = config
        self.bank_ = bank
        self.teacher_ = teacher
        self.model_ = model
        self.report_ = report
        self.classes_ = np.arange(bank.m)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "this AffordanceSegmenter is not fitted yet; call fit first"
            )

    def predict(self, X):
        """Per-point label indices; a list of arrays, or one array for one cloud."""
        self._check_fitted()
        single = isinstance(X, (PointCloud, np.ndarray)) and not isinstance(X, list)
        clouds = _as_clouds(X)
        out = [predict_cloud(self.model_, c, self.bank_) for c in clouds]
        return out[0] if single else out

    def decision_function(self, X):
        """Per-point relevance scores against every label, (n, m) per cloud."""
        self._check_fitted()
        single = isinstance(X, (PointCloud, np.ndarray)) and not isinstance(X, list)
        clouds = _as_clouds(X)
        out = [score_cloud(self.model_, c, self.bank_) for c in clouds]
        return out[0] if single else out

    def transform(self, X):
        """Per-point embeddings, (n, embed_dim) per cloud."""
        self._check_fitted()
        from .model import embed_cloud

        single = isinstance(X, (PointCloud, np.ndarray)) and not isinstance(X, list)
        clouds = _as_clouds(X)
        out = [embed_cloud(self.model_, c) for c in clouds]
        return out[0] if single else out

    def score(self, X, y):
        """Mean intersection-over-union on labeled clouds."""
        return self.evaluate(X, y).result.miou

    def evaluate(self, X, y, bank=None) -> EvalReport:
        """Full metric report, optionally against a replacement text bank."""
        self._check_fitted()
        clouds = _as_clouds(X, y)
        return evaluate(clouds, self.bank_ if bank is None else bank, self.model_)
