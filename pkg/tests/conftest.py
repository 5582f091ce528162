"""Shared fixtures. The overfit run is expensive, so it is session-scoped."""

import time

import pytest

from affordkit.datagen import gen_dataset, gen_textbank
from affordkit.metrics import evaluate
from affordkit.model import make_teacher
from affordkit.trainer import preset, train

OVERFIT_LABELS = ("grasp", "pour", "contain", "cut")


@pytest.fixture(scope="session")
def overfit_run():
    """One full training run on a small fixed dataset, reused by every
    test that needs a converged model: 16 clouds, 4 labels, 300 optimizer
    steps at the default desk configuration."""
    config = preset("desk", epochs=300, seed=7)
    clouds = gen_dataset(
        16, config.n_points, seed=42,
        label_set=OVERFIT_LABELS, families=("mug", "bottle", "knife"),
    )
    bank = gen_textbank(OVERFIT_LABELS, config.embed_dim, seed=13)
    teacher = make_teacher(config.encoder_config(), config.head_dim, seed=99)

    start = time.perf_counter()
    model, report = train(clouds, bank, teacher, config)
    seconds = time.perf_counter() - start

    return {
        "labels": OVERFIT_LABELS,
        "clouds": clouds,
        "bank": bank,
        "teacher": teacher,
        "config": config,
        "model": model,
        "report": report,
        "eval": evaluate(clouds, bank, model),
        "seconds": seconds,
    }
