"""Shared fixtures: small configurations that keep pipeline tests fast."""

import numpy as np
import pytest

from dsrcsense.config import ExperimentConfig, ModelGridConfig
from dsrcsense.raytrace import RadioConfig
from dsrcsense.scene import SceneConfig


@pytest.fixture
def radio():
    return RadioConfig()


@pytest.fixture
def scene_config():
    return SceneConfig(rng_seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_small_config(out_dir, **overrides):
    """An end-to-end config small enough for unit tests (sub-second synth)."""
    base = dict(
        dataset_size=24,
        episode_length=6,
        density_range=(0.0, 8.0),
        calibration_every=2,
        receivers=1,
        cv_folds=2,
        seed=11,
        workers=1,
        output_dir=str(out_dir),
        noise={"snr_db": 25.0, "estimates_per_packet": 1},
        models=[
            ModelGridConfig(family="knn", task="classify",
                            grid={"n_neighbors": [1, 3]}),
            ModelGridConfig(family="knn", task="regress",
                            grid={"n_neighbors": [3]}),
        ],
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture
def small_config(tmp_path):
    return make_small_config(tmp_path / "run")
