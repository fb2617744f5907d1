"""Experiment configuration: one document that drives every stage.

An :class:`ExperimentConfig` bundles the scene, radio, noise and
preprocessing settings together with the dataset shape, the model grids
and the master seed. It round-trips through JSON, which is also how run
manifests are written.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from .learn.models import FAMILIES, TASKS
from .preprocess import PreprocessConfig
from .raytrace import RadioConfig
from .scene import SceneConfig


class NoiseConfig(BaseModel):
    """Receiver noise: direct variance or an SNR target.

    Exactly one of ``sigma_sq`` and ``snr_db`` must be set. An SNR target
    is resolved against the traffic-free channel power at the first
    receiver, using the mean received training-sample power. Each packet
    carries ``estimates_per_packet`` independent channel estimates that
    are averaged, mirroring a preamble with repeated training symbols.
    """

    sigma_sq: float | None = Field(default=None, ge=0.0)
    snr_db: float | None = 25.0
    estimates_per_packet: int = Field(default=2, ge=1, le=4)

    @model_validator(mode="after")
    def _exactly_one(self) -> "NoiseConfig":
        if (self.sigma_sq is None) == (self.snr_db is None):
            raise ValueError("set exactly one of sigma_sq and snr_db")
        return self


class ModelGridConfig(BaseModel):
    """One model family to evaluate, with its hyperparameter grid."""

    family: str
    task: str
    grid: dict[str, list] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _known_family_task(self) -> "ModelGridConfig":
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        return self


def default_models() -> list[ModelGridConfig]:
    """All four families on both tasks with the standard search grids."""
    ensemble_grid = {"n_estimators": [100, 300], "max_depth": [8, 16, None]}
    boosting_grid = {"n_stages": [100, 300], "max_depth": [8, 16, None]}
    knn_grid = {"n_neighbors": [3, 5, 9]}
    out: list[ModelGridConfig] = []
    for task in ("classify", "regress"):
        out.append(ModelGridConfig(family="knn", task=task, grid=dict(knn_grid)))
        out.append(ModelGridConfig(family="random_forest", task=task,
                                   grid=dict(ensemble_grid)))
        out.append(ModelGridConfig(family="extra_trees", task=task,
                                   grid=dict(ensemble_grid)))
        out.append(ModelGridConfig(family="gradient_boosting", task=task,
                                   grid=dict(boosting_grid)))
    return out


class ExperimentConfig(BaseModel):
    scene: SceneConfig = Field(default_factory=SceneConfig)
    radio: RadioConfig = Field(default_factory=RadioConfig)
    noise: NoiseConfig = Field(default_factory=NoiseConfig)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)

    dataset_size: int = Field(default=2000, ge=1)
    episode_length: int = Field(default=50, ge=1)
    # per-episode density draw; None pins every episode to scene.density
    density_range: tuple[float, float] | None = (0.0, 10.0)
    # every k-th episode is recorded traffic-free, which both anchors the
    # background profile and guarantees zero-count snapshots; None disables
    calibration_every: int | None = Field(default=10, ge=1)
    # longitudinal span whose vehicles are counted; None spans the antennas
    count_region: tuple[float, float] | None = None
    gamma: float | Literal["median"] = "median"
    receivers: int = Field(default=2, ge=1)

    models: list[ModelGridConfig] = Field(default_factory=default_models)
    cv_folds: int = Field(default=10, ge=2)
    seed: int = 0
    workers: int = Field(default=1, ge=1)
    output_dir: str = "runs/latest"

    @model_validator(mode="after")
    def _cross_checks(self) -> "ExperimentConfig":
        if self.dataset_size < 10 * self.cv_folds:
            raise ValueError(
                f"dataset_size must be at least 10 * cv_folds "
                f"({10 * self.cv_folds}), got {self.dataset_size}"
            )
        if self.receivers > len(self.scene.rx_positions):
            raise ValueError(
                f"receivers={self.receivers} but the scene defines only "
                f"{len(self.scene.rx_positions)} antenna positions"
            )
        if self.density_range is not None:
            lo, hi = self.density_range
            if lo < 0 or hi < lo:
                raise ValueError(f"invalid density_range {self.density_range}")
        if self.count_region is not None:
            lo, hi = self.count_region
            if hi <= lo:
                raise ValueError(f"invalid count_region {self.count_region}")
        if not isinstance(self.gamma, str) and self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        return self
