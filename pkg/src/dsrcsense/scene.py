"""Traffic scene synthesis on a multi-lane road segment.

A scene is a set of vehicles, each an axis-aligned box assigned to a lane
on a straight segment of road flanked by two walls (an urban canyon). The
segment is treated as a ring for placement and motion: vehicles placed at
snapshot 0 advect at a common speed and wrap at the segment end, so the
traffic density of a snapshot sequence stays constant over time.

Placement is per lane: a Poisson-distributed vehicle count is drawn from
the configured density, then positions are sampled uniformly and rejected
until a minimum bumper-to-bumper gap holds along the ring.

Axes: x runs along the road, y across it (lane centers straddle y = 0),
z is height above ground.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from .seeding import rng_for

Vec3 = tuple[float, float, float]

# Attempts per vehicle before the placement gives up on a draw. Only
# relevant near saturation density; unsaturated lanes place in one or two.
_PLACEMENT_ATTEMPTS = 200


class VehicleClass(BaseModel):
    """A vehicle category with fixed box dimensions (meters)."""

    name: str
    probability: float = Field(ge=0.0, le=1.0)
    length: float = Field(gt=0.0)
    width: float = Field(gt=0.0)
    height: float = Field(gt=0.0)


def default_vehicle_mix() -> list[VehicleClass]:
    return [
        VehicleClass(name="car", probability=0.8, length=4.60, width=1.80, height=1.60),
        VehicleClass(name="bus", probability=0.1, length=9.00, width=2.40, height=3.20),
        VehicleClass(name="truck", probability=0.1, length=12.00, width=2.50, height=4.30),
    ]


class SceneConfig(BaseModel):
    """Road geometry, traffic statistics and antenna placement."""

    road_length: float = Field(default=120.0, gt=0.0)
    lane_count: int = Field(default=4, ge=1)
    lane_width: float = Field(default=3.5, gt=0.0)
    wall_offset: float = Field(default=15.0, gt=0.0)
    vehicle_mix: list[VehicleClass] = Field(default_factory=default_vehicle_mix)
    density: float = Field(default=5.0, ge=0.0)
    min_gap: float = Field(default=1.0, ge=0.0)
    speed: float = Field(default=10.0, ge=0.0)
    snapshot_interval: float = Field(default=0.1, gt=0.0)
    # mid-road transmitter with a receiver at each end: every tx-rx
    # diagonal crosses all lanes over half the road, so together the
    # pair covers the full monitored region while either one alone
    # sees only half of it
    tx_position: Vec3 = (60.0, -10.0, 1.5)
    rx_positions: list[Vec3] = Field(
        default_factory=lambda: [(0.0, 10.0, 1.5), (120.0, 10.0, 1.5)]
    )

    rng_seed: int = 0

    @field_validator("vehicle_mix")
    @classmethod
    def _mix_nonempty(cls, mix: list[VehicleClass]) -> list[VehicleClass]:
        if not mix:
            raise ValueError("vehicle_mix must contain at least one class")
        return mix

    @field_validator("rx_positions")
    @classmethod
    def _rx_nonempty(cls, rx: list[Vec3]) -> list[Vec3]:
        if not rx:
            raise ValueError("rx_positions must contain at least one receiver")
        return rx

    @model_validator(mode="after")
    def _check_mix_probabilities(self) -> "SceneConfig":
        total = sum(c.probability for c in self.vehicle_mix)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(
                f"vehicle_mix probabilities must sum to 1, got {total!r}"
            )
        return self

    @model_validator(mode="after")
    def _check_walls_clear_road(self) -> "SceneConfig":
        half_road = self.lane_count * self.lane_width / 2.0
        if self.wall_offset <= half_road:
            raise ValueError(
                "wall_offset must exceed the road half-width "
                f"({self.wall_offset} <= {half_road})"
            )
        return self


def lane_center(config: SceneConfig, lane: int) -> float:
    """y coordinate of a lane's centerline."""
    return (lane - (config.lane_count - 1) / 2.0) * config.lane_width


@dataclass
class Scene:
    """Vehicles on the road at one snapshot, stored as parallel arrays."""

    config: SceneConfig
    snapshot: int
    lane: np.ndarray  # (n,) int
    class_index: np.ndarray  # (n,) int, into config.vehicle_mix
    x: np.ndarray  # (n,) float, box centers along the road

    @property
    def n_vehicles(self) -> int:
        return int(self.x.size)

    def class_names(self) -> list[str]:
        mix = self.config.vehicle_mix
        return [mix[i].name for i in self.class_index]

    def dimensions(self) -> np.ndarray:
        """(n, 3) array of (length, width, height) per vehicle."""
        mix = self.config.vehicle_mix
        dims = np.array([[c.length, c.width, c.height] for c in mix], dtype=float)
        if self.n_vehicles == 0:
            return np.zeros((0, 3))
        return dims[self.class_index]

    def boxes(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding boxes as (lo, hi) arrays of shape (n, 3).

        Boxes sit on the ground (z from 0 to vehicle height) centered on
        the lane line. Along x a box may straddle the segment seam after
        advection; callers treat x modulo the segment length.
        """
        dims = self.dimensions()
        y = np.array([lane_center(self.config, ln) for ln in self.lane], dtype=float)
        centers = np.column_stack([self.x, y, dims[:, 2] / 2.0])
        half = np.column_stack([dims[:, 0] / 2.0, dims[:, 1] / 2.0, dims[:, 2] / 2.0])
        return centers - half, centers + half


def _ring_distance(a: float, b: np.ndarray, circumference: float) -> np.ndarray:
    d = np.abs(a - b) % circumference
    return np.minimum(d, circumference - d)


def _place_lane(config: SceneConfig, lane: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw one lane's vehicles: (class_index, x) sorted by position."""
    rng = rng_for(config.rng_seed, "lane", lane)
    probs = np.array([c.probability for c in config.vehicle_mix], dtype=float)
    probs = probs / probs.sum()
    mean_count = config.density * config.road_length / 100.0
    n = int(rng.poisson(mean_count))
    classes = rng.choice(len(probs), size=n, p=probs) if n else np.zeros(0, int)

    lengths = np.array([c.length for c in config.vehicle_mix], dtype=float)
    placed_x: list[float] = []
    placed_len: list[float] = []
    kept_class: list[int] = []
    for ci in classes:
        size = lengths[ci]
        lo, hi = size / 2.0, config.road_length - size / 2.0
        if hi <= lo:
            continue  # vehicle longer than the segment
        for _ in range(_PLACEMENT_ATTEMPTS):
            x = rng.uniform(lo, hi)
            if placed_x:
                gaps = _ring_distance(x, np.array(placed_x), config.road_length)
                needed = (size + np.array(placed_len)) / 2.0 + config.min_gap
                if np.any(gaps < needed):
                    continue
            placed_x.append(float(x))
            placed_len.append(float(size))
            kept_class.append(int(ci))
            break

    order = np.argsort(placed_x, kind="stable")
    return (
        np.array(kept_class, dtype=int)[order],
        np.array(placed_x, dtype=float)[order],
    )


def generate_scene(config: SceneConfig, snapshot: int = 0) -> Scene:
    """Generate the scene at a snapshot index.

    The snapshot-0 placement is fully determined by ``config.rng_seed``;
    later snapshots are the same vehicles advected by
    ``speed * snapshot_interval`` per step, wrapped at the segment end.
    """
    lanes: list[np.ndarray] = []
    classes: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    for lane in range(config.lane_count):
        ci, x = _place_lane(config, lane)
        lanes.append(np.full(ci.size, lane, dtype=int))
        classes.append(ci)
        xs.append(x)

    lane_arr = np.concatenate(lanes) if lanes else np.zeros(0, int)
    class_arr = np.concatenate(classes) if classes else np.zeros(0, int)
    x_arr = np.concatenate(xs) if xs else np.zeros(0, float)

    shift = snapshot * config.speed * config.snapshot_interval
    x_arr = (x_arr + shift) % config.road_length
    return Scene(config=config, snapshot=snapshot, lane=lane_arr,
                 class_index=class_arr, x=x_arr)


def count_vehicles(scene: Scene, region: tuple[float, float] | None = None) -> int:
    """Count vehicles whose center lies in ``[region[0], region[1])``.

    ``region`` defaults to the whole segment. The half-open convention
    means a vehicle sitting exactly on the upper bound is excluded.
    """
    if region is None:
        region = (0.0, scene.config.road_length)
    lo, hi = region
    return int(np.count_nonzero((scene.x >= lo) & (scene.x < hi)))


def label_intensity(count: int, gamma: float) -> int:
    """Two-class traffic intensity: +1 (heavy) iff ``count > gamma``."""
    if count < 0:
        raise ValueError(f"count must be nonnegative, got {count}")
    return 1 if count > gamma else -1


def write_scene_csv(scenes: Sequence[Scene], fh: IO[str]) -> int:
    """Write one row per vehicle: snapshot, lane, class, x. Returns rows."""
    writer = csv.writer(fh)
    writer.writerow(["snapshot", "lane", "class", "x"])
    rows = 0
    for scene in scenes:
        names = scene.class_names()
        for i in range(scene.n_vehicles):
            writer.writerow([scene.snapshot, int(scene.lane[i]), names[i],
                             repr(float(scene.x[i]))])
            rows += 1
    return rows
