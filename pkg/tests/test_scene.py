import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from dsrcsense.scene import (
    Scene,
    SceneConfig,
    VehicleClass,
    count_vehicles,
    generate_scene,
    label_intensity,
    lane_center,
    write_scene_csv,
)


def ring_gap(a, b, length):
    d = abs(a - b) % length
    return min(d, length - d)


def test_generation_is_deterministic(scene_config):
    s1 = generate_scene(scene_config, 3)
    s2 = generate_scene(scene_config, 3)
    np.testing.assert_array_equal(s1.lane, s2.lane)
    np.testing.assert_array_equal(s1.class_index, s2.class_index)
    np.testing.assert_array_equal(s1.x, s2.x)


def test_different_seeds_differ():
    a = generate_scene(SceneConfig(rng_seed=1, density=8.0))
    b = generate_scene(SceneConfig(rng_seed=2, density=8.0))
    assert a.n_vehicles != b.n_vehicles or not np.array_equal(a.x, b.x)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_min_gap_holds_within_every_lane(seed):
    config = SceneConfig(rng_seed=seed, density=9.0, min_gap=1.5)
    scene = generate_scene(config)
    dims = scene.dimensions()
    for lane in range(config.lane_count):
        members = np.nonzero(scene.lane == lane)[0]
        for i in members:
            for j in members:
                if i >= j:
                    continue
                gap = ring_gap(scene.x[i], scene.x[j], config.road_length)
                needed = (dims[i, 0] + dims[j, 0]) / 2.0 + config.min_gap
                assert gap >= needed - 1e-9


def test_advection_shifts_positions_modulo_length(scene_config):
    base = generate_scene(scene_config, 0)
    later = generate_scene(scene_config, 17)
    shift = 17 * scene_config.speed * scene_config.snapshot_interval
    expected = (base.x + shift) % scene_config.road_length
    np.testing.assert_allclose(later.x, expected, atol=1e-12)
    np.testing.assert_array_equal(later.lane, base.lane)
    np.testing.assert_array_equal(later.class_index, base.class_index)


def test_zero_density_gives_empty_scene():
    scene = generate_scene(SceneConfig(rng_seed=0, density=0.0))
    assert scene.n_vehicles == 0
    lo, hi = scene.boxes()
    assert lo.shape == (0, 3) and hi.shape == (0, 3)


def test_boxes_match_class_dimensions(scene_config):
    scene = generate_scene(scene_config)
    lo, hi = scene.boxes()
    dims = scene.dimensions()
    np.testing.assert_allclose(hi - lo, dims, atol=1e-12)
    # boxes rest on the ground, centered on their lane line
    np.testing.assert_allclose(lo[:, 2], 0.0, atol=1e-12)
    centers_y = (lo[:, 1] + hi[:, 1]) / 2.0
    expected_y = [lane_center(scene.config, ln) for ln in scene.lane]
    np.testing.assert_allclose(centers_y, expected_y, atol=1e-12)


def test_lane_centers_are_symmetric():
    config = SceneConfig()
    centers = [lane_center(config, ln) for ln in range(config.lane_count)]
    assert abs(sum(centers)) < 1e-12
    assert centers == sorted(centers)


def test_count_vehicles_half_open_region():
    config = SceneConfig()
    scene = Scene(config=config, snapshot=0,
                  lane=np.array([0, 0, 0]),
                  class_index=np.array([0, 0, 0]),
                  x=np.array([10.0, 50.0, 80.0]))
    assert count_vehicles(scene) == 3
    assert count_vehicles(scene, (10.0, 80.0)) == 2  # upper bound excluded
    assert count_vehicles(scene, (10.5, 50.0)) == 0
    assert count_vehicles(scene, (0.0, 10.0)) == 0


def test_label_intensity_threshold():
    assert label_intensity(5, 4.0) == 1
    assert label_intensity(4, 4.0) == -1  # count must exceed gamma
    assert label_intensity(0, 0.0) == -1
    with pytest.raises(ValueError):
        label_intensity(-1, 4.0)


def test_vehicle_mix_must_sum_to_one():
    with pytest.raises(ValidationError):
        SceneConfig(vehicle_mix=[
            VehicleClass(name="car", probability=0.5,
                         length=4.0, width=1.8, height=1.5),
        ])


def test_walls_must_clear_the_road():
    with pytest.raises(ValidationError):
        SceneConfig(lane_count=4, lane_width=3.5, wall_offset=7.0)


def test_scene_csv_round_trip(scene_config):
    scenes = [generate_scene(scene_config, k) for k in range(3)]
    buf = io.StringIO()
    rows = write_scene_csv(scenes, buf)
    assert rows == sum(s.n_vehicles for s in scenes)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "snapshot,lane,class,x"
    assert len(lines) == rows + 1
    first = lines[1].split(",")
    assert first[0] == "0"
    assert first[2] in ("car", "bus", "truck")
    assert 0.0 <= float(first[3]) <= scene_config.road_length


def test_long_vehicle_skipped_when_segment_too_short():
    config = SceneConfig(
        road_length=10.0,
        density=50.0,
        rng_seed=3,
        vehicle_mix=[VehicleClass(name="roadtrain", probability=1.0,
                                  length=12.0, width=2.5, height=4.0)],
    )
    assert generate_scene(config).n_vehicles == 0
