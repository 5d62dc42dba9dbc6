import json

import numpy as np
import pytest

from losplace.environment import Building, Environment, find_initial_double_los
from losplace.errors import NoInitialPointError, NotPermissibleError
from losplace.geometry import build_frame

from conftest import point_in_any_footprint, random_prism_env, shapely_los


def box(x0, y0, x1, y1, h):
    return Building(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]), h)


def test_los_examples():
    env = Environment([], (0, 0, 100, 100), 0.0)
    assert env.los_visible((0, 0, 0), (10, 10, 100))

    env = Environment([box(4, -1, 6, 1, 50.0)], (-50, -50, 50, 50), 50.0)
    # altitude 16-24 m over the footprint, below the 50 m roof
    assert not env.los_visible((0, 0, 0), (10, 0, 40))
    # altitude 80-120 m over the footprint, above the roof
    assert env.los_visible((0, 0, 0), (10, 0, 200))


def test_los_symmetry_and_index_independence():
    rng = np.random.default_rng(7)
    env = random_prism_env(rng)
    for _ in range(200):
        a = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(0, 30)])
        b = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(0, 150)])
        v1 = env.los_visible(a, b)
        assert v1 == env.los_visible(b, a)
        assert v1 == env.los_visible(a, b, use_index=False)


def test_los_against_shapely_oracle():
    rng = np.random.default_rng(8)
    env = random_prism_env(rng)
    mismatches = 0
    for _ in range(500):
        a = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), 0.0])
        b = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(1, 160)])
        if env.los_visible(a, b) != shapely_los(env.buildings, a, b):
            mismatches += 1
    assert mismatches == 0


def test_batch_matches_scalar():
    rng = np.random.default_rng(9)
    env = random_prism_env(rng)
    a = np.array([5.0, -12.0, 0.0])
    pts = np.stack(
        [
            rng.uniform(-200, 200, 400),
            rng.uniform(-200, 200, 400),
            rng.uniform(0, 160, 400),
        ],
        axis=1,
    )
    batch = env.los_visible_batch(a, pts)
    scalar = np.array([env.los_visible(a, p) for p in pts])
    assert np.array_equal(batch, scalar)


def test_nonconvex_footprint():
    # L-shaped building: concave corner must still block correctly
    fp = np.array([[0, 0], [30, 0], [30, 10], [10, 10], [10, 30], [0, 30]], dtype=float)
    env = Environment([Building(fp, 40.0)], (-50, -50, 80, 80), 40.0)
    rng = np.random.default_rng(10)
    for _ in range(300):
        a = np.array([rng.uniform(-50, 80), rng.uniform(-50, 80), 0.0])
        b = np.array([rng.uniform(-50, 80), rng.uniform(-50, 80), rng.uniform(1, 90)])
        assert env.los_visible(a, b) == shapely_los(env.buildings, a, b)


def test_grazing_roof_is_visible():
    env = Environment([box(10, -5, 20, 5, 50.0)], (0, -50, 100, 50), 50.0)
    # segment passes exactly at roof height over the footprint
    assert env.los_visible((0, 0, 50.0), (30, 0, 50.0))
    assert not env.los_visible((0, 0, 49.9), (30, 0, 49.9))


def test_upward_invariance():
    rng = np.random.default_rng(11)
    env = random_prism_env(rng)
    checked = 0
    while checked < 2000:
        u = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), 0.0])
        p = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(1, 150)])
        if not env.los_visible(u, p):
            continue
        lift = p + np.array([0.0, 0.0, rng.uniform(0.1, 200)])
        assert env.los_visible(u, lift)
        checked += 1


def test_colinear_invariance_permissible_layer():
    rng = np.random.default_rng(12)
    env = random_prism_env(rng)
    checked = 0
    while checked < 2000:
        u = np.array([rng.uniform(-200, 200), rng.uniform(-200, 200), 0.0])
        p = np.array(
            [rng.uniform(-200, 200), rng.uniform(-200, 200), rng.uniform(env.h_min, env.h_min + 100)]
        )
        if not env.los_visible(u, p):
            continue
        rho = rng.uniform(1.0, 3.0)
        ext = u + rho * (p - u)
        assert env.los_visible(u, ext)
        checked += 1


def test_double_los():
    env = Environment([], (-100, -100, 100, 100), 80.0)
    u1 = np.array([0.0, -50.0, 0.0])
    u2 = np.array([0.0, 50.0, 0.0])
    assert env.double_los(np.array([0.0, 0.0, 100.0]), u1, u2)
    with pytest.raises(NotPermissibleError):
        env.double_los(np.array([0.0, 0.0, 50.0]), u1, u2)


def test_double_los_boxed_user():
    # user boxed in on all sides up to H_min at small radius; far low UAV is blind
    walls = [
        box(-6, -6, 6, -4, 80.0),
        box(-6, 4, 6, 6, 80.0),
        box(-6, -4, -4, 4, 80.0),
        box(4, -4, 6, 4, 80.0),
    ]
    env = Environment(walls, (-300, -300, 300, 300), 80.0)
    u1 = np.array([0.0, 0.0, 0.0])
    u2 = np.array([150.0, 0.0, 0.0])
    p = np.array([200.0, 5.0, 80.0])
    assert not env.double_los(p, u1, u2)
    assert env.los_visible(p, u2) == shapely_los(env.buildings, p, u2)
    assert env.los_visible(p, u1) == shapely_los(env.buildings, p, u1)


def test_ground_blocked():
    env = Environment([box(10, 10, 20, 20, 30.0)], (0, 0, 100, 100), 30.0)
    assert env.ground_blocked(np.array([15.0, 15.0, 0.0]))
    assert not env.ground_blocked(np.array([50.0, 50.0, 0.0]))


def test_density_metrics():
    env = Environment([box(0, 0, 100, 50, 31.0)], (0, 0, 500, 500), 31.0)
    assert env.bcr() == pytest.approx(5000.0 / 250000.0)
    # ceil(31/3) = 11 floors
    assert env.far() == pytest.approx(5000.0 * 11 / 250000.0)


def test_environment_validation():
    with pytest.raises(ValueError):
        Environment([box(0, 0, 10, 10, 50.0)], (0, 0, 100, 100), 40.0)  # H_min low
    with pytest.raises(ValueError):
        Environment([box(-20, 0, 10, 10, 5.0)], (0, 0, 100, 100), 10.0)  # outside
    with pytest.raises(ValueError):
        Building(np.array([[0, 0], [1, 0]]), 5.0)  # too few vertices
    with pytest.raises(ValueError):
        Building(np.array([[0, 0], [1, 0], [2, 0]]), 5.0)  # zero area
    with pytest.raises(ValueError):
        box(0, 0, 10, 10, -3.0)  # non-positive height


def test_map_json_roundtrip(tmp_path):
    env = Environment([box(10, 10, 40, 30, 55.0), box(60, 60, 80, 90, 44.0)],
                      (0, 0, 100, 100), 55.0)
    path = tmp_path / "map.json"
    env.save(path)
    data = json.loads(path.read_text())
    assert set(data) == {"bounds", "h_min", "buildings"}
    loaded = Environment.load(path)
    assert loaded.bounds == env.bounds
    assert loaded.h_min == env.h_min
    assert len(loaded.buildings) == 2
    assert np.allclose(loaded.buildings[0].footprint, env.buildings[0].footprint)


def test_find_initial_double_los(empty_env, wall_env, axis_frame):
    p = find_initial_double_los(empty_env, axis_frame, (0.0, 0.0), 5.0)
    assert p == pytest.approx([0.0, 0.0, 80.0])

    p = find_initial_double_los(wall_env, axis_frame, (0.0, 0.0), 5.0)
    assert p[2] > 80.0
    assert wall_env.double_los(axis_frame.to_world(p), axis_frame.u1, axis_frame.u2)
    # lowest such lattice altitude: one step below is not double-LOS
    below = p - np.array([0.0, 0.0, 5.0])
    if below[2] >= 80.0:
        assert not wall_env.double_los(
            axis_frame.to_world(below), axis_frame.u1, axis_frame.u2
        )


def test_find_initial_sealed_user():
    # four walls ring user 1; from above the midpoint the wall subtends more
    # than the climb cap allows, so no double-LOS start exists
    walls = [
        box(-5, -5, 5, -4, 100.0),
        box(-5, 4, 5, 5, 100.0),
        box(-5, -4, -4, 4, 100.0),
        box(4, -4, 5, 4, 100.0),
    ]
    env = Environment(walls, (-300, -300, 300, 300), 100.0)
    frame = build_frame(np.array([0.0, 0.0, 0.0]), np.array([200.0, 0.0, 0.0]))
    with pytest.raises(NoInitialPointError):
        find_initial_double_los(env, frame, (0.0, 0.0), 5.0, altitude_cap=800.0)


def test_users_outside_footprints_helper():
    env = Environment([box(10, 10, 20, 20, 30.0)], (0, 0, 100, 100), 30.0)
    assert point_in_any_footprint(env.buildings, (15.0, 15.0))
    assert not point_in_any_footprint(env.buildings, (50.0, 50.0))
