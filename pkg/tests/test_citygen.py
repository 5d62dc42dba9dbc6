import numpy as np
import pytest

from losplace.citygen import CityGenParams, generate_city, sample_user_pairs
from losplace.environment import Environment
from losplace.errors import GenerationError

from conftest import point_in_any_footprint


def test_generate_city_hits_target_bcr():
    env = generate_city(CityGenParams(seed=7, target_bcr=0.30, bounds=(0, 0, 500, 500)))
    assert 0.25 <= env.bcr() <= 0.35
    heights = [b.height for b in env.buildings]
    assert min(heights) >= 50.0 and max(heights) <= 80.0
    assert env.h_min == pytest.approx(max(heights))


def test_generate_city_zero_density():
    env = generate_city(CityGenParams(seed=1, target_bcr=0.0))
    assert env.buildings == []


def test_generate_city_deterministic():
    params = CityGenParams(seed=42, target_bcr=0.35)
    a = generate_city(params).to_dict()
    b = generate_city(params).to_dict()
    assert a == b


def test_generate_city_infeasible_density():
    with pytest.raises(GenerationError):
        generate_city(CityGenParams(seed=0, target_bcr=0.65))


def test_generate_city_footprints_disjoint_and_inside():
    env = generate_city(CityGenParams(seed=9, target_bcr=0.4))
    xmin, ymin, xmax, ymax = env.bounds
    boxes = []
    for b in env.buildings:
        lo = b.footprint.min(axis=0)
        hi = b.footprint.max(axis=0)
        assert lo[0] >= xmin and lo[1] >= ymin and hi[0] <= xmax and hi[1] <= ymax
        boxes.append((lo, hi))
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            (lo1, hi1), (lo2, hi2) = boxes[i], boxes[j]
            overlap = (
                lo1[0] < hi2[0] and lo2[0] < hi1[0]
                and lo1[1] < hi2[1] and lo2[1] < hi1[1]
            )
            assert not overlap


def test_sample_user_pairs_empty_env():
    env = Environment([], (0, 0, 200, 200), 0.0)
    pairs = sample_user_pairs(env, 3, 50, 120, seed=5)
    assert len(pairs) == 3
    for u1, u2 in pairs:
        assert 50 <= np.linalg.norm(u2 - u1) <= 120
        assert u1[2] == 0.0 and u2[2] == 0.0


def test_sample_user_pairs_zero():
    env = Environment([], (0, 0, 200, 200), 0.0)
    assert sample_user_pairs(env, 0, 50, 120, seed=5) == []


def test_sample_user_pairs_dense_outside_footprints():
    env = generate_city(CityGenParams(seed=3, target_bcr=0.4))
    pairs = sample_user_pairs(env, 100, 50, 150, seed=11)
    assert len(pairs) == 100
    for u1, u2 in pairs:
        assert not point_in_any_footprint(env.buildings, u1)
        assert not point_in_any_footprint(env.buildings, u2)
        assert 50 <= np.linalg.norm(u2 - u1) <= 150


def test_sample_user_pairs_deterministic():
    env = generate_city(CityGenParams(seed=3, target_bcr=0.3))
    a = sample_user_pairs(env, 10, 50, 150, seed=2)
    b = sample_user_pairs(env, 10, 50, 150, seed=2)
    for (a1, a2), (b1, b2) in zip(a, b):
        assert np.array_equal(a1, b1) and np.array_equal(a2, b2)
