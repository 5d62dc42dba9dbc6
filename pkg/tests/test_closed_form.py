import numpy as np
import pytest

from losplace.closed_form import (
    LosRay,
    LosStripe,
    best_over_intervals,
    double_ray_optimum,
    double_stripe_optimum,
    solve_stripe_pairs,
)
from losplace.errors import (
    GuardViolationError,
    NoCandidateError,
    UnsupportedConfigurationError,
)
from losplace.geometry import build_frame, link_distances


@pytest.fixture
def frame():
    return build_frame(np.array([0.0, -50.0, 0.0]), np.array([0.0, 50.0, 0.0]))


def ray(x, z, user):
    return LosRay(np.array([x, 0.0, z]), user)


def stripe(x0, x1, z, user):
    return LosStripe(np.array([x0, 0.0, z]), np.array([x1, 0.0, z]), user)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def plane_intersection_oracle(a1, a2, L):
    """Raw construction: cross the two ground lines, lift both rays, take
    the higher point."""
    u1g = np.array([0.0, -L / 2.0])
    u2g = np.array([0.0, L / 2.0])
    # ground lines u_i -> (a_i1, 0); solve for the crossing point
    d1 = np.array([a1[0], L / 2.0])
    d2 = np.array([a2[0], -L / 2.0])
    A = np.stack([d1, -d2], axis=1)
    t, s = np.linalg.solve(A, u2g - u1g)
    g = u1g + t * d1
    lift1 = np.array([g[0], g[1], t * a1[2]])
    lift2 = np.array([g[0], g[1], s * a2[2]])
    return lift1 if lift1[2] >= lift2[2] else lift2


def grid_oracle(s1, s2, L, step=0.05, floor=None):
    """Brute force over the stripe product: ray-pair optimum per lattice pair."""
    n1 = max(2, int(abs(s1.b[0] - s1.a[0]) / step) + 1)
    n2 = max(2, int(abs(s2.b[0] - s2.a[0]) / step) + 1)
    x1 = np.linspace(s1.a[0], s1.b[0], n1)
    x2 = np.linspace(s2.a[0], s2.b[0], n2)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    X1, X2 = X1.ravel(), X2.ravel()
    t = 2.0 * X2 / (X1 + X2)
    s = 2.0 - t
    gx = t * X1
    gy = (t - 1.0) * L / 2.0
    z = np.maximum(t * s1.height, s * s2.height)
    if floor is not None:
        z = np.maximum(z, floor)
    d1 = np.sqrt(gx ** 2 + (gy + L / 2) ** 2 + z ** 2)
    d2 = np.sqrt(gx ** 2 + (gy - L / 2) ** 2 + z ** 2)
    d0 = np.maximum(d1, d2)
    k = int(np.argmin(d0))
    return np.array([gx[k], gy[k], z[k]]), float(d0[k])


def d0_of(p, L):
    d1 = np.linalg.norm(p - np.array([0.0, -L / 2, 0.0]))
    d2 = np.linalg.norm(p - np.array([0.0, L / 2, 0.0]))
    return max(d1, d2)


# ---------------------------------------------------------------------------
# double-ray optimum
# ---------------------------------------------------------------------------

def test_double_ray_examples(frame):
    out = double_ray_optimum(ray(30.0, 90.0, 1), ray(30.0, 90.0, 2), frame)
    assert out == pytest.approx([30.0, 0.0, 90.0])

    out = double_ray_optimum(ray(20.0, 90.0, 1), ray(40.0, 90.0, 2), frame)
    assert out == pytest.approx([80.0 / 3.0, 50.0 / 3.0, 120.0])

    with pytest.raises(GuardViolationError):
        double_ray_optimum(ray(-20.0, 90.0, 1), ray(40.0, 90.0, 2), frame)


def test_double_ray_against_plane_oracle(frame):
    rng = np.random.default_rng(20)
    for _ in range(1000):
        sign = rng.choice([-1.0, 1.0])
        a1 = np.array([sign * rng.uniform(0.5, 80), 0.0, rng.uniform(5, 150)])
        a2 = np.array([sign * rng.uniform(0.5, 80), 0.0, rng.uniform(5, 150)])
        got = double_ray_optimum(LosRay(a1, 1), LosRay(a2, 2), frame)
        want = plane_intersection_oracle(a1, a2, frame.L)
        assert np.max(np.abs(got - want)) < 1e-6


def test_double_ray_on_both_planes(frame):
    rng = np.random.default_rng(21)
    u1 = np.array([0.0, -50.0, 0.0])
    u2 = np.array([0.0, 50.0, 0.0])
    for _ in range(300):
        a1 = np.array([rng.uniform(0.5, 80), 0.0, rng.uniform(5, 150)])
        a2 = np.array([rng.uniform(0.5, 80), 0.0, rng.uniform(5, 150)])
        out = double_ray_optimum(LosRay(a1, 1), LosRay(a2, 2), frame)
        for u, a in ((u1, a1), (u2, a2)):
            # vertical plane through u and a: normal in the ground plane
            d = (a - u)[:2]
            n = np.array([-d[1], d[0], 0.0])
            n /= np.linalg.norm(n)
            assert abs(n @ (out - u)) < 1e-6
        # colinear with the winning foot's user
        winner = a1 if out[2] == pytest.approx(
            (2 * a2[0] / (a1[0] + a2[0])) * a1[2], rel=1e-9
        ) else a2
        u = u1 if winner is a1 else u2
        cross = np.cross(out - u, winner - u)
        assert np.linalg.norm(cross) < 1e-6


# ---------------------------------------------------------------------------
# double-stripe optimum
# ---------------------------------------------------------------------------

def test_stripe_degenerate_equals_ray(frame):
    s1 = stripe(20.0, 20.0, 90.0, 1)
    s2 = stripe(40.0, 40.0, 90.0, 2)
    out = double_stripe_optimum(s1, s2, frame)
    want = double_ray_optimum(ray(20.0, 90.0, 1), ray(40.0, 90.0, 2), frame)
    assert out == pytest.approx(want, abs=1e-9)


def test_stripe_spec_example(frame):
    s1 = stripe(10.0, 20.0, 100.0, 1)
    s2 = stripe(30.0, 60.0, 100.0, 2)
    out = double_stripe_optimum(s1, s2, frame)
    _, want_d0 = grid_oracle(s1, s2, frame.L, step=0.05)
    assert abs(d0_of(out, frame.L) - want_d0) <= 0.1


def test_stripe_overlap_common_vertical(frame):
    s1 = stripe(5.0, 30.0, 100.0, 1)
    s2 = stripe(12.0, 60.0, 100.0, 2)
    out = double_stripe_optimum(s1, s2, frame)
    # common x at equal heights: the best pair is the coincident ray at the
    # smallest shared |x|
    assert out == pytest.approx([12.0, 0.0, 100.0], abs=1e-9)
    _, want_d0 = grid_oracle(s1, s2, frame.L)
    assert abs(d0_of(out, frame.L) - want_d0) <= 0.1


def test_stripe_random_against_grid(frame):
    rng = np.random.default_rng(22)
    for _ in range(150):
        sign = rng.choice([-1.0, 1.0])
        lo1 = rng.uniform(0.5, 60)
        lo2 = rng.uniform(0.5, 60)
        s1 = stripe(sign * lo1, sign * (lo1 + rng.uniform(0, 4)), rng.uniform(20, 140), 1)
        s2 = stripe(sign * lo2, sign * (lo2 + rng.uniform(0, 4)), rng.uniform(20, 140), 2)
        out = double_stripe_optimum(s1, s2, frame)
        _, want_d0 = grid_oracle(s1, s2, frame.L, step=0.02)
        got_d0 = d0_of(out, frame.L)
        assert got_d0 <= want_d0 + 1e-6  # never worse than the lattice
        assert abs(got_d0 - want_d0) <= 0.1


def test_stripe_floor_against_grid(frame):
    rng = np.random.default_rng(23)
    for _ in range(100):
        lo1 = rng.uniform(0.5, 60)
        lo2 = rng.uniform(0.5, 60)
        s1 = stripe(lo1, lo1 + rng.uniform(0, 4), rng.uniform(20, 90), 1)
        s2 = stripe(lo2, lo2 + rng.uniform(0, 4), rng.uniform(20, 90), 2)
        out = double_stripe_optimum(s1, s2, frame, floor=80.0)
        assert out[2] >= 80.0 - 1e-9
        _, want_d0 = grid_oracle(s1, s2, frame.L, step=0.02, floor=80.0)
        got_d0 = d0_of(out, frame.L)
        assert got_d0 <= want_d0 + 1e-6
        assert abs(got_d0 - want_d0) <= 0.1


def test_stripe_mirror_symmetry(frame):
    rng = np.random.default_rng(24)
    for _ in range(100):
        lo1, lo2 = rng.uniform(0.5, 50, size=2)
        h1, h2 = rng.uniform(30, 130, size=2)
        w1, w2 = rng.uniform(0, 5, size=2)
        s1 = stripe(lo1, lo1 + w1, h1, 1)
        s2 = stripe(lo2, lo2 + w2, h2, 2)
        m1 = stripe(-lo1, -(lo1 + w1), h1, 1)
        m2 = stripe(-lo2, -(lo2 + w2), h2, 2)
        out = double_stripe_optimum(s1, s2, frame)
        mirrored = double_stripe_optimum(m1, m2, frame)
        assert mirrored == pytest.approx(out * np.array([-1.0, 1.0, 1.0]), abs=1e-9)


def test_stripe_opposite_sides_rejected(frame):
    with pytest.raises(UnsupportedConfigurationError):
        double_stripe_optimum(stripe(10.0, 20.0, 90.0, 1),
                              stripe(-10.0, -20.0, 90.0, 2), frame)


def test_stripe_validation():
    with pytest.raises(ValueError):
        stripe(-5.0, 5.0, 90.0, 1)  # crosses the axis
    with pytest.raises(ValueError):
        LosStripe(np.array([5.0, 0.0, 90.0]), np.array([10.0, 0.0, 95.0]), 1)
    with pytest.raises(ValueError):
        stripe(10.0, 5.0, 90.0, 1)  # wrong ordering


# ---------------------------------------------------------------------------
# best over interval collections
# ---------------------------------------------------------------------------

def test_best_over_intervals_singletons(frame):
    s1 = stripe(10.0, 20.0, 100.0, 1)
    s2 = stripe(30.0, 60.0, 100.0, 2)
    want = double_stripe_optimum(s1, s2, frame)
    assert best_over_intervals([s1], [s2], frame) == pytest.approx(want)


def test_best_over_intervals_enumerates(frame):
    I1 = [stripe(10.0, 20.0, 100.0, 1), stripe(-40.0, -50.0, 90.0, 1)]
    I2 = [
        stripe(30.0, 60.0, 100.0, 2),
        stripe(-35.0, -45.0, 95.0, 2),
        stripe(5.0, 9.0, 120.0, 2),
    ]
    best = best_over_intervals(I1, I2, frame)
    d_best = d0_of(best, frame.L)
    for s1 in I1:
        for s2 in I2:
            if s1.sign != s2.sign:
                continue
            cand = double_stripe_optimum(s1, s2, frame)
            assert d_best <= d0_of(cand, frame.L) + 1e-9


def test_best_over_intervals_empty(frame):
    with pytest.raises(NoCandidateError):
        best_over_intervals([], [stripe(3.0, 4.0, 90.0, 2)], frame)
    with pytest.raises(NoCandidateError):
        best_over_intervals(
            [stripe(3.0, 4.0, 90.0, 1)], [stripe(-3.0, -4.0, 90.0, 2)], frame
        )


def test_vectorized_matches_scalar(frame):
    rng = np.random.default_rng(25)
    a1 = rng.uniform(0.5, 40, 50)
    b1 = a1 + rng.uniform(0, 5, 50)
    h1 = rng.uniform(20, 140, 50)
    a2 = rng.uniform(0.5, 40, 50)
    b2 = a2 + rng.uniform(0, 5, 50)
    h2 = rng.uniform(20, 140, 50)
    pts, d0 = solve_stripe_pairs(a1, b1, h1, a2, b2, h2, frame.L, floor=80.0)
    for k in range(50):
        s1 = stripe(a1[k], b1[k], h1[k], 1)
        s2 = stripe(a2[k], b2[k], h2[k], 2)
        out = double_stripe_optimum(s1, s2, frame, floor=80.0)
        assert pts[k] == pytest.approx(out, abs=1e-9)
        assert d0[k] == pytest.approx(d0_of(out, frame.L), rel=1e-12)
