import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levichain.physics import Environment, OilType
from levichain.spill import (
    DropletState,
    RadiusSpec,
    centroid,
    forecast_drift,
    seed_spill,
    step,
)

OIL = OilType("crude", 850.0, 0.05)
FIXED = RadiusSpec(fixed=1e-3)


def test_seed_spill_construction():
    s = seed_spill((5.0, -2.0), 1000, FIXED, OIL, seed=1)
    assert len(s) == 1000
    assert np.all(s.states == DropletState.FREE)
    assert np.all(s.positions == [5.0, -2.0, 0.0])
    assert np.all(s.radii == 1e-3)
    assert list(s.ids) == list(range(1000))


def test_seed_spill_deterministic():
    a = seed_spill((0, 0), 500, RadiusSpec.lognormal(1e-3, 0.5), OIL, seed=7)
    b = seed_spill((0, 0), 500, RadiusSpec.lognormal(1e-3, 0.5), OIL, seed=7)
    assert a.same_as(b)
    assert a.radii.tobytes() == b.radii.tobytes()


def test_lognormal_median():
    s = seed_spill((0, 0), 10_000, RadiusSpec.lognormal(1e-3, 0.5), OIL, seed=42)
    assert abs(np.median(s.radii) - 1e-3) / 1e-3 < 0.10


def test_seed_spill_rejects_empty():
    with pytest.raises(ValueError):
        seed_spill((0, 0), 0, FIXED, OIL, seed=0)


@pytest.mark.parametrize("kw", [{"fixed": 0.0}, {"median": 1e-3}, {"median": -1.0, "sigma": 0.1},
                                {"fixed": 1e-3, "median": 1e-3, "sigma": 0.2}])
def test_radius_spec_invariants(kw):
    with pytest.raises(ValueError):
        RadiusSpec(**kw)


def test_step_without_forcing_is_identity():
    s = seed_spill((1.0, 2.0), 100, FIXED, OIL, seed=0, diffusivity=0.0)
    out = step(s, Environment(wind_speed=0.0), 0.3, 10.0)
    assert np.array_equal(out.positions, s.positions)
    assert out.time == 10.0


def test_step_wind_drift_exact():
    s = seed_spill((0.0, 0.0), 100, FIXED, OIL, seed=0, k_wind=0.03, diffusivity=0.0)
    wind_dir = math.pi / 3
    out = step(s, Environment(wind_speed=10.0), wind_dir, 10.0)
    disp = out.positions[:, :2] - s.positions[:, :2]
    assert np.allclose(np.hypot(disp[:, 0], disp[:, 1]), 3.0, rtol=1e-12, atol=0)
    assert np.allclose(np.arctan2(disp[:, 1], disp[:, 0]), wind_dir, rtol=0, atol=1e-12)


def test_diffusion_msd():
    d0, dt, n_steps = 0.01, 5.0, 40
    s = seed_spill((0.0, 0.0), 10_000, FIXED, OIL, seed=3, diffusivity=d0)
    env = Environment(wind_speed=0.0)
    for _ in range(n_steps):
        s = step(s, env, 0.0, dt)
    msd = np.mean(np.sum(s.positions[:, :2] ** 2, axis=1))
    expected = 4 * d0 * n_steps * dt
    assert abs(msd - expected) / expected < 0.10


def test_step_rejects_bad_dt():
    s = seed_spill((0, 0), 10, FIXED, OIL, seed=0)
    with pytest.raises(ValueError):
        step(s, Environment(), 0.0, 0.0)


def test_trapped_and_escaped_do_not_move():
    s = seed_spill((0, 0), 30, FIXED, OIL, seed=0, diffusivity=0.1)
    states = s.states.copy()
    states[:10] = DropletState.TRAPPED
    states[10:20] = DropletState.ESCAPED
    s = replace(s, states=states)
    out = step(s, Environment(wind_speed=5.0), 1.0, 10.0)
    assert np.array_equal(out.positions[:20], s.positions[:20])
    assert not np.array_equal(out.positions[20:], s.positions[20:])


def test_noise_stream_independent_of_states():
    """A droplet's path is the same whether or not other droplets are pinned."""
    s = seed_spill((0, 0), 50, FIXED, OIL, seed=9, diffusivity=0.1)
    states = s.states.copy()
    states[::2] = DropletState.TRAPPED
    pinned = replace(s, states=states)
    env = Environment(wind_speed=2.0)
    a, b = s, pinned
    for _ in range(5):
        a, b = step(a, env, 0.2, 3.0), step(b, env, 0.2, 3.0)
    assert np.array_equal(a.positions[1::2], b.positions[1::2])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), n=st.integers(1, 200), w=st.floats(0, 20))
def test_step_conserves_ids_and_is_deterministic(seed, n, w):
    s = seed_spill((0, 0), n, FIXED, OIL, seed=seed)
    env = Environment(wind_speed=w)
    a = step(s, env, 0.5, 2.0)
    b = step(s, env, 0.5, 2.0)
    assert a.same_as(b)
    assert len(a) == n and np.array_equal(a.ids, s.ids)


@settings(max_examples=25, deadline=None)
@given(w=st.floats(0.1, 30), n_steps=st.integers(1, 30), dt=st.floats(0.1, 60), wind_dir=st.floats(-math.pi, math.pi))
def test_centroid_drift_linear(w, n_steps, dt, wind_dir):
    s0 = seed_spill((0, 0), 20, FIXED, OIL, seed=0, diffusivity=0.0)
    env = Environment(wind_speed=w)
    env2 = Environment(wind_speed=2 * w)
    s, s2 = s0, s0
    for _ in range(n_steps):
        s, s2 = step(s, env, wind_dir, dt), step(s2, env2, wind_dir, dt)
    cx, cy = centroid(s)
    dist = math.hypot(cx, cy)
    expected = n_steps * 0.03 * w * dt
    assert dist == pytest.approx(expected, rel=1e-9)
    assert math.hypot(*centroid(s2)) == pytest.approx(2 * dist, rel=1e-9)


def test_diffusion_grows_with_effective_rate():
    s = seed_spill((0, 0), 10, FIXED, OIL, seed=0, diffusivity=0.01)
    env = Environment(wind_speed=10.0, water_density=1025.0)
    s = step(s, env, 0.0, 100.0)
    rate = 10.0 * abs(0.05 / 850.0 - 1 / 1025.0)
    assert s.effective_rate == pytest.approx(rate, rel=1e-12)
    assert s.diffusion_coefficient() == pytest.approx(0.01 * (1 + rate * 100.0), rel=1e-12)


def test_forecast_horizon_zero_identity():
    s = seed_spill((0, 0), 2000, FIXED, OIL, seed=2, diffusivity=0.05)
    for _ in range(10):
        s = step(s, Environment(wind_speed=3.0), 0.0, 5.0)
    c, r = forecast_drift(s, Environment(wind_speed=3.0), 0.0, 0.0)
    assert c == pytest.approx(centroid(s), rel=1e-15)
    d = np.hypot(s.positions[:, 0] - c[0], s.positions[:, 1] - c[1])
    assert r == pytest.approx(np.percentile(d, 90), rel=1e-12)


def test_forecast_centroid_shift():
    s = seed_spill((0, 0), 10, FIXED, OIL, seed=0)
    (cx, cy), _ = forecast_drift(s, Environment(wind_speed=10.0), math.pi / 2, 3600.0)
    assert cx == pytest.approx(0.0, abs=1e-9)
    assert cy == pytest.approx(1080.0, rel=1e-12)


def test_forecast_matches_drift_only_simulation():
    env = Environment(wind_speed=7.0)
    s = seed_spill((3.0, 4.0), 50, FIXED, OIL, seed=0, diffusivity=0.0)
    forecast, _ = forecast_drift(s, env, 0.7, 600.0)
    for _ in range(60):
        s = step(s, env, 0.7, 10.0)
    sim = centroid(s)
    assert math.hypot(forecast[0] - sim[0], forecast[1] - sim[1]) < 1e-9


def test_forecast_radius_matches_simulated_p90():
    env = Environment(wind_speed=0.0)
    s0 = seed_spill((0, 0), 10_000, FIXED, OIL, seed=5, diffusivity=0.02)
    _, r_forecast = forecast_drift(s0, env, 0.0, 500.0)
    s = s0
    for _ in range(100):
        s = step(s, env, 0.0, 5.0)
    c = centroid(s)
    r_sim = np.percentile(np.hypot(s.positions[:, 0] - c[0], s.positions[:, 1] - c[1]), 90)
    assert r_forecast == pytest.approx(r_sim, rel=0.05)
