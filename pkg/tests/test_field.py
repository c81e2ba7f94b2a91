import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levichain.field import (
    ArpField,
    FrequencyOutOfBandError,
    LevitatorUnit,
    NoTrappingNodeError,
    arp_at,
    node_depths,
    node_geometry,
    surface_aligned_depth,
    tune_frequency,
    unit_peak_arp,
)
from levichain.physics import Environment

AIR = Environment(sound_speed=343.0, water_density=1000.0)
SEA = Environment(sound_speed=1480.0)


def unit(**kw):
    base = dict(id=0, position=(0.0, 0.0), num_transducers=14, power_per_transducer=1.0,
                frequency=40e3, aperture_area=0.1, reflector_gap=0.05, depth_setpoint=1.0)
    base.update(kw)
    return LevitatorUnit(**base)


def enumerate_nodes(c, f, gap):
    """Independent enumeration of node offsets k·λ/2 + λ/4 < gap."""
    lam = c / f
    out = []
    k = 0
    while k * lam / 2 + lam / 4 < gap:
        out.append(k * lam / 2 + lam / 4)
        k += 1
    return out


def test_node_geometry_bench():
    g = node_geometry(unit(), AIR)
    assert g.spacing == pytest.approx(4.2875e-3, rel=1e-12)
    assert g.node_offsets[0] == pytest.approx(2.14375e-3, rel=1e-12)
    assert len(g) == 12
    assert g.node_offsets == pytest.approx(enumerate_nodes(343.0, 40e3, 0.05), rel=1e-12)
    assert np.allclose(np.diff(g.node_offsets), g.spacing, rtol=1e-12, atol=0)
    assert all(0 < o < 0.05 for o in g.node_offsets)


def test_node_geometry_gap_too_short():
    with pytest.raises(NoTrappingNodeError):
        node_geometry(unit(reflector_gap=0.002), AIR)


def test_doubling_frequency_halves_spacing():
    a = node_geometry(unit(frequency=40e3), AIR).spacing
    b = node_geometry(unit(frequency=80e3), AIR).spacing
    assert b == pytest.approx(a / 2, rel=1e-12)


@given(gap1=st.floats(0.003, 0.5), gap2=st.floats(0.003, 0.5))
def test_node_count_nondecreasing_in_gap(gap1, gap2):
    lo, hi = sorted((gap1, gap2))
    assert len(node_geometry(unit(reflector_gap=lo), AIR)) <= len(node_geometry(unit(reflector_gap=hi), AIR))


def test_unit_peak_arp():
    assert unit_peak_arp(unit(), AIR) == pytest.approx(0.81633, rel=1e-5)
    assert unit_peak_arp(unit(power_scale=0.0), AIR) == 0.0
    assert unit_peak_arp(unit(aperture_area=0.05), AIR) == pytest.approx(
        2 * unit_peak_arp(unit(), AIR), rel=1e-12)
    assert unit_peak_arp(unit(num_transducers=28), AIR) == pytest.approx(
        2 * unit_peak_arp(unit(), AIR), rel=1e-12)


def test_arp_at_node_equals_peak():
    u = unit()
    field = ArpField.build([u], AIR)
    peak = unit_peak_arp(u, AIR)
    for z in node_depths(u, AIR):
        assert arp_at(field, (0.0, 0.0, z)) == pytest.approx(peak, rel=1e-12)


def test_arp_between_nodes_is_zero():
    u = unit()
    field = ArpField.build([u], AIR)
    z = node_depths(u, AIR)
    mid = 0.5 * (z[3] + z[4])
    assert arp_at(field, (0.0, 0.0, mid)) == pytest.approx(0.0, abs=1e-12 * unit_peak_arp(u, AIR))


def test_arp_radial_decay_at_radial_scale():
    u = unit()
    field = ArpField.build([u], AIR)
    rs = math.sqrt(0.1 / math.pi)
    z = node_depths(u, AIR)[5]
    expected = unit_peak_arp(u, AIR) * math.exp(-1.0)
    assert arp_at(field, (rs, 0.0, z)) == pytest.approx(expected, rel=1e-12)
    assert expected / unit_peak_arp(u, AIR) == pytest.approx(0.3679, rel=1e-4)


def test_arp_outside_resonator_is_zero():
    u = unit()
    field = ArpField.build([u], AIR)
    assert arp_at(field, (0.0, 0.0, 0.5)) == 0.0  # above transducer plane
    assert arp_at(field, (0.0, 0.0, 1.2)) == 0.0  # below reflector
    assert arp_at(field, (1e3, 0.0, node_depths(u, AIR)[0])) == 0.0


def test_surface_aligned_depth_puts_node_at_surface():
    u = unit()
    u = replace(u, depth_setpoint=surface_aligned_depth(u, AIR))
    assert node_depths(u, AIR)[-1] == pytest.approx(0.0, abs=1e-15)
    assert arp_at(ArpField.build([u], AIR), (0.0, 0.0, 0.0)) == pytest.approx(unit_peak_arp(u, AIR), rel=1e-12)


def test_multi_unit_uses_max_not_sum():
    a = unit(id=0, position=(0.0, 0.0))
    b = unit(id=1, position=(0.1, 0.0))
    field = ArpField.build([a, b], AIR)
    z = node_depths(a, AIR)[2]
    pt = (0.05, 0.0, z)
    single = arp_at(ArpField.build([a], AIR), pt)
    assert arp_at(field, pt) == pytest.approx(single, rel=1e-12)


units_strategy = st.lists(
    st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 4.0), st.floats(0.02, 0.3)),
    min_size=1, max_size=5,
)
point_strategy = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.9, 1.4))


def _field(specs, env=AIR):
    return ArpField.build(
        [unit(id=i, position=(x, y), power_scale=p, aperture_area=a) for i, (x, y, p, a) in enumerate(specs)],
        env,
    )


@given(specs=units_strategy, pt=point_strategy)
def test_field_bounded_by_max_peak(specs, pt):
    f = _field(specs)
    v = arp_at(f, pt)
    assert 0.0 <= v <= max(f.peak_arp_per_unit) * (1 + 1e-12)


@given(specs=units_strategy, pt=point_strategy, dx=st.floats(-100, 100), dy=st.floats(-100, 100),
       theta=st.floats(-math.pi, math.pi))
def test_field_rigid_motion_invariant(specs, pt, dx, dy, theta):
    c, s = math.cos(theta), math.sin(theta)

    def move(x, y):
        return c * x - s * y + dx, s * x + c * y + dy

    moved = [(*move(x, y), p, a) for x, y, p, a in specs]
    f0 = _field(specs)
    f1 = _field(moved)
    mx, my = move(pt[0], pt[1])
    assert arp_at(f1, (mx, my, pt[2])) == pytest.approx(arp_at(f0, pt), rel=1e-9, abs=1e-12)


@given(specs=units_strategy, pt=point_strategy, a=st.floats(0, 1))
def test_field_scales_with_power(specs, pt, a):
    f0 = _field(specs)
    f1 = _field([(x, y, p * a, ap) for x, y, p, ap in specs])
    assert arp_at(f1, pt) == pytest.approx(a * arp_at(f0, pt), rel=1e-12, abs=1e-300)


@settings(max_examples=50)
@given(z=st.floats(1.0, 1.05 - 4.2875e-3 - 1e-6))
def test_axis_profile_periodic(z):
    u = unit()
    f = ArpField.build([u], AIR)
    period = node_geometry(u, AIR).spacing
    assert arp_at(f, (0, 0, z + period)) == pytest.approx(arp_at(f, (0, 0, z)), rel=1e-7, abs=1e-9)


def test_arp_at_many_matches_scalar():
    f = _field([(0, 0, 1, 0.1), (0.3, 0.1, 2, 0.05)])
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50), rng.uniform(0.95, 1.1, 50)])
    many = f.arp_at_many(pts)
    assert list(many) == [arp_at(f, p) for p in pts]


def test_tune_frequency():
    assert tune_frequency(unit(), 4.2875e-3, AIR).frequency == pytest.approx(40e3, rel=1e-12)
    assert tune_frequency(unit(), 3.43e-3, AIR).frequency == pytest.approx(50e3, rel=1e-12)


def test_tune_frequency_out_of_band():
    with pytest.raises(FrequencyOutOfBandError) as exc:
        tune_frequency(unit(), 0.1, AIR)
    assert exc.value.nearest_spacing == pytest.approx(8.575e-3, rel=1e-12)
    assert exc.value.nearest_frequency == 20e3


def test_tune_frequency_warns_outside_preferred(caplog):
    tune_frequency(unit(), 343.0 / (2 * 30e3), AIR)
    assert "outside the 40-60 kHz band" in caplog.text


@pytest.mark.parametrize("kw", [
    {"num_transducers": 0}, {"power_per_transducer": 0.0}, {"aperture_area": 0.0},
    {"reflector_gap": 0.0}, {"frequency": 10e3}, {"frequency": 150e3},
    {"power_scale": -1.0}, {"power_scale": 40.0},
])
def test_unit_invariants(kw):
    with pytest.raises(ValueError):
        unit(**kw)


def test_candidate_pairs_dense_and_tree_agree():
    rng = np.random.default_rng(1)
    specs = [(x, y, 1.0, 0.1) for x, y in rng.uniform(-5, 5, (200, 2))]
    f = _field(specs)
    xy = rng.uniform(-5, 5, (300, 2))
    pi, ui = f.candidate_pairs(xy, 0.4)
    d2 = ((xy[:, None, :] - f._xy[None]) ** 2).sum(axis=2)
    exp_pi, exp_ui = np.nonzero(d2 <= 0.16)
    assert sorted(zip(pi, ui)) == sorted(zip(exp_pi, exp_ui))
