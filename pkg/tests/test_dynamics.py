import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import fd_differential, gluing_distance, random_smooth_points, stadium_map
from stadium_spectrum.dynamics import (
    PhasePoint,
    billiard_map,
    expansion_factor,
    free_path_jet,
    map_differential,
    reflection_residual,
    trajectory,
)
from stadium_spectrum.errors import GluingHit, InfeasibleChord, TangentialShot, ValidationError
from stadium_spectrum.geometry import boundary_at, std_stadium


def test_axis_shot(std):
    st_ = billiard_map(std, PhasePoint(math.pi / 2, 0.0))
    lo, _ = std.component_range(2)
    assert st_.tau == pytest.approx(4.0, abs=1e-13)
    assert st_.z1.r == pytest.approx(lo + math.pi / 2, abs=1e-12)
    assert abs(st_.z1.phi) < 1e-13
    assert st_.component == 2


def test_flat_to_flat(std):
    lo, hi = std.component_range(3)
    z = PhasePoint(0.5 * (lo + hi), 0.05)
    st_ = billiard_map(std, z)
    assert st_.component == 4
    assert st_.z1.phi == pytest.approx(-0.05, abs=1e-13)


@settings(max_examples=300, deadline=None)
@given(r=st.floats(0.0, 10.28), phi=st.floats(-1.4, 1.4))
def test_matches_elementary_oracle(r, phi):
    t = std_stadium(1.0, 2.0)
    if gluing_distance(t, r) < 1e-9:
        return
    try:
        st_ = billiard_map(t, PhasePoint(r, phi))
    except (GluingHit, TangentialShot):
        return
    r1, phi1, d = stadium_map(1.0, 2.0, r, phi)
    dr = (st_.z1.r - r1 + 0.5 * t.perimeter) % t.perimeter - 0.5 * t.perimeter
    assert abs(dr) < 1e-10
    assert st_.z1.phi == pytest.approx(phi1, abs=1e-10)
    assert st_.tau == pytest.approx(d, abs=1e-10)


def test_time_reversal_and_reflection_law(std, squash, graph_table):
    rng = np.random.default_rng(7)
    for t in (std, squash, graph_table):
        for z in random_smooth_points(t, 300, rng):
            st_ = billiard_map(t, z)
            back = billiard_map(t, PhasePoint(st_.z1.r, -st_.z1.phi))
            dr = (back.z1.r - z.r + 0.5 * t.perimeter) % t.perimeter - 0.5 * t.perimeter
            assert abs(dr) < 1e-9 and abs(back.z1.phi + z.phi) < 1e-9
            assert reflection_residual(t, z) < 1e-10


def test_tangential_and_invalid():
    t = std_stadium(1.0, 2.0)
    with pytest.raises(TangentialShot):
        billiard_map(t, PhasePoint(1.0, math.pi / 2))
    with pytest.raises(ValidationError):
        PhasePoint(0.0, 2.0)


def test_gluing_hit(std):
    # from the apex of arc 2 straight at the corner where arc 1 meets flat 3
    apex = std.component_range(2)[0] + math.pi / 2
    bp = boundary_at(std, apex)
    target = std.gluing_points[(1, 3)]
    u = (target - bp.position) / np.hypot(*(target - bp.position))
    phi = math.atan2(float(u @ bp.tangent), float(u @ bp.inward_normal))
    with pytest.raises(GluingHit):
        billiard_map(std, PhasePoint(apex, phi))


def test_period_two_differential(std):
    D = map_differential(std, PhasePoint(math.pi / 2, 0.0))
    # a = 1 - K tau = -3 with K = 1, b = tau K^2 - 2K = 2
    assert D == pytest.approx(-np.array([[-3.0, 4.0], [2.0, -3.0]]), abs=1e-12)
    fd = fd_differential(std, PhasePoint(math.pi / 2, 0.0))
    assert np.max(np.abs(D - fd)) < 1e-6 * np.max(np.abs(D))


def test_differential_fd_and_det(std, squash, graph_table):
    rng = np.random.default_rng(11)
    for t in (std, squash, graph_table):
        for z in random_smooth_points(t, 100, rng):
            D = map_differential(t, z)
            fd = fd_differential(t, z)
            if fd is None:
                continue
            assert np.max(np.abs(D - fd)) / np.max(np.abs(D)) < 1e-5
            z1 = billiard_map(t, z).z1
            assert np.linalg.det(D) == pytest.approx(math.cos(z.phi) / math.cos(z1.phi), rel=1e-9)


def test_path_jet_period_two(std):
    lo, _ = std.component_range(2)
    j = free_path_jet(std, math.pi / 2, lo + math.pi / 2)
    assert j.tau == pytest.approx(4.0)
    assert abs(j.d_r) < 1e-14 and abs(j.d_r1) < 1e-14
    assert j.d_rr == pytest.approx(-0.75, abs=1e-13)
    assert j.d_r1r1 == pytest.approx(-0.75, abs=1e-13)
    assert j.d_rr1 == pytest.approx(0.25, abs=1e-13)


def _tau(t, r, r1):
    return float(np.hypot(*(boundary_at(t, r1).position - boundary_at(t, r).position)))


def test_path_jet_fd_and_taylor(std, squash, graph_table):
    rng = np.random.default_rng(5)
    for t in (std, squash, graph_table):
        for z in random_smooth_points(t, 50, rng):
            r1 = billiard_map(t, z).z1.r
            if gluing_distance(t, z.r) < 1e-2 or gluing_distance(t, r1) < 1e-2:
                continue
            j = free_path_jet(t, z.r, r1)
            j_rev = free_path_jet(t, r1, z.r)
            assert j.d_rr1 == pytest.approx(j_rev.d_rr1, rel=1e-12)
            assert j.d_rr1 > 0
            assert j.d_r == pytest.approx(-math.sin(j.phi), abs=1e-14)
            h = 1e-5
            g_r = (_tau(t, z.r + h, r1) - _tau(t, z.r - h, r1)) / (2 * h)
            g_r1 = (_tau(t, z.r, r1 + h) - _tau(t, z.r, r1 - h)) / (2 * h)
            assert g_r == pytest.approx(j.d_r, abs=1e-6)
            assert g_r1 == pytest.approx(j.d_r1, abs=1e-6)
            jp, jm = free_path_jet(t, z.r + h, r1), free_path_jet(t, z.r - h, r1)
            assert (jp.d_r - jm.d_r) / (2 * h) == pytest.approx(j.d_rr, rel=1e-6, abs=1e-8)
            assert (jp.d_r1 - jm.d_r1) / (2 * h) == pytest.approx(j.d_rr1, rel=1e-6, abs=1e-8)
            d, d1 = 1e-4, -0.7e-4
            taylor = j.tau + j.d_r * d + j.d_r1 * d1 + 0.5 * (j.d_rr * d * d + 2 * j.d_rr1 * d * d1 + j.d_r1r1 * d1 * d1)
            assert abs(_tau(t, z.r + d, r1 + d1) - taylor) < 1e-10


def test_path_jet_infeasible(std):
    # both ends on the same flat
    lo, hi = std.component_range(3)
    with pytest.raises(InfeasibleChord):
        free_path_jet(std, lo + 0.2, hi - 0.2)


def test_expansion_factor(std, weak):
    assert expansion_factor(std, PhasePoint(math.pi / 2, 0.0)) == pytest.approx(7.0, rel=1e-12)
    assert expansion_factor(weak, PhasePoint(math.pi / 2, 0.0)) == pytest.approx(3.4, rel=1e-12)
    rng = np.random.default_rng(3)
    for z in random_smooth_points(std, 200, rng):
        if boundary_at(std, z.r).component in (1, 2) and billiard_map(std, z).component in (1, 2):
            assert expansion_factor(std, z) > 1


def test_trajectory_length(std):
    steps = trajectory(std, PhasePoint(0.3, 0.2), 15)
    assert len(steps) == 15
    assert all(s.tau > 0 for s in steps)
