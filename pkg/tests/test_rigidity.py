import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stadium_spectrum.dynamics import PhasePoint
from stadium_spectrum.errors import InvalidTable, NearUnitLambda, OrbitBifurcation, ValidationError
from stadium_spectrum.geometry import std_stadium
from stadium_spectrum.invariants import analyze_period_two
from stadium_spectrum.orbits import solve_code
from stadium_spectrum.rigidity import (
    BumpProfile,
    DeformationFamily,
    GaussianProfile,
    PolynomialProfile,
    ZeroProfile,
    cancellation_decay,
    cancellation_sums,
    channel_quotient,
    deformation_G,
    isospectral_derivative_check,
    lagrange_coeffs,
    profile_from_dict,
    sum_G,
    unfolded_period_four,
    unfolded_period_two,
    weighted_intercept,
)

HALF_ARC = math.pi / 2
MENU = ["12", "2 12", "2(12)^2", "323 12 1", "323 (12)^2 1"]


@pytest.fixture(scope="module")
def short_std():
    return std_stadium(1.0, 0.5)


@pytest.fixture(scope="module")
def bumped(short_std):
    return DeformationFamily(
        short_std,
        {1: BumpProfile(HALF_ARC + 0.25, 1.2, 1.0), 2: BumpProfile(HALF_ARC - 0.3, 1.1, 0.6)},
    )


# ---------------------------------------------------------------------------
# profiles and displaced arcs


@pytest.mark.parametrize(
    "prof",
    [
        BumpProfile(0.3, 0.9, 1.3),
        BumpProfile(0.0, 1.0, 0.5, power=4),
        GaussianProfile(0.2, 0.4, 2.0),
        PolynomialProfile([0.1, -0.4, 0.3, 0.2], center=0.5),
    ],
)
def test_profile_derivatives(prof):
    s = np.linspace(-0.6, 0.9, 31)
    h = 1e-5
    f, f1, f2 = prof.derivs(s)
    fp, fm = prof(s + h), prof(s - h)
    assert np.allclose(f1, (fp - fm) / (2 * h), atol=1e-7)
    assert np.allclose(f2, (fp - 2 * f + fm) / h**2, atol=1e-4)


def test_profile_from_dict():
    assert isinstance(profile_from_dict(None), ZeroProfile)
    p = profile_from_dict({"kind": "bump", "center": 1.0, "width": 0.5})
    assert p(1.0) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        profile_from_dict({"kind": "spline"})


def test_profile_must_vanish_at_arc_ends(short_std):
    with pytest.raises(InvalidTable):
        DeformationFamily(short_std, {1: PolynomialProfile([1.0])})


@pytest.mark.parametrize("mu", [-4e-3, 3e-3])
def test_displaced_arc_derivatives(bumped, mu):
    arc = bumped.table(mu).pieces[0][1]
    t = np.linspace(0.2, 2.9, 9)
    h = 1e-6
    d1 = (arc.point(t + h) - arc.point(t - h)) / (2 * h)
    d2 = (arc.d1(t + h) - arc.d1(t - h)) / (2 * h)
    assert np.allclose(arc.d1(t), d1, atol=1e-8)
    assert np.allclose(arc.d2(t), d2, atol=1e-7)


def test_family_is_cached_and_defocusing(bumped, short_std):
    assert bumped.table(0.0) is short_std
    assert bumped.table(1e-3) is bumped.table(1e-3)
    assert bumped.defocusing(1e-5).holds


# ---------------------------------------------------------------------------
# the deformation function


def test_G_vanishes_on_flats(bumped, short_std):
    lo, hi = short_std.component_range(3)
    z = PhasePoint(0.5 * (lo + hi), 0.2)
    assert deformation_G(bumped, 0.0, z) == 0.0


@settings(max_examples=30, deadline=None)
@given(s=st.floats(0.05, math.pi - 0.05), phi=st.floats(-1.3, 1.3))
def test_G_at_base(bumped, s, phi):
    # at mu = 0 the normals agree, so G is the normal displacement times cos phi
    lo, _ = bumped.base.component_range(1)
    g = deformation_G(bumped, 0.0, PhasePoint(lo + s, phi))
    assert g == pytest.approx(bumped.profiles[1](s) * math.cos(phi), abs=1e-14)


def test_G_zero_family(short_std):
    fam = DeformationFamily(short_std, {})
    orb = solve_code(short_std, "2 12")
    assert sum_G(fam, 0.0, orb) == 0.0


# ---------------------------------------------------------------------------
# derivative identity


@pytest.mark.parametrize("code", MENU)
def test_derivative_identity_menu(bumped, code):
    r = isospectral_derivative_check(bumped, code)
    assert r.rel_err < 1e-6
    assert math.copysign(1.0, r.lengths[2] - r.lengths[0]) == math.copysign(1.0, r.lhs)


@pytest.mark.parametrize("code", ["12", "2 12"])
def test_derivative_identity_off_base(bumped, code):
    assert isospectral_derivative_check(bumped, code, mu=2e-3).rel_err < 1e-6


def test_derivative_identity_apex(weak):
    fam = DeformationFamily(weak, {1: BumpProfile(HALF_ARC, 1.0)})
    r = isospectral_derivative_check(fam, "12")
    assert r.rhs == pytest.approx(1.0, abs=1e-14)
    assert r.lhs == pytest.approx(1.0, rel=1e-5)


def test_flat_only_orbit_sees_no_deformation():
    t = std_stadium(1.0, 2.0)
    fam = DeformationFamily(t, {1: BumpProfile(HALF_ARC, 1.0), 2: BumpProfile(HALF_ARC, 1.0)})
    lo3, hi3 = t.component_range(3)
    lo4, hi4 = t.component_range(4)
    # a bouncing-ball chord between the flats
    z = PhasePoint(0.5 * (lo3 + hi3), 0.0)
    w = PhasePoint(0.5 * (lo4 + hi4), 0.0)
    assert deformation_G(fam, 0.0, z) + deformation_G(fam, 0.0, w) == 0.0


def test_orbit_bifurcation_is_reported():
    fam = DeformationFamily(std_stadium(1.0, 2.0), {1: BumpProfile(HALF_ARC, 1.0)})
    with pytest.raises(OrbitBifurcation, match="1 12 to 2 12"):
        isospectral_derivative_check(fam, "2 12", rivals=["1 12"])


# ---------------------------------------------------------------------------
# Lagrange coefficients


def _basis_at_one(m, lam):
    # Lagrange basis on nodes lam^-j evaluated at u = 1, written without the product trick
    u = [lam ** (-j) for j in range(1, m + 1)]
    return [math.prod((1 - u[i]) / (u[j] - u[i]) for i in range(m) if i != j) for j in range(m)]


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("lam", [1.5, 2.0, 3.5, 5.0])
def test_lagrange_identities(m, lam):
    c = lagrange_coeffs(m, lam)
    assert c.A[0] == -1.0
    assert c.weighted == (m % 2 == 0)
    for k in range(m):
        assert abs(c.moment(k)) < 1e-9
    w = (lambda x: math.cos(x) / math.cos(1.0)) if c.weighted else (lambda x: 1.0)
    ref = [w(lam ** (-j)) * b for j, b in enumerate(_basis_at_one(m, lam), start=1)]
    assert np.allclose(c.A[1:], ref, rtol=1e-10, atol=0)


@pytest.mark.parametrize("m", [2, 4, 6])
@pytest.mark.parametrize("lam", [1.5, 2.0, 3.5, 5.0])
def test_lagrange_even_unweighted_top_moment(m, lam):
    # the weighting breaks the plain identity at the top order
    assert abs(lagrange_coeffs(m, lam).moment(m - 1, weighted=False)) > 0.1


def test_lagrange_rejects():
    with pytest.raises(NearUnitLambda):
        lagrange_coeffs(3, 1.0 + 1e-8)
    with pytest.raises(ValidationError):
        lagrange_coeffs(1, 2.0)


# ---------------------------------------------------------------------------
# cancellation


def _apex_flat(short_std):
    return {1: BumpProfile(HALF_ARC, 1.2, 1.0, power=4), 2: BumpProfile(HALF_ARC, 1.3, 0.7, power=4)}


def test_cancellation_decay(short_std):
    exponent, lam, res = cancellation_decay(short_std, _apex_flat(short_std), range(1, 6), 3)
    assert exponent >= 0.95 * 3 * math.log(lam)
    # each step shrinks at least as fast as lam^-m
    a, b = abs(res[0].combo), abs(res[1].combo)
    assert b / a <= 1.1 * lam**-3


def test_cancellation_sums_shape(short_std):
    r = cancellation_sums(short_std, _apex_flat(short_std), 1, 3)
    assert len(r.S) == 4 and len(r.S_complement) == 4
    lam = analyze_period_two(short_std).lam
    assert r.A == lagrange_coeffs(3, lam).A
    assert r.predicted_bound == pytest.approx(lam**-3)
    assert math.isfinite(r.combo)


# ---------------------------------------------------------------------------
# unfolded channel


NS = list(range(20, 201, 10))


@pytest.fixture(scope="module")
def long_std():
    return std_stadium(1.0, 2.0)


def test_channel_period_two_feet(long_std):
    Q = channel_quotient(long_std)
    p2 = [unfolded_period_two(long_std, n) for n in NS]
    K_A = p2[-1].foot_A.curvature_at_gluing
    K_B = p2[-1].foot_B.curvature_at_gluing
    assert weighted_intercept(NS, [p.s_bar for p in p2])[0] == pytest.approx(Q / K_A, rel=1e-2)
    assert weighted_intercept(NS, [p.t_bar for p in p2])[0] == pytest.approx(Q / K_B, rel=1e-2)
    assert max(p.perpendicularity for p in p2) < 1e-10


def test_channel_period_four(long_std):
    Q = channel_quotient(long_std)
    p4 = [unfolded_period_four(long_std, n, 2.0) for n in NS]
    assert weighted_intercept(NS, [p.phi_bar for p in p4])[0] == pytest.approx(Q * (1 - 0.5) / 2, rel=1e-2)
    assert max(abs(p.angle_mismatch) for p in p4) < 1e-10


def test_channel_period_four_coalesces(long_std):
    base = unfolded_period_two(long_std, 200).s_bar
    gaps = [abs(unfolded_period_four(long_std, 200, rho).s_bar - base) for rho in (1.5, 1.1, 1.02)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert unfolded_period_four(long_std, 200, 1.02).phi_bar < unfolded_period_four(long_std, 200, 1.5).phi_bar


def test_channel_rejects_small_rho(long_std):
    with pytest.raises(ValidationError):
        unfolded_period_four(long_std, 40, 1.01)


def test_weighted_intercept_exact():
    ns = np.arange(10, 100, 10)
    a, b = weighted_intercept(ns, 2.0 / ns + 3.0 / ns**2)
    assert a == pytest.approx(2.0, rel=1e-12)
    assert b == pytest.approx(3.0, rel=1e-12)
