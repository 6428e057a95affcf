import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stadium_spectrum.errors import (
    FitUnstable,
    InsufficientDecayWindow,
    NotHyperbolic,
    ParityMismatch,
)
from stadium_spectrum.geometry import boundary_at, std_stadium
from stadium_spectrum.invariants import (
    analyze_period_two,
    extract_spectral_invariants,
    family_residuals,
    fit_geometric_limit,
    fit_homoclinic_constants,
    length_defect_series,
    recover_curvatures,
    recover_from_estimates,
    relation_two_lhs,
    _noise,
)

from oracles import sampled_diameter

WEAK_LAMBDA = (3.76 + math.sqrt(3.76**2 - 4)) / 2


# ---------------------------------------------------------------------------
# period-two data


def test_std_period_two_closed_form(std):
    d = analyze_period_two(std)
    assert d.tau_star == pytest.approx(4.0, abs=1e-12)
    assert d.a_z == pytest.approx(-3.0, abs=1e-12)
    assert d.lam == pytest.approx(17 + 12 * math.sqrt(2), rel=1e-12)
    ev = np.max(np.abs(np.linalg.eigvals(d.monodromy)))
    assert ev == pytest.approx(d.lam, rel=1e-8)
    assert np.linalg.det(d.monodromy) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("name", ["std", "weak", "squash"])
def test_period_two_identities(name, request):
    t = request.getfixturevalue(name)
    d = analyze_period_two(t)
    P = np.array([boundary_at(t, r).position for r in np.linspace(0, t.perimeter, 4000, endpoint=False)])
    assert sampled_diameter(P) <= d.tau_star + 1e-12
    assert sampled_diameter(P) == pytest.approx(d.tau_star, abs=2e-5)
    # unit determinant of the half-step blocks
    assert d.a_z * d.a_w - d.b * d.tau_star == pytest.approx(1.0, abs=1e-9)
    assert d.lambda_z * d.lambda_w == pytest.approx(d.lam, rel=1e-10)
    assert d.lam + 1 / d.lam == pytest.approx(np.trace(d.monodromy), rel=1e-9)
    ev = np.max(np.abs(np.linalg.eigvals(d.monodromy)))
    assert ev == pytest.approx(d.lam, rel=1e-8)


def test_weak_multiplier(weak):
    assert analyze_period_two(weak).lam == pytest.approx(WEAK_LAMBDA, rel=1e-9)


def test_disk_is_not_hyperbolic():
    with pytest.warns(UserWarning):
        disk = std_stadium(1.0, 0.0)
    # the round period-two orbit is degenerate, which the solver also flags
    with pytest.raises(NotHyperbolic), pytest.warns(UserWarning):
        analyze_period_two(disk)


# ---------------------------------------------------------------------------
# homoclinic constants


@pytest.mark.parametrize("name", ["weak", "squash"])
@pytest.mark.parametrize("family", [2, 3])
def test_homoclinic_ratios(name, family, request):
    t = request.getfixturevalue(name)
    d = analyze_period_two(t)
    h = fit_homoclinic_constants(t, family=family)
    assert h.decay_exponent == pytest.approx(math.log(d.lam), rel=1e-2)
    assert h.C_phi / h.C_s == pytest.approx(math.tan(d.theta_z), rel=2e-2)
    assert h.C_t / h.C_s == pytest.approx(-(1 + 1 / d.lam) / (2 * d.a_w), rel=2e-2)
    assert h.C_psi / h.C_t == pytest.approx(math.tan(d.theta_w), rel=2e-2)
    # the t-side coefficient is the z-side one pushed through half the monodromy
    assert h.Theta_w == pytest.approx(d.lam * h.Theta_z, rel=1e-3)


@pytest.mark.parametrize("name", ["weak", "squash"])
def test_direct_family_turns_back(name, request):
    h = fit_homoclinic_constants(request.getfixturevalue(name), family=2)
    assert h.Theta_z == pytest.approx(-1.0, rel=5e-2)


@pytest.mark.parametrize("L", [0.1, 0.3, 0.5])
def test_flat_family_coefficient_on_stadia(L):
    # signed curvature on the arc is -K_z
    t = std_stadium(1.0, L)
    d = analyze_period_two(t)
    h = fit_homoclinic_constants(t, family=3)
    tz, k = math.tan(d.theta_z), -d.K_z
    assert h.Theta_z == pytest.approx((tz + k) / (tz - k), rel=1e-3)


def test_short_window_is_reported():
    with pytest.raises(InsufficientDecayWindow):
        fit_homoclinic_constants(std_stadium(1.0, 2.0), family=2, n=1)


# ---------------------------------------------------------------------------
# length defects and residual fits


def test_defect_ratio_and_sign(weak):
    d = analyze_period_two(weak)
    ds = length_defect_series(weak)
    assert ds.ratio == pytest.approx(d.lam**-2, rel=2e-2)
    # pairs near the excursion are shorter than twice the diameter
    assert all(v > 0 for _, v in ds.defects[:4])


def test_family_residuals_geometric(weak):
    d = analyze_period_two(weak)
    rows = family_residuals(weak, range(3, 13))
    fit = fit_geometric_limit([r[0] for r in rows], [r[2] for r in rows], noise=[_noise(r[1], d.tau_star) for r in rows])
    assert fit.ratio == pytest.approx(d.lam**-2, rel=2e-2)
    assert fit.stable
    assert fit.window_shift_change <= fit.residual_bound


@settings(max_examples=40, deadline=None)
@given(
    limit=st.floats(-5, 5),
    coef=st.floats(0.1, 10) | st.floats(-10, -0.1),
    rho=st.floats(0.05, 0.7),
)
def test_geometric_limit_synthetic(limit, coef, rho):
    n = np.arange(1, 9)
    v = limit + coef * rho**n
    fit = fit_geometric_limit(n, v)
    assert fit.ratio == pytest.approx(rho, rel=1e-6)
    assert fit.limit == pytest.approx(limit, abs=1e-10 * max(1.0, abs(coef)))


def test_geometric_limit_rejects_bad_input():
    with pytest.raises(FitUnstable):
        fit_geometric_limit([1, 2], [1.0, 0.5])
    with pytest.raises(FitUnstable):
        fit_geometric_limit([1, 2, 4], [1.0, 0.5, 0.25])
    with pytest.raises(FitUnstable):
        fit_geometric_limit([1, 2, 3, 4], [1.0, 2.0, 4.0, 8.0])


# ---------------------------------------------------------------------------
# spectral invariants


def test_extract_on_weak(weak):
    est = extract_spectral_invariants(weak, [3, 7, 11, 15, 19, 23])
    assert set(est.classes) == {1}
    assert est.rate == pytest.approx(WEAK_LAMBDA**-2, rel=2e-2)
    assert -est.B == pytest.approx(est.L_infinity, abs=1e-9)
    # the reflection symmetry ties the two arc families
    for i, codes in enumerate(est.classes[1].argmax):
        assert "2(12)^%d" % (2 * i + 1) in codes


def test_extract_needs_runs_of_four(weak):
    with pytest.raises(ParityMismatch):
        extract_spectral_invariants(weak, [3, 7])
    with pytest.raises(ParityMismatch):
        extract_spectral_invariants(weak, [3, 7, 15])


def test_recovery_needs_both_classes(weak):
    est = extract_spectral_invariants(weak, [3, 7, 11])
    with pytest.raises(ParityMismatch):
        recover_from_estimates(est)


# ---------------------------------------------------------------------------
# curvature recovery


def test_first_relation_holds_for_std(std):
    d = analyze_period_two(std)
    K = 1.0
    lhs = 4 * (d.tau_star * K - 1) ** 2 - 2
    assert lhs == pytest.approx(d.lam + 1 / d.lam, rel=1e-12)


@pytest.mark.parametrize("K", [0.8, 1.0, 1.3, 2.0, 3.0])
def test_symmetric_recovery(K):
    tau = 3.0
    x = 2 * (tau * K - 1) ** 2 - 1
    lam = x + math.sqrt(x * x - 1)
    rec = recover_curvatures(tau, lam, 1.0, 1.0)
    assert rec.K1 == pytest.approx(K, rel=1e-9)
    assert rec.K2 == pytest.approx(K, rel=1e-9)


def test_relation_two_is_odd_in_amplitudes():
    assert relation_two_lhs(2.0, 1.0, 5.0) == pytest.approx(-relation_two_lhs(1.0, 2.0, 5.0))
    assert relation_two_lhs(1.0, 1.0, 5.0) == 0.0
