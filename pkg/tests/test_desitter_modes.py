import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import spherical_jn

from branewave import desitter_modes as dm
from oracles import field, ode_oracle

KAPPAS = [-7 / 4, 0.0, 1.0, 2.0, 9 / 4, 4.0]
XIS = [0.0, 0.1, 1.0, 10.0]


@given(st.floats(-20.0, 20.0))
def test_bessel_order_classes(kappa):
    nu = dm.ModeParams(kappa).bessel_order
    assert nu * nu == pytest.approx(2.25 - kappa, abs=1e-12)
    if kappa <= 2.25:
        assert nu.imag == 0 and nu.real >= 0
    else:
        assert nu.real == 0 and nu.imag > 0
    assert (nu == 0) == (kappa == 2.25)


@given(st.floats(-8.0, 8.0), st.floats(0.0, 50.0), st.floats(-5.0, 5.0))
def test_identity_at_initial_time(kappa, xi, tau_star):
    m = dm.multipliers(dm.ModeParams(kappa), tau_star, tau_star, xi)
    assert abs(m.a[0] - 1) < 1e-10 and abs(m.b[0]) < 1e-10
    assert abs(m.da[0]) < 1e-10 and abs(m.db[0] - 1) < 1e-10


@pytest.mark.parametrize("kappa", KAPPAS)
@pytest.mark.parametrize("xi", XIS)
@pytest.mark.parametrize("span", [(0.0, 10.0), (-3.0, 7.0), (10.0, 20.0), (2.0, 2.5)])
def test_against_ode_oracle(kappa, xi, span):
    ts, t = span
    for u0, u1 in ((1.0, 0.0), (0.0, 1.0), (0.3, -0.7)):
        ref = np.array(ode_oracle(kappa, xi, ts, t, u0, u1))
        s = dm.evolve(field(xi, u0, u1, ts), dm.ModeParams(kappa), t)
        got = np.array([s.u_hat[0], s.ut_hat[0]])
        assert np.max(np.abs(got - ref)) <= 1e-8 * np.max(np.abs(ref))
        assert np.max(np.abs(got.imag)) == 0


@given(st.sampled_from(KAPPAS + [0.5, 3.0, 10.0]), st.floats(0.0, 20.0), st.floats(-2.0, 2.0),
       st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_group_property(kappa, xi, tau_star, d1, d2):
    mode = dm.ModeParams(kappa)
    init = field(xi, 0.4 + 0.2j, -1.1)
    init = dm.SpectralField(init.xi_grid, init.u_hat, init.ut_hat, tau_star)
    two = dm.evolve(dm.evolve(init, mode, tau_star + d1), mode, tau_star + d1 + d2)
    one = dm.evolve(init, mode, tau_star + d1 + d2)
    scale = max(abs(one.u_hat[0]), abs(one.ut_hat[0]), 1e-300)
    assert abs(two.u_hat[0] - one.u_hat[0]) <= 1e-8 * scale
    assert abs(two.ut_hat[0] - one.ut_hat[0]) <= 1e-8 * scale


def test_evolve_to_initial_time_is_identity():
    init = field(np.linspace(0, 5, 11), 1.0 + 2j, -0.5, 1.5)
    s = dm.evolve(init, dm.ModeParams(2.0), 1.5)
    assert np.array_equal(s.u_hat, init.u_hat) and np.array_equal(s.ut_hat, init.ut_hat)


def test_constant_is_massless_solution():
    s = dm.evolve(field(0.0, 1.0, 0.0), dm.ModeParams(0.0), 9.0)
    assert s.u_hat[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(s.ut_hat[0]) < 1e-12


def test_b_multiplier_limit_massless():
    # e^{-3tau/2} B tends to sqrt(pi/2) J_{3/2}(1) at xi = 1, tau* = 0
    p = dm._propagator(dm.ModeParams(0.0), 0.0, 10.0, 1.0)
    ref = np.sqrt(0.5 * np.pi) * np.sqrt(2 / np.pi) * spherical_jn(1, 1.0)
    assert p[1][0].real == pytest.approx(ref, abs=1e-7)


def test_critical_mass_a_multiplier():
    m = dm.multipliers(dm.ModeParams(2.25), 0.0, 8.0, 1.0)
    u, _ = ode_oracle(2.25, 1.0, 0.0, 8.0, 1.0, -1.5)  # v(0) = 1, v'(0) = 0
    assert m.a[0].real == pytest.approx(u * np.exp(12.0), rel=1e-8)
    assert abs(m.a[0]) <= 8.0 * 2.0


def test_tiny_frequency_branch_is_continuous():
    mode = dm.ModeParams(1.0)
    xs = np.array([0.99e-6, 1.01e-6])
    a = dm.evolve(field(xs, 1.0, 0.5), mode, 3.0)
    assert abs(a.u_hat[0] - a.u_hat[1]) < 1e-10
    assert abs(a.ut_hat[0] - a.ut_hat[1]) < 1e-10


def test_field_validation():
    with pytest.raises(ValueError):
        dm.SpectralField(np.array([1.0, 0.5]), np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        dm.SpectralField(np.array([0.0, 1.0]), np.zeros(2), np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        dm.SpectralField(np.array([0.0, 1.0]), np.array([np.nan, 0]), np.zeros(2), 0.0)
    with pytest.raises(ValueError):
        dm.multipliers(dm.ModeParams(0.0), 0.0, 1.0, -1.0)


# ---------------------------------------------------------------- energy


@pytest.fixture(scope="module")
def quad():
    return dm.radial_quadrature(20.0, 20, 16)


def test_zero_field_energy(quad):
    xi, w = quad
    assert dm.energy(field(xi, 0.0, 0.0, w=w), dm.ModeParams(3.0)) == 0.0


def test_negative_mass_energy_warns(quad):
    xi, w = quad
    with pytest.warns(RuntimeWarning):
        dm.energy(field(xi, 1.0, 0.0, w=w), dm.ModeParams(-1.0))


def test_quadrature_integrates_gaussian(quad):
    xi, w = quad
    # int_{R^3} e^{-|xi|^2} d xi / (2 pi)^3 = pi^{3/2} / (2 pi)^3
    assert np.sum(w * np.exp(-(xi**2))) == pytest.approx(np.pi**1.5 / (2 * np.pi) ** 3, rel=1e-12)


gauss_data = st.tuples(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.3, 4.0), st.floats(0.3, 4.0),
                       st.floats(-2.0, 2.0))


@given(st.sampled_from([0.0, 0.5, 2.0, 9 / 4, 4.0, 10.0]), gauss_data)
def test_energy_decreases(quad, kappa, data):
    xi, w = quad
    a, b, s0, s1, ts = data
    init = dm.SpectralField(xi, a * np.exp(-(xi / s0) ** 2), b * xi * np.exp(-(xi / s1) ** 2), ts, w)
    mode = dm.ModeParams(kappa)
    taus = ts + np.concatenate([[0.0], np.geomspace(1e-3, 12.0, 16)])
    e = np.array([dm.energy(dm.evolve(init, mode, t), mode) for t in taus])
    assert np.all(np.diff(e) <= 1e-12 * e[:-1])


@given(st.sampled_from([9 / 4, 3.0, 4.0, 10.0]), gauss_data)
def test_energy_bounds_above_threshold(quad, kappa, data):
    xi, w = quad
    a, b, s0, s1, ts = data
    init = dm.SpectralField(xi, a * np.exp(-(xi / s0) ** 2), (b + 0.1) * np.exp(-(xi / s1) ** 2), ts, w)
    mode = dm.ModeParams(kappa)
    for t in ts + np.geomspace(1e-3, 12.0, 8):
        for lhs, rhs in dm.energy_bounds(init, dm.evolve(init, mode, t), mode).values():
            assert lhs <= rhs


def test_energy_bounds_reject_light_modes(quad):
    xi, w = quad
    init = field(xi, 1.0, 0.0, w=w)
    with pytest.raises(ValueError):
        dm.energy_bounds(init, init, dm.ModeParams(2.0))


# ---------------------------------------------------------------- profile, decay, blow-up


def test_profile_unit_position_data():
    xi = np.linspace(0.0, 50.0, 1001)
    phi = dm.profile_phi(field(xi, 1.0, 0.0))
    ref = np.sinc(xi / np.pi)
    assert np.max(np.abs(phi.u_hat - ref)) < 1e-12


def test_profile_unit_velocity_data():
    xi = np.linspace(0.0, 50.0, 1001)
    phi = dm.profile_phi(field(xi, 0.0, 1.0))
    xs = np.where(xi == 0, 1.0, xi)
    ref = np.where(xi == 0, 1 / 3, (np.sin(xs) - xs * np.cos(xs)) / xs**3)
    assert np.max(np.abs(phi.u_hat - ref)) < 1e-12


def test_profile_is_the_late_time_limit():
    xi, w = dm.radial_quadrature(30.0, 30, 16)
    init = dm.SpectralField(xi, np.exp(-(xi**2) / 4), xi**2 * np.exp(-(xi**2) / 8), 0.0, w)
    phi = dm.profile_phi(init)
    gaps, rates = [], []
    for t in (8.0, 10.0, 12.0):
        s = dm.evolve(init, dm.ModeParams(0.0), t)
        gaps.append(np.sqrt(np.sum(w * np.abs(s.u_hat - phi.u_hat) ** 2)))
        rates.append(np.sqrt(np.sum(w * np.abs(np.exp(2 * t) * s.ut_hat - phi.ut_hat) ** 2)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert rates[0] > rates[1] > rates[2]
    assert gaps[2] < 1e-6


def test_profile_rejects_massive_modes():
    with pytest.raises(ValueError):
        dm.profile_phi(field(1.0, 1.0, 0.0), dm.ModeParams(1.0))


@pytest.mark.parametrize("kappa", [1.0, 2.0, 9 / 4, 4.0, 6.0])
def test_decay_slopes_respect_rates(kappa):
    xi, w = dm.radial_quadrature(12.0, 24, 16)
    init = dm.SpectralField(xi, np.exp(-(xi**2) / 2), xi**2 * np.exp(-(xi**2)), 0.0, w)
    fit = dm.decay_rate_fit(dm.ModeParams(kappa), init)
    full, half = dm.theoretical_rates(kappa)
    assert fit.full_slope <= full + 0.05
    assert fit.half_slope <= half + 0.05
    assert fit.tau_corrected == (kappa == 2.25)


def test_decay_fit_preconditions():
    init = field(np.linspace(0, 3, 5), 1.0, 0.0)
    with pytest.raises(ValueError):
        dm.decay_rate_fit(dm.ModeParams(0.0), init)
    with pytest.raises(ValueError):
        dm.decay_rate_fit(dm.ModeParams(1.0), init, tau_window=(6.0, 6.5))


def test_blowup_coefficient_constant_data():
    c = dm.blowup_amplitude(dm.ModeParams(-7 / 4), field(np.linspace(0, 2, 9), 0.0, 1.0))
    assert np.allclose(c.u_hat, 0.25)
    zero = dm.blowup_amplitude(dm.ModeParams(-7 / 4), field(np.linspace(0, 2, 9), 0.0, 0.0))
    assert np.all(zero.u_hat == 0)


def test_blowup_rejects_nonnegative_mass():
    with pytest.raises(ValueError):
        dm.blowup_amplitude(dm.ModeParams(0.0), field(1.0, 0.0, 1.0))


def test_blowup_matches_late_solution():
    mode = dm.ModeParams(-7 / 4)
    xi = np.linspace(0.0, 1.0, 200)
    init = field(xi, 0.0, np.exp(-((xi / 0.2) ** 2)))
    s = dm.evolve(init, mode, 15.0)
    grown = s.u_hat * np.exp(-0.5 * 15.0)
    lead = dm.blowup_amplitude(mode, init).u_hat
    exact = dm.blowup_amplitude(mode, init, exact=True).u_hat
    assert np.max(np.abs(grown - lead)) < 1e-2 * np.max(np.abs(lead))
    assert np.max(np.abs(grown - exact)) < 1e-10 * np.max(np.abs(exact))


# ---------------------------------------------------------------- finite speed


def test_zero_data_has_no_leakage():
    g = dm.BoxGrid(8.0, 32)
    z = np.zeros((32, 32, 32))
    assert dm.support_radius_check(z, z, g, dm.ModeParams(0.0), 0.0, 1.0, 1.0) == 0.0


@pytest.mark.parametrize("kappa", [0.0, 9 / 4, 4.0, -7 / 4])
def test_leakage_is_small(kappa):
    g = dm.BoxGrid(8.0, 64)
    r = g.radius()
    leak = dm.support_radius_check(dm.truncated_gaussian(r), 0.5 * dm.truncated_gaussian(r, 0.7), g,
                                   dm.ModeParams(kappa), 0.0, 1.0, 1.0)
    assert leak < 1e-5


def test_support_check_guards():
    g = dm.BoxGrid(3.0, 16)
    z = np.zeros((16, 16, 16))
    with pytest.raises(ValueError):
        dm.support_radius_check(z, z, g, dm.ModeParams(0.0), 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        dm.support_radius_check(z, z, dm.BoxGrid(8.0, 16), dm.ModeParams(0.0), 1.0, 0.0, 1.0)


def test_box_evolution_matches_radial_multiplier():
    # a single plane wave picks up exactly the (u0 -> u) multiplier of its frequency
    g = dm.BoxGrid(2 * np.pi, 16)
    x = g.coords()
    wave = np.cos(3 * x)[:, None, None] * np.ones((1, 16, 16))
    u = dm.evolve_box(wave, np.zeros_like(wave), g, dm.ModeParams(1.0), 0.0, 2.0)
    p00 = dm._propagator(dm.ModeParams(1.0), 0.0, 2.0, 3.0)[0][0].real
    assert np.max(np.abs(u - p00 * wave)) < 1e-12


def test_truncated_gaussian_support():
    r = np.linspace(0, 2, 201)
    f = dm.truncated_gaussian(r, radius=1.0)
    assert np.all(f[r >= 1.0] == 0) and f[0] == 1.0


def test_warning_free_evolution():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        dm.evolve(field(np.linspace(0, 40, 50), 1.0, 1.0), dm.ModeParams(6.0), 10.0)


def test_profile_continuous_across_small_argument_switch():
    for ts in (0.0, 1.5, 4.0):
        xi = 1e-3 * np.exp(ts) * np.array([0.999, 1.001])
        init = dm.SpectralField(xi, np.ones(2), 0.7 * np.ones(2), ts)
        phi = dm.profile_phi(init).u_hat
        assert abs(phi[0] - phi[1]) < 1e-6
        assert phi[0] == pytest.approx(1.0 + 0.7 / 3.0, rel=1e-6)
