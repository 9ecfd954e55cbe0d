import numpy as np
import pytest

from brownflow import cmaps as cm
from brownflow.errors import (
    AccuracyError,
    DomainError,
    ExponentOverflowError,
    SingularPointError,
)

T_BATTERY = (0.5, 1.0, 2.0, 3.9, 4.0, 4.1)


class TestFEval:
    def test_fixed_point_at_zero(self):
        assert cm.f_eval(1.7, 0.0) == 0.0

    def test_hand_value(self):
        # direct substitution: f_2(0.5) = 0.5 e^3
        assert cm.f_eval(2.0, 0.5) == pytest.approx(0.5 * np.e**3, abs=1e-12)

    def test_unit_circle_isometry(self):
        thetas = np.linspace(1e-4, 2 * np.pi - 1e-4, 10_000)
        vals = cm.f_eval(2.0, np.exp(1j * thetas))
        assert np.max(np.abs(np.abs(vals) - 1.0)) <= 1e-12

    def test_singular_point(self):
        with pytest.raises(SingularPointError):
            cm.f_eval(1.0, 1.0)

    def test_overflow_reports_exponent(self):
        with pytest.raises(ExponentOverflowError) as err:
            cm.f_eval(800.0, 1.0 - 1e-9)
        assert err.value.exponent > 700

    def test_reciprocal_symmetry(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(-2, 2, 200) + 1j * rng.uniform(-2, 2, 200)
        z = z[np.abs(z - 1.0) > 0.1]
        z = z[np.abs(z) > 0.05]
        for t in (0.5, 2.0):
            prod = cm.f_eval(t, 1.0 / z) * cm.f_eval(t, z)
            assert np.max(np.abs(prod - 1.0)) <= 1e-10

    def test_derivative_at_zero(self):
        h = 1e-7
        for s in (0.5, 1.0, 3.0):
            num = (cm.f_eval(s, h) - cm.f_eval(s, -h)) / (2 * h)
            assert abs(num - np.exp(s / 2)) <= 1e-8

    def test_analytic_derivative_matches_fd(self):
        z = 0.3 + 0.2j
        _, der = cm.f_eval(1.5, z, with_derivative=True)
        h = 1e-6
        fd = (cm.f_eval(1.5, z + h) - cm.f_eval(1.5, z - h)) / (2 * h)
        assert abs(der - fd) <= 1e-7

    def test_t_zero_is_identity(self):
        assert cm.f_eval(0.0, 0.4 + 0.1j) == pytest.approx(0.4 + 0.1j)


class TestChiEval:
    def test_zero(self):
        assert cm.chi_eval(1.0, 0.0) == 0.0

    def test_small_root_frozen_oracle(self):
        # brentq on x exp(0.5 (1+x)/(1-x)) = 0.3 over [0, 0.3], xtol 1e-15
        assert cm.chi_eval(1.0, 0.3) == pytest.approx(0.15208241434004957, abs=1e-10)
        assert abs(cm.chi_eval(1.0, 0.3)) < 0.3

    @pytest.mark.parametrize("t", T_BATTERY)
    def test_round_trip(self, t):
        rng = np.random.default_rng(11)
        z = rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-1, 1, 1000)
        z = 0.95 * z / np.maximum(np.abs(z), 1.0)
        resid = np.abs(cm.f_eval(t, cm.chi_eval(t, z)) - z)
        assert resid.max() <= 1e-10

    def test_boundary_value_inside_support(self):
        # theta = 1 is inside supp nu_2 (half-width 1 + pi/2)
        w = np.exp(1j)
        chi = cm.chi_eval(2.0, w)
        assert abs(cm.f_eval(2.0, chi) - w) <= 1e-9

    def test_rejects_exterior(self):
        with pytest.raises(DomainError):
            cm.chi_eval(1.0, 1.5 + 0.0j)

    def test_schwarz_contraction(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(-1, 1, 50) + 1j * rng.uniform(-1, 1, 50)
        w = 0.9 * w / np.maximum(np.abs(w), 1.0)
        assert np.all(np.abs(cm.chi_eval(2.0, w)) <= np.abs(w) + 1e-12)


class TestLevelFunction:
    def test_value_one(self):
        assert cm.t_level(1.0) == 0.0

    def test_unit_circle_reduction(self):
        thetas = np.linspace(0, 2 * np.pi, 64)
        lam = np.exp(1j * thetas)
        assert np.allclose(cm.t_level(lam), np.abs(lam - 1.0) ** 2, atol=1e-12)

    def test_hand_value(self):
        assert cm.t_level(2.0) == pytest.approx(np.log(4.0) / 3.0, abs=1e-12)

    def test_zero_sentinel(self):
        assert cm.t_level(0.0) == np.inf

    def test_reciprocal_invariance(self):
        rng = np.random.default_rng(5)
        lam = rng.uniform(0.1, 3, 100) * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
        assert np.allclose(cm.t_level(1.0 / lam), cm.t_level(lam), rtol=1e-10)

    def test_smooth_across_unit_circle(self):
        # the series switch must agree with the raw formula nearby
        for r in (1 - 2e-5, 1 - 1e-6, 1 + 1e-6, 1 + 2e-5):
            lam = r * np.exp(0.4j)
            direct = abs(lam - 1) ** 2 * np.log(r**2) / (r**2 - 1)
            assert cm.t_level(lam) == pytest.approx(direct, rel=1e-9)

    def test_gradient_matches_fd(self):
        for lam in (0.7 + 0.3j, 2.0 - 1.0j, -0.5 + 0.1j):
            g = cm.t_level_gradient(lam)
            h = 1e-6
            gx = (cm.t_level(lam + h) - cm.t_level(lam - h)) / (2 * h)
            gy = (cm.t_level(lam + 1j * h) - cm.t_level(lam - 1j * h)) / (2 * h)
            assert abs(g - (gx + 1j * gy)) <= 1e-6 * max(1.0, abs(g))


class TestMoments:
    def test_zeroth(self):
        assert cm.nu_moment(1.7, 0) == 1.0

    @pytest.mark.parametrize("t", (0.3, 1.0, 2.5))
    def test_first_two_moments(self, t):
        assert cm.nu_moment(t, 1) == pytest.approx(np.exp(-t / 2), abs=1e-14)
        assert cm.nu_moment(t, 2) == pytest.approx(np.exp(-t) * (1 - t), abs=1e-14)

    def test_oracle_at_small_t_tends_to_one(self):
        for k in (1, 3, 5):
            assert cm.nu_moment_oracle(1e-8, k) == pytest.approx(1.0, abs=1e-6)

    def test_oracle_known_values(self):
        assert cm.nu_moment_oracle(1.0, 2) == pytest.approx(0.0, abs=1e-11)
        assert cm.nu_moment_oracle(2.0, 1) == pytest.approx(np.exp(-1.0), abs=1e-11)

    @pytest.mark.parametrize("t", (0.5, 1.0, 2.0, 3.9))
    def test_closed_form_matches_oracle(self, t):
        for k in range(1, 9):
            assert abs(cm.nu_moment(t, k) - cm.nu_moment_oracle(t, k)) <= 1e-10

    def test_negative_index_symmetry(self):
        for k in range(1, 9):
            assert cm.nu_moment(1.3, -k) == cm.nu_moment(1.3, k)


class TestSupport:
    def test_closes_at_four(self):
        sup = cm.nu_support(4.0)
        assert sup.theta_max == pytest.approx(np.pi)

    def test_hand_value_t2(self):
        assert cm.nu_support(2.0).theta_max == pytest.approx(1.0 + np.pi / 2, abs=1e-12)

    def test_full_circle_beyond_four(self):
        assert cm.nu_support(5.0).full_circle
        assert not cm.nu_support(3.99).full_circle


class TestDensity:
    @pytest.mark.parametrize("t", T_BATTERY)
    def test_mass_and_positivity(self, t):
        g = cm.nu_density(t)
        assert abs(g.mass() - 1.0) <= 1e-6
        assert g.density.min() >= 0.0

    def test_vanishes_outside_support(self):
        g = cm.nu_density(2.0)
        tail = np.abs(g.thetas) > g.support.theta_max + 1e-2
        assert tail.any()
        assert g.density[tail].max() <= 1e-6

    def test_grid_moments_match_closed_form(self):
        g = cm.nu_density(1.0)
        for k in range(7):
            assert abs(g.moment(k) - cm.nu_moment(1.0, k)) <= 1e-6

    def test_endpoints_match_support_formula(self):
        g = cm.nu_density(2.0)
        lit = np.flatnonzero(g.density > 1e-4)
        assert abs(g.thetas[lit[-1]] - g.support.theta_max) <= 1e-3
        assert abs(g.thetas[lit[0]] + g.support.theta_max) <= 1e-3

    def test_small_time_concentrates(self):
        g = cm.nu_density(0.1)
        # arc shrinks like 2 sqrt(t) and the peak density grows
        assert g.support.theta_max < 0.8
        assert g.density.max() > 1.0

    def test_tiny_grid_rejected(self):
        with pytest.raises(ValueError):
            cm.nu_density(1.0, grid_size=32)

    def test_coarse_grid_fails_mass_check(self):
        with pytest.raises(AccuracyError):
            cm.nu_density(2.0, grid_size=64)


class TestExtendedChi:
    def test_zero(self):
        assert cm.chi_s_extended(2.0, 0.0) == 0.0

    @pytest.mark.parametrize("s", (2.0, 3.0, 5.0))
    def test_reciprocal_identity(self, s):
        rng = np.random.default_rng(17)
        z = rng.uniform(0.2, 0.9, 40) * np.exp(1j * rng.uniform(0, 2 * np.pi, 40))
        lhs = cm.chi_s_extended(s, 1.0 / z)
        rhs = 1.0 / cm.chi_s_extended(s, z)
        assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_minus_one_outside_support_of_nu3(self):
        # f_t(-1) = -1 for every t, so the continuation must return -1,
        # a point on the unit circle (reflection identity forces |chi| = 1
        # on the circle off the support arc)
        chi = cm.chi_s_extended(3.0, -1.0)
        assert abs(cm.f_eval(3.0, chi) + 1.0) <= 1e-10
        assert abs(chi + 1.0) <= 1e-6

    def test_rejects_support_points(self):
        with pytest.raises(DomainError):
            cm.chi_s_extended(3.0, np.exp(0.5j))
        with pytest.raises(DomainError):
            cm.chi_s_extended(5.0, np.exp(2.0j))  # full circle at s = 5


class TestTwoParameterMaps:
    def test_degenerate_s_equals_t(self):
        assert cm.chi_st_eval(2.0, 2.0, 0.5) == cm.chi_eval(2.0, 0.5)
        assert cm.f_st_eval(2.0, 2.0, 5.0) == cm.f_eval(2.0, 5.0)

    def test_zero_fixed(self):
        assert cm.chi_st_eval(3.0, 1.0, 0.0) == 0.0
        assert cm.f_st_eval(3.0, 1.0, 0.0) == 0.0

    def test_round_trip_exterior(self):
        rng = np.random.default_rng(23)
        lam = rng.uniform(6, 12, 100) * np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
        z = cm.f_st_eval(3.0, 1.0, lam)
        back = cm.chi_st_eval(3.0, 1.0, z)
        assert np.max(np.abs(back - lam)) <= 1e-10 * np.abs(lam).max()

    def test_hole_exterior_for_s5(self):
        lam = 0.02 + 0.01j
        z = cm.f_st_eval(5.0, 3.0, lam)
        assert abs(cm.chi_st_eval(5.0, 3.0, z) - lam) <= 1e-10

    def test_interior_rejected(self):
        with pytest.raises(DomainError):
            cm.f_st_eval(3.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            cm.f_st_eval(2.0, 2.0, 1.0)

    def test_s_smaller_than_t_rejected(self):
        with pytest.raises(DomainError):
            cm.chi_st_eval(1.0, 1.5, 0.3)

    def test_large_lambda_asymptotics(self):
        # chi_{s,t} grows like e^{t/2} z, so f_{s,t}(lam) ~ e^{-t/2} lam
        lam = 200.0 + 50.0j
        z = cm.f_st_eval(3.0, 1.0, lam)
        assert abs(z / lam - np.exp(-0.5)) < 0.02


class TestTimeParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            cm.TimeParams(1.0, -0.5)
        with pytest.raises(ValueError):
            cm.TimeParams(0.4, 1.0)  # violates s > t/2

    def test_one_parameter_mode(self):
        p = cm.TimeParams.one_parameter(2.0)
        assert p.s == p.t == 2.0
        assert p.is_one_parameter
