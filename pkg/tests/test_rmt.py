import numpy as np
import pytest

from brownflow import cmaps as cm
from brownflow import domains as dm
from brownflow import rmt
from brownflow.cmaps import TimeParams
from brownflow.errors import SingularMatrixError, StepSizeError
from brownflow.hall import LaurentPoly


def one_param_config(**kw):
    base = dict(N=40, params=TimeParams.one_parameter(1.0), steps=100, seed=7, kind="gl_bm")
    base.update(kw)
    return rmt.EnsembleConfig(**base)


class TestIncrements:
    def test_ginibre_trace_variance(self):
        # E (1/N) Tr(dC dC*) = dt, checked within 3 sigma over 1000 draws
        rng = rmt.trial_rng(0)
        n, dt, m = 50, 0.7, 1000
        vals = np.empty(m)
        for i in range(m):
            dc = rmt.sample_increment("ginibre", n, dt, rng)
            vals[i] = np.trace(dc @ dc.conj().T).real / n
        se = vals.std(ddof=1) / np.sqrt(m)
        assert abs(vals.mean() - dt) <= 3 * se

    def test_wigner_is_exactly_hermitian(self):
        rng = rmt.trial_rng(1)
        dx = rmt.sample_increment("wigner", 37, 0.3, rng)
        assert np.array_equal(dx, dx.conj().T)

    def test_wigner_entry_variances(self):
        rng = rmt.trial_rng(2)
        n, dt, m = 8, 0.5, 4000
        offs = np.empty(m, dtype=complex)
        diag = np.empty(m)
        for i in range(m):
            dx = rmt.sample_increment("wigner", n, dt, rng)
            offs[i] = dx[0, 1]
            diag[i] = dx[2, 2].real
        assert np.mean(np.abs(offs) ** 2) == pytest.approx(dt / n, rel=0.15)
        assert np.mean(diag**2) == pytest.approx(dt / n, rel=0.15)

    def test_small_dt_small_norm(self):
        rng = rmt.trial_rng(3)
        dc = rmt.sample_increment("ginibre", 60, 1e-10, rng)
        assert np.linalg.norm(dc) < 1e-3

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            rmt.sample_increment("ginibre", 10, 0.0, rmt.trial_rng(0))


class TestSimulate:
    def test_deterministic_for_fixed_seed(self):
        cfg = one_param_config()
        assert np.array_equal(rmt.simulate(cfg), rmt.simulate(cfg))

    def test_trials_differ(self):
        cfg = one_param_config()
        assert not np.array_equal(rmt.simulate(cfg, trial=0), rmt.simulate(cfg, trial=1))

    def test_short_time_near_identity(self):
        cfg = one_param_config(params=TimeParams.one_parameter(1e-6), steps=10)
        b = rmt.simulate(cfg)
        assert np.linalg.norm(b - np.eye(40)) < 0.1

    def test_unitary_defect_controlled(self):
        cfg = one_param_config(kind="unitary_bm", N=60, steps=200, params=TimeParams.one_parameter(2.0))
        u = rmt.simulate(cfg)
        assert np.linalg.norm(u.conj().T @ u - np.eye(60)) <= 1e-8

    def test_unitary_without_projection_drifts(self):
        cfg = one_param_config(kind="unitary_bm", N=60, steps=200, params=TimeParams.one_parameter(2.0))
        u = rmt.simulate(cfg, re_unitarize=False)
        defect = np.linalg.norm(u.conj().T @ u - np.eye(60))
        assert defect > 1e-6  # visibly off the group without the projection
        assert np.isfinite(defect)

    def test_elliptic_equals_gl_in_law(self):
        # s = t elliptic matches gl at time t through low trace moments
        n, trials = 60, 24
        gl_m, el_m = [], []
        for trial in range(trials):
            cfg_g = one_param_config(kind="gl_bm", N=n, steps=150, seed=40)
            cfg_e = rmt.EnsembleConfig(
                N=n, params=TimeParams.one_parameter(1.0), steps=150, seed=41, kind="elliptic_bm"
            )
            gl_m.append(rmt.trace_moment(rmt.simulate(cfg_g, trial), 1).real)
            el_m.append(rmt.trace_moment(rmt.simulate(cfg_e, trial), 1).real)
        gl_m, el_m = np.array(gl_m), np.array(el_m)
        se = np.hypot(gl_m.std(ddof=1), el_m.std(ddof=1)) / np.sqrt(trials)
        assert abs(gl_m.mean() - el_m.mean()) <= 4 * se

    def test_gaussian_kinds_single_draw(self):
        cfg = one_param_config(kind="ginibre")
        a = rmt.simulate(cfg)
        assert a.shape == (40, 40)
        cfg = one_param_config(kind="wigner")
        w = rmt.simulate(cfg)
        assert np.array_equal(w, w.conj().T)

    def test_blowup_detection(self):
        cfg = one_param_config(params=TimeParams.one_parameter(4e4), steps=4000, N=4)
        with pytest.raises(StepSizeError):
            rmt.simulate(cfg)


class TestEigenvalues:
    def test_identity(self):
        cloud = rmt.eigenvalues(np.eye(5))
        assert np.allclose(cloud.values, 1.0)

    def test_diagonal(self):
        d = np.diag([2.0, -1.0, 0.5 + 0.5j])
        cloud = rmt.eigenvalues(d)
        assert np.allclose(sorted(cloud.values, key=abs), sorted(d.diagonal(), key=abs))

    def test_nilpotent(self):
        cloud = rmt.eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert np.allclose(cloud.values, 0.0)


class TestTraceMoment:
    def test_identity_all_n(self):
        for n in (-3, -1, 0, 1, 4):
            assert rmt.trace_moment(np.eye(6), n) == pytest.approx(1.0)

    def test_negative_power_hand_value(self):
        a = np.diag([2.0, 8.0]).astype(complex)
        assert rmt.trace_moment(a, -1) == pytest.approx((0.5 + 0.125) / 2)

    def test_singular_rejected(self):
        with pytest.raises(SingularMatrixError):
            rmt.trace_moment(np.diag([1.0, 0.0]).astype(complex), -1)

    def test_gl_holomorphic_moments_are_one(self):
        # tau(b_t^k) = 1 for the multiplicative motion
        trials = 24
        vals = np.empty(trials, dtype=complex)
        for trial in range(trials):
            cfg = one_param_config(N=80, steps=150, seed=50)
            vals[trial] = rmt.trace_moment(rmt.simulate(cfg, trial), 2)
        se = vals.real.std(ddof=1) / np.sqrt(trials)
        assert abs(vals.real.mean() - 1.0) <= 4 * se + 0.02


class TestConditionalExpectation:
    def test_constant_polynomial_exact(self):
        b = np.diag([1.0, 2.0]).astype(complex)
        est = rmt.conditional_expectation_mc(b, 1.0, LaurentPoly({0: 1.0}), 5, seed=0, steps=4)
        assert np.allclose(est, np.eye(2))

    def test_u_squared_matches_closed_form(self):
        n, m, t = 60, 400, 1.0
        b = rmt.simulate(one_param_config(N=n, steps=150, seed=60))
        est = rmt.conditional_expectation_mc(b, t, LaurentPoly({2: 1.0}), m, seed=61, steps=32)
        target = np.exp(-t) * (b @ b - t * b)
        rel = np.linalg.norm(est - target) / np.linalg.norm(target)
        assert rel <= 5 / np.sqrt(m) + 0.5 / n**2

    def test_u_matches_first_moment(self):
        n, m, t = 60, 400, 1.0
        b = rmt.simulate(one_param_config(N=n, steps=150, seed=62))
        est = rmt.conditional_expectation_mc(b, t, LaurentPoly({1: 1.0}), m, seed=63, steps=32)
        target = np.exp(-t / 2) * b
        assert np.linalg.norm(est - target) / np.linalg.norm(target) <= 5 / np.sqrt(m)


class TestContainment:
    def test_all_ones_inside(self):
        spec = dm.DomainSpec.one_parameter(2.0)
        cloud = rmt.EigenvalueCloud(values=np.ones(10, dtype=complex), config=None)
        assert rmt.containment_stats(cloud, spec) == 1.0

    def test_zero_always_outside(self):
        spec = dm.DomainSpec.one_parameter(2.0)
        cloud = rmt.EigenvalueCloud(values=np.zeros(5, dtype=complex), config=None)
        assert rmt.containment_stats(cloud, spec, margin=10.0) == 0.0

    def test_gl_cloud_mostly_inside(self):
        cfg = one_param_config(N=100, steps=200, params=TimeParams.one_parameter(2.0), seed=70)
        cloud = rmt.eigenvalues(rmt.simulate(cfg), cfg)
        spec = dm.DomainSpec.one_parameter(2.0)
        assert rmt.containment_stats(cloud, spec, margin=0.25) >= 0.95


class TestExport:
    def test_csv_and_metadata(self, tmp_path):
        cfg = one_param_config(N=10, steps=20)
        cloud = rmt.eigenvalues(rmt.simulate(cfg), cfg)
        path = tmp_path / "ev.csv"
        rmt.cloud_to_csv(cloud, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "trial,re,im"
        assert len(lines) == 11
        meta = rmt.cloud_metadata(cloud, extra={"margin": 0.1})
        assert meta["N"] == 10 and meta["kind"] == "gl_bm" and meta["margin"] == 0.1

    def test_identical_seed_identical_bytes(self, tmp_path):
        cfg = one_param_config(N=15, steps=30)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        rmt.cloud_to_csv(rmt.eigenvalues(rmt.simulate(cfg), cfg), p1)
        rmt.cloud_to_csv(rmt.eigenvalues(rmt.simulate(cfg), cfg), p2)
        assert p1.read_bytes() == p2.read_bytes()
