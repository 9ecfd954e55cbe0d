import numpy as np
import pytest

from brownflow import brown, rmt
from brownflow.brown import EpsilonSchedule, GridSpec
from brownflow.cmaps import TimeParams


def ginibre(n, seed=0):
    rng = rmt.trial_rng(seed)
    return rmt.sample_increment("ginibre", n, 1.0, rng)


class TestFkLogDet:
    def test_identity(self):
        assert brown.fk_log_det(np.eye(7), 0.0) == 0.0

    def test_hand_determinant(self):
        a = np.diag([2.0, 8.0]).astype(complex)
        assert brown.fk_log_det(a, 0.0) == pytest.approx(np.log(4.0))

    def test_eigenvalue_sentinel(self):
        a = np.diag([1.0, 3.0]).astype(complex)
        assert brown.fk_log_det(a, 3.0) == -np.inf

    def test_matches_slogdet(self):
        a = ginibre(25)
        lam = 0.3 + 0.2j
        want = np.linalg.slogdet(a - lam * np.eye(25))[1] / 25
        assert brown.fk_log_det(a, lam) == pytest.approx(want, rel=1e-10)


class TestRegularizedTrace:
    def test_scalar_case(self):
        # 1x1 zero matrix: value is 1/eps^2
        a = np.zeros((1, 1), dtype=complex)
        assert brown.regularized_trace(a, 0.0, 0.5) == pytest.approx(4.0)

    def test_identity_case(self):
        a = np.eye(9, dtype=complex)
        eps = 0.3
        assert brown.regularized_trace(a, 0.0, eps) == pytest.approx(1.0 / (1 + eps) ** 2)

    def test_positive(self):
        a = ginibre(30, seed=5)
        assert brown.regularized_trace(a, 0.7j, 1e-4) > 0

    def test_nonincreasing_in_eps(self):
        a = ginibre(40, seed=6)
        rng = np.random.default_rng(2)
        schedule = EpsilonSchedule.default()
        for lam in rng.uniform(-1, 1, 5) + 1j * rng.uniform(-1, 1, 5):
            vals = [brown.regularized_trace(a, lam, e) for e in schedule.epsilons]
            diffs = np.diff(vals)  # eps decreasing -> values nondecreasing
            assert np.all(diffs >= -1e-9 * np.abs(vals[:-1]))

    def test_bounded_off_spectrum_as_eps_shrinks(self):
        a = ginibre(30, seed=7)
        lam = 4.0  # far outside the spectrum
        vals = [brown.regularized_trace(a, lam, e) for e in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert max(vals) <= 2 * vals[-1] + 1.0
        assert abs(vals[-1] - vals[-2]) / vals[-1] < 1e-3


class TestBrownDensityGrid:
    def test_total_mass_near_one(self):
        a = ginibre(60, seed=8)
        grid = GridSpec(-1.6, 1.6, -1.6, 1.6, 41, 41)
        fld = brown.brown_density_grid(a, grid, EpsilonSchedule((1e-2, 1e-3)))
        mass = brown.integrate_field(fld)
        assert abs(mass - 1.0) <= 0.02

    def test_normal_matrix_concentrates_at_eigenvalues(self):
        a = np.diag([1.0 + 0j, -1.0 + 0j])
        grid = GridSpec(-1.5, 1.5, -0.5, 0.5, 61, 21)
        fld = brown.brown_density_grid(a, grid, EpsilonSchedule((1e-3,)))
        pts = fld.grid.points()
        peak = pts[np.unravel_index(np.argmax(fld.values), fld.values.shape)]
        assert min(abs(peak - 1.0), abs(peak + 1.0)) < 0.1

    def test_sweep_recorded(self):
        a = np.eye(3, dtype=complex)
        grid = GridSpec(-1, 1, -1, 1, 5, 5)
        sched = EpsilonSchedule((1e-1, 1e-2, 1e-3))
        fld = brown.brown_density_grid(a, grid, sched)
        assert fld.meta["sweep"].shape == (3, 5, 5)


class TestLaplacianCounting:
    def test_counts_all_eigenvalues(self):
        a = ginibre(60, seed=9)
        vals = np.linalg.eigvals(a)
        r = np.abs(vals).max() + 0.4
        grid = GridSpec(-r, r, -r, r, 61, 61)
        fld = brown.laplacian_counting(a, grid)
        assert abs(brown.integrate_field(fld) - 1.0) <= 0.02

    def test_empty_region_counts_zero(self):
        a = ginibre(40, seed=10)
        grid = GridSpec(4.0, 6.0, 4.0, 6.0, 21, 21)
        fld = brown.laplacian_counting(a, grid)
        assert abs(brown.integrate_field(fld)) <= 0.02

    def test_half_plane_split(self):
        # 80/40 node counts keep every stencil point off the eigenvalues
        a = np.diag([-1.0 + 0j, 1.0 + 0j])
        grid = GridSpec(-2.0, 2.0, -1.0, 1.0, 80, 40)
        fld = brown.laplacian_counting(a, grid)
        pts = grid.points()
        left = brown.integrate_field(fld, region=pts.real < 0)
        right = brown.integrate_field(fld, region=pts.real > 0)
        assert left == pytest.approx(0.5, abs=0.02)
        assert right == pytest.approx(0.5, abs=0.02)

    def test_masking_near_exact_eigenvalue(self):
        a = np.diag([0.0 + 0j, 1.0 + 0j])
        grid = GridSpec(-0.02, 0.02, -0.02, 0.02, 3, 3)
        fld = brown.laplacian_counting(a, grid, h=0.02)
        # the center stencil hits the eigenvalue 0 exactly
        assert fld.mask.any()
        assert fld.meta["masked_cells"] >= 1


class TestL2ResolventNorm:
    def test_identity(self):
        assert brown.l2_resolvent_norm(np.eye(6), 0.0, 2) == pytest.approx(1.0)

    def test_singular_sentinel(self):
        a = np.diag([0.0, 2.0]).astype(complex)
        assert brown.l2_resolvent_norm(a, 0.0, 1) == np.inf

    def test_diverges_toward_eigenvalue(self):
        a = np.diag([1.0, -1.0]).astype(complex)
        vals = [brown.l2_resolvent_norm(a, 1.0 + d, 2) for d in (0.5, 0.1, 0.01)]
        assert vals[0] < vals[1] < vals[2]

    def test_smallest_singular_value_bound(self):
        a = ginibre(30, seed=11)
        lam = 2.5 + 0.5j
        smin = np.linalg.svd(a - lam * np.eye(30), compute_uv=False).min()
        assert brown.l2_resolvent_norm(a, lam, 2) <= (1 + 1e-9) / smin**2


class TestEpsilonInequality:
    def test_scalar_monotonicity(self):
        a = np.array([[0.7 + 0.2j]])
        rep = brown.epsilon_inequality_check(a, 0.0)
        assert rep.passed
        assert rep.max_violation <= 1e-9

    def test_random_matrix_many_lambdas(self):
        a = ginibre(50, seed=12)
        rng = np.random.default_rng(13)
        for _ in range(20):
            lam = rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2)
            rep = brown.epsilon_inequality_check(a, lam)
            assert rep.skipped or rep.max_violation <= 1e-9

    def test_normal_invertible_reaches_near_equality(self):
        a = np.diag([0.8 + 0j, 1.3 + 0j, -1.1 + 0j])
        sched = EpsilonSchedule(tuple(np.geomspace(1e-2, 1e-9, 10)))
        rep = brown.epsilon_inequality_check(a, 0.0, sched)
        # diagonal case: lhs -> sum 1/|a_i|^4 / N = bound as eps -> 0
        assert rep.lhs[-1] == pytest.approx(rep.bound, rel=1e-5)

    def test_singular_shift_skips(self):
        a = np.diag([0.0, 1.0]).astype(complex)
        rep = brown.epsilon_inequality_check(a, 0.0)
        assert rep.skipped is not None


class TestExports:
    def test_field_csv_json(self, tmp_path):
        a = np.eye(3, dtype=complex)
        grid = GridSpec(-1, 1, -1, 1, 4, 3)
        fld = brown.laplacian_counting(a, grid, h=0.1)
        csv_path = tmp_path / "field.csv"
        brown.field_to_csv(fld, csv_path)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0] == "re,im,value,mask"
        assert len(lines) == 1 + 12
        json_path = tmp_path / "field.json"
        brown.field_to_json(fld, json_path, extra={"seed": 3})
        import json as _json

        payload = _json.loads(json_path.read_text())
        assert payload["kind"] == "fk_laplacian"
        assert payload["grid"]["nx"] == 4
        assert payload["seed"] == 3

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            EpsilonSchedule((1e-3, 1e-2))
        with pytest.raises(ValueError):
            EpsilonSchedule((1.0, -0.5))
