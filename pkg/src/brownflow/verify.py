"""Acceptance suite: every release gate as a named, machine-checkable run.

Each check pins its tolerance at the value promised by the package
contract and returns a CheckResult; ``run_suite`` executes a selection
and prints one pass/fail line per check.  The same functions back the
``brownflow verify`` subcommand and the acceptance test module, so
there is exactly one implementation of each gate.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import brown, cmaps, domains, hall, rmt
from .cmaps import TimeParams
from .errors import BrownflowError

__all__ = ["CheckResult", "CHECKS", "run_check", "run_suite", "suite_report"]

_SEED = 20260801


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (
            f"[{tag}] {self.name}: value {self.value:.3e} vs tolerance "
            f"{self.tolerance:.3e} ({self.seconds:.1f} s) {self.detail}"
        )


CHECKS = {}


def _register(name):
    def deco(fn):
        CHECKS[name] = fn
        return fn

    return deco


@_register("01-map-round-trip")
def check_map_round_trip():
    """|f_t(chi_t(z)) - z| <= 1e-10 on 1000 points for six times, under 5 s."""
    start = time.perf_counter()
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    for t in (0.5, 1.0, 2.0, 3.9, 4.0, 4.1):
        z = rng.uniform(-1, 1, 1000) + 1j * rng.uniform(-1, 1, 1000)
        z = 0.95 * z / np.maximum(np.abs(z), 1.0)
        resid = np.abs(cmaps.f_eval(t, cmaps.chi_eval(t, z)) - z)
        worst = max(worst, float(resid.max()))
    elapsed = time.perf_counter() - start
    return CheckResult(
        name="01-map-round-trip",
        passed=worst <= 1e-10 and elapsed < 5.0,
        value=worst,
        tolerance=1e-10,
        detail=f"runtime {elapsed:.2f} s (< 5 s required)",
    )


@_register("02-moments")
def check_moments():
    """nu_2(t) = e^{-t}(1-t) and oracle agreement <= 1e-10 for |k| <= 8."""
    worst = 0.0
    for t in (0.5, 1.0, 2.0, 3.9):
        worst = max(worst, abs(cmaps.nu_moment(t, 2) - np.exp(-t) * (1 - t)))
        for k in range(1, 9):
            oracle = cmaps.nu_moment_oracle(t, k)
            worst = max(worst, abs(cmaps.nu_moment(t, k) - oracle))
            worst = max(worst, abs(cmaps.nu_moment(t, -k) - oracle))
    return CheckResult(
        name="02-moments",
        passed=worst <= 1e-10,
        value=worst,
        tolerance=1e-10,
        detail="closed form vs coefficient-extraction oracle, |k| <= 8",
    )


@_register("03-support-arc")
def check_support_arc():
    """Density endpoints at t=2 within 1e-3 rad of 1 + pi/2; mass 1 +- 1e-6."""
    grid = cmaps.nu_density(2.0)
    lit = np.flatnonzero(grid.density > 1e-4)
    theta_hi = grid.thetas[lit[-1]]
    theta_lo = grid.thetas[lit[0]]
    target = 1.0 + np.pi / 2.0
    end_err = max(abs(theta_hi - target), abs(theta_lo + target))
    mass_err = abs(grid.mass() - 1.0)
    return CheckResult(
        name="03-support-arc",
        passed=end_err <= 1e-3 and mass_err <= 1e-6,
        value=end_err,
        tolerance=1e-3,
        detail=f"mass deviation {mass_err:.2e} (<= 1e-6 required)",
    )


@_register("04-domain-facts")
def check_domain_facts():
    """Membership facts, loop counts, and the +-i circle crossings of Sigma_2."""
    problems = []
    for t in (1.0, 2.0, 4.0, 4.1):
        spec = domains.DomainSpec.one_parameter(t)
        if domains.contains(spec, 1.0).verdict != "inside":
            problems.append(f"1 not inside Sigma_{t}")
        if domains.contains(spec, 0.0).verdict != "outside":
            problems.append(f"0 not outside Sigma_{t}")
    for s, want in ((2.0, 1), (3.0, 1), (3.9, 1), (4.0, 1), (4.1, 2), (5.0, 2)):
        got = domains.boundary(domains.DomainSpec.one_parameter(s)).loop_count()
        if got != want:
            problems.append(f"loop count {got} != {want} at s={s}")

    poly = domains.boundary(domains.DomainSpec.one_parameter(2.0), resolution=1024)
    loop = poly.loops[0]
    nxt = np.roll(loop, -1)
    cross = (np.abs(loop) - 1.0) * (np.abs(nxt) - 1.0) < 0
    worst_cross = np.inf
    hits = []
    for i in np.flatnonzero(cross):
        fa, fb = abs(loop[i]) - 1.0, abs(nxt[i]) - 1.0
        u = fa / (fa - fb)
        hits.append(loop[i] + u * (nxt[i] - loop[i]))
    if len(hits) != 2:
        problems.append(f"{len(hits)} circle crossings, expected 2")
        worst_cross = np.inf
    else:
        worst_cross = max(min(abs(h - 1j), abs(h + 1j)) for h in hits)
        if worst_cross > 1e-3:
            problems.append(f"crossing off +-i by {worst_cross:.2e}")
    return CheckResult(
        name="04-domain-facts",
        passed=not problems,
        value=float(worst_cross if np.isfinite(worst_cross) else 1.0),
        tolerance=1e-3,
        detail="; ".join(problems) if problems else "membership, topology, crossings ok",
    )


def _exterior_points(spec, count, rng, clearance=0.05):
    poly = domains._cached_boundary(spec)
    s = spec.params.s
    pts = []
    while len(pts) < count:
        cand = rng.uniform(-16, 16, 4 * count) + 1j * rng.uniform(-16, 16, 4 * count)
        if s > 4:
            k = max(count // 5, 8)
            cand[:k] = rng.uniform(0.003, 0.03, k) * np.exp(
                1j * rng.uniform(0, 2 * np.pi, k)
            )
        inside, dist = domains._crossing_parity_and_distance(cand, poly)
        keep = ~inside & (dist > clearance)
        pts.extend(cand[keep][: count - len(pts)])
    return np.asarray(pts)


@_register("05-exterior-mapping")
def check_exterior_mapping():
    """200 exterior points per (s,t) map under f_{s,t} off supp(nu_s)."""
    rng = np.random.default_rng(_SEED + 5)
    failures = 0
    min_margin = np.inf
    for s, t in ((2.0, 2.0), (3.0, 1.0), (5.0, 3.0)):
        spec = domains.DomainSpec.two_parameter(s, t)
        pts = _exterior_points(spec, 200, rng)
        img = cmaps.f_st_eval(s, t, pts)
        sup = cmaps.nu_support(s)
        off_circle = np.abs(np.abs(img) - 1.0) > 1e-6
        if sup.full_circle:
            ok = off_circle
        else:
            ok = off_circle | (np.abs(np.angle(img)) > sup.theta_max + 1e-9)
        failures += int(np.count_nonzero(~ok))
        min_margin = min(min_margin, float(np.abs(np.abs(img) - 1.0)[off_circle].min()))
    return CheckResult(
        name="05-exterior-mapping",
        passed=failures == 0,
        value=float(failures),
        tolerance=0.0,
        detail=f"min modulus margin {min_margin:.2e}",
    )


@_register("06-transform-golden")
def check_transform_golden():
    """G_t hits the printed closed forms to 1e-4 relative, under 30 s."""
    start = time.perf_counter()
    measure = hall._cached_measure(1.0)
    rng = np.random.default_rng(_SEED + 6)
    zs = []
    while len(zs) < 20:
        z = rng.uniform(0.2, 2.0) * np.exp(1j * rng.uniform(-0.8, 0.8))
        if cmaps.t_level(z) < 0.9:
            zs.append(z)
    worst = 0.0
    fsq = hall.circle_samples(measure, lambda w: w**2)
    finv = hall.circle_samples(measure, lambda w: 1.0 / w)
    for z in zs:
        got = hall.gt_apply(1.0, fsq, z)
        want = np.exp(-1.0) * (z**2 - z)
        worst = max(worst, abs(got - want) / abs(want))
        got = hall.gt_apply(1.0, finv, z)
        want = np.exp(-0.5) / z
        worst = max(worst, abs(got - want) / abs(want))
    elapsed = time.perf_counter() - start
    return CheckResult(
        name="06-transform-golden",
        passed=worst <= 1e-4 and elapsed < 30.0,
        value=worst,
        tolerance=1e-4,
        detail=f"runtime {elapsed:.2f} s (< 30 s required)",
    )


@_register("07-resolvent-identity")
def check_resolvent_identity():
    """(z - lambda) G_t(r_lambda)(z) = 1 within 1e-3 on a 10 x 10 grid."""
    lams = [10.0, -5.0 + 2.0j, 3.0j, -2.0, 0.3 + 2.5j, 8.0 - 4.0j, -1.0 - 1.0j, 6.0, 0.1 + 2.0j, -4.0]
    zs = [1.0, 0.5, 1.5, 0.8 + 0.3j, 1.2 - 0.2j, 0.6 - 0.4j, 0.9 + 0.5j, 1.4 + 0.3j, 0.7, 1.1]
    report = hall.resolvent_identity_check(1.0, 1.0, lams, zs)
    return CheckResult(
        name="07-resolvent-identity",
        passed=report.max_deviation <= 1e-3,
        value=report.max_deviation,
        tolerance=1e-3,
        detail=f"{len(lams)} exterior lambda x {len(zs)} interior z at t = 1",
    )


@_register("08-pi-identity")
def check_pi_identity():
    """Pi(3,1,omega,f_2(zeta)) = 1/(1 - omega f_3(zeta)) - 1 to 1e-10."""
    rng = np.random.default_rng(_SEED + 8)
    zeta = 0.1 * (rng.uniform(-1, 1, 100) + 1j * rng.uniform(-1, 1, 100))
    worst = 0.0
    for omega in np.exp(1j * np.array([0.3, 1.2, 2.5])):
        for zt in zeta:
            lhs = hall.pi_generating(3.0, 1.0, omega, cmaps.f_eval(2.0, zt))
            rhs = 1.0 / (1.0 - omega * cmaps.f_eval(3.0, zt)) - 1.0
            worst = max(worst, abs(lhs - rhs))
    return CheckResult(
        name="08-pi-identity",
        passed=worst <= 1e-10,
        value=worst,
        tolerance=1e-10,
        detail="100 small zeta x 3 omega at (s,t) = (3,1)",
    )


@_register("09-eigenvalue-containment")
def check_eigenvalue_containment():
    """Cloud containment: gl N=500 t=2 over 8 seeds, elliptic (3,1) N=500."""
    fracs = []
    for trial in range(8):
        cfg = rmt.EnsembleConfig(
            N=500, params=TimeParams.one_parameter(2.0), steps=400, seed=_SEED + 9, kind="gl_bm"
        )
        cloud = rmt.eigenvalues(rmt.simulate(cfg, trial=trial), cfg)
        fracs.append(np.mean(cmaps.t_level(cloud.values) <= 2.2))
    gl_frac = float(np.mean(fracs))

    spec = domains.DomainSpec.two_parameter(3.0, 1.0)
    poly = domains._cached_boundary(spec)
    two_fracs = []
    for trial in range(4):
        cfg = rmt.EnsembleConfig(
            N=500, params=TimeParams(3.0, 1.0), steps=400, seed=_SEED + 19, kind="elliptic_bm"
        )
        cloud = rmt.eigenvalues(rmt.simulate(cfg, trial=trial), cfg)
        two_fracs.append(rmt.containment_stats(cloud, spec, margin=0.05, polyline=poly))
    el_frac = float(np.mean(two_fracs))
    passed = gl_frac >= 0.99 and el_frac >= 0.98
    return CheckResult(
        name="09-eigenvalue-containment",
        passed=passed,
        value=min(gl_frac, el_frac),
        tolerance=0.98,
        detail=f"gl fraction {gl_frac:.4f} (>= 0.99), elliptic fraction {el_frac:.4f} (>= 0.98)",
    )


@_register("10-elliptic-moments")
def check_elliptic_moments():
    """Mean trace moments n = 1..3 over 16 trials match nu_n(2) within 4 SE."""
    trials = 16
    moments = np.empty((trials, 3))
    for trial in range(trials):
        cfg = rmt.EnsembleConfig(
            N=300, params=TimeParams(3.0, 1.0), steps=400, seed=_SEED + 10, kind="elliptic_bm"
        )
        b = rmt.simulate(cfg, trial=trial)
        moments[trial] = [rmt.trace_moment(b, n).real for n in (1, 2, 3)]
    worst_sigma = 0.0
    details = []
    for i, n in enumerate((1, 2, 3)):
        mean = moments[:, i].mean()
        se = moments[:, i].std(ddof=1) / np.sqrt(trials)
        target = cmaps.nu_moment(2.0, n)
        sigmas = abs(mean - target) / se
        worst_sigma = max(worst_sigma, float(sigmas))
        details.append(f"n={n}: {sigmas:.2f} SE")
    return CheckResult(
        name="10-elliptic-moments",
        passed=worst_sigma <= 4.0,
        value=worst_sigma,
        tolerance=4.0,
        detail=", ".join(details),
    )


@_register("11-conditional-expectation")
def check_conditional_expectation():
    """MC heat-kernel conditioning of u^2 lands on e^{-1}(B^2 - B)."""
    n, m, t = 200, 2000, 1.0
    cfg = rmt.EnsembleConfig(
        N=n, params=TimeParams.one_parameter(t), steps=400, seed=_SEED + 11, kind="gl_bm"
    )
    b = rmt.simulate(cfg)
    est = rmt.conditional_expectation_mc(
        b, t, hall.LaurentPoly({2: 1.0}), m, seed=_SEED + 111, steps=32
    )
    target = np.exp(-t) * (b @ b - t * b)
    rel = float(np.linalg.norm(est - target) / np.linalg.norm(target))
    tol = 5.0 / np.sqrt(m) + 0.5 / n**2
    return CheckResult(
        name="11-conditional-expectation",
        passed=rel <= tol,
        value=rel,
        tolerance=tol,
        detail=f"N={n}, M={m}, Frobenius relative deviation",
    )


@_register("12-brown-machinery")
def check_brown_machinery():
    """Laplacian counting to 2%, the epsilon inequality, and monotonicity."""
    rng = rmt.trial_rng(_SEED + 12)
    a = rmt.sample_increment("ginibre", 100, 1.0, rng)
    vals = np.linalg.eigvals(a)
    r = float(np.abs(vals).max()) + 0.4
    grid = brown.GridSpec(-r, r, -r, r, 71, 71)
    fld = brown.laplacian_counting(a, grid)
    count_err = abs(brown.integrate_field(fld) - 1.0)

    b = rmt.sample_increment("ginibre", 50, 1.0, rng)
    schedule = brown.EpsilonSchedule.default()
    violations = 0
    monotone_bad = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(20):
            lam = rng.uniform(-2, 2) + 1j * rng.uniform(-2, 2)
            rep = brown.epsilon_inequality_check(b, lam, schedule)
            if rep.skipped is None and rep.max_violation > 1e-9:
                violations += 1
            traces = [brown.regularized_trace(b, lam, e) for e in schedule.epsilons]
            if np.any(np.diff(traces) < -1e-9 * np.abs(np.array(traces[:-1]))):
                monotone_bad += 1
    passed = count_err <= 0.02 and violations == 0 and monotone_bad == 0
    return CheckResult(
        name="12-brown-machinery",
        passed=passed,
        value=count_err,
        tolerance=0.02,
        detail=(
            f"counting error {count_err:.4f}, inequality violations {violations}, "
            f"monotonicity breaks {monotone_bad}"
        ),
    )


@_register("13-unitary-spectral")
def check_unitary_spectral():
    """Unitary BM at N=500, t=2: arc containment and moments within 4 SE."""
    cfg = rmt.EnsembleConfig(
        N=500, params=TimeParams.one_parameter(2.0), steps=400, seed=_SEED + 13, kind="unitary_bm"
    )
    cloud = rmt.eigenvalues(rmt.simulate(cfg), cfg)
    sup = cmaps.nu_support(2.0)
    frac = float(np.mean(np.abs(np.angle(cloud.values)) <= sup.theta_max + 0.05))
    worst_sigma = 0.0
    details = [f"arc fraction {frac:.4f}"]
    for k in (1, 2, 3, 4):
        powers = cloud.values**k
        emp = powers.mean()
        se = powers.real.std(ddof=1) / np.sqrt(cloud.values.size)
        sigmas = abs(emp - cmaps.nu_moment(2.0, k)) / se
        worst_sigma = max(worst_sigma, float(sigmas))
        details.append(f"k={k}: {sigmas:.2f} SE")
    return CheckResult(
        name="13-unitary-spectral",
        passed=frac >= 0.99 and worst_sigma <= 4.0,
        value=worst_sigma,
        tolerance=4.0,
        detail=", ".join(details),
    )


def run_check(name):
    if name not in CHECKS:
        raise KeyError(f"unknown check {name!r}; known: {sorted(CHECKS)}")
    start = time.perf_counter()
    try:
        result = CHECKS[name]()
    except BrownflowError as exc:
        result = CheckResult(
            name=name, passed=False, value=np.inf, tolerance=0.0, detail=f"raised {exc!r}"
        )
    result.seconds = time.perf_counter() - start
    return result


def run_suite(names=None, verbose=True):
    """Run a selection of checks (all by default), one pass/fail line each."""
    selected = sorted(CHECKS) if not names else list(names)
    results = []
    for name in selected:
        res = run_check(name)
        results.append(res)
        if verbose:
            print(res.line(), flush=True)
    return results


def suite_report(results):
    return {
        "passed": all(r.passed for r in results),
        "checks": [
            {
                "name": r.name,
                "passed": r.passed,
                "value": r.value,
                "tolerance": r.tolerance,
                "detail": r.detail,
                "seconds": round(r.seconds, 3),
            }
            for r in results
        ],
    }
