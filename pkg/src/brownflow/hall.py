"""The free Hall transform as a numeric integral operator.

The transform maps circle functions to holomorphic functions on the
spectral domain through the kernel

    (G_t f)(z) = int f(w) |1 - chi(w)|^2
                 / ((z - chi(w)) (1/z - conj(chi(w)))) dnu_t(w),

evaluated by trapezoid quadrature against the reconstructed density.
Both chi(w) and 1/conj(chi(w)) sit on the domain boundary, so the
integrand is holomorphic in z strictly inside.

The resolvent preimages

    r_lambda(w) = (f_{s,t}(lambda)/lambda) / (w - f_{s,t}(lambda))

are the transform preimages of 1/(z - lambda) for exterior lambda;
their lambda-derivatives (preimages of higher inverse powers) come from
a Cauchy circle rather than hand-chained derivatives of the inverted
map.  The generating-function identity for Pi ties these formulas back
to the power-series regime and is exposed as a standalone evaluator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import cmaps, domains
from .errors import AccuracyError, DomainError, UnsupportedPolynomialError

__all__ = [
    "LaurentPoly",
    "CircleFunctionSamples",
    "circle_samples",
    "gt_apply",
    "closed_form_transform",
    "r_lambda",
    "r_lambda_samples",
    "pi_generating",
    "resolvent_identity_check",
    "IdentityReport",
    "report_to_json",
]


@dataclass(frozen=True)
class LaurentPoly:
    """Finitely supported integer-exponent polynomial sum c_k u^k."""

    coefficients: dict

    def __post_init__(self):
        object.__setattr__(
            self,
            "coefficients",
            {int(k): complex(v) for k, v in self.coefficients.items() if v != 0},
        )

    def __call__(self, u):
        u = np.asarray(u, dtype=complex)
        out = np.zeros_like(u)
        for k, c in self.coefficients.items():
            out = out + c * u**k
        return out

    @classmethod
    def monomial(cls, k, coeff=1.0):
        return cls({int(k): coeff})


@dataclass
class CircleFunctionSamples:
    """Function values on the measure grid of supp(nu_t)."""

    thetas: np.ndarray
    values: np.ndarray
    measure: cmaps.SpectralMeasureGrid

    def __post_init__(self):
        if self.thetas.shape != self.values.shape:
            raise ValueError("thetas and values must align")
        if not np.isfinite(self.values).all():
            raise ValueError("circle samples must be finite")


def circle_samples(measure, fn):
    """Sample a callable of w = e^{i theta} on the measure grid."""
    omega = np.exp(1j * measure.thetas)
    return CircleFunctionSamples(
        thetas=measure.thetas, values=np.asarray(fn(omega), dtype=complex), measure=measure
    )


_measure_cache = {}


def _cached_measure(t, grid_size=2048):
    key = (float(t), grid_size)
    if key not in _measure_cache:
        _measure_cache[key] = cmaps.nu_density(t, grid_size)
    return _measure_cache[key]


def gt_apply(t, f, z, boundary_tol=1e-3):
    """Apply the transform to sampled circle data at one interior point.

    ``f`` is a CircleFunctionSamples; z must sit strictly inside the
    domain (T(z) < t - boundary_tol), away from the kernel's boundary
    singularities.
    """
    z = complex(z)
    if z == 0:
        raise DomainError("z = 0 is outside the transform domain")
    margin = cmaps.t_level(z) - t
    if margin >= -boundary_tol:
        raise DomainError(
            f"z has T(z) - t = {margin:.3e}; the kernel is ill-conditioned "
            "in the boundary band"
        )
    measure = f.measure
    chi = measure.chi_vals
    kern = np.abs(1.0 - chi) ** 2 / ((z - chi) * (1.0 / z - np.conj(chi)))
    weights = measure.trapezoid_weights()
    return complex(np.sum(f.values * kern * measure.density * weights))


def closed_form_transform(params, poly):
    """Transform table for the printed closed forms.

    u   -> e^{-t/2} z
    u^2 -> e^{-t} (z^2 - t e^{-(s-t)/2} z)
    1/u -> e^{-t/2} / z

    Linear combinations of these monomials transform term by term; any
    other exponent raises (the general Laurent recursion is out of
    scope here).
    """
    s, t = params.s, params.t
    table = {
        1: LaurentPoly({1: np.exp(-t / 2.0)}),
        2: LaurentPoly({2: np.exp(-t), 1: -t * np.exp(-t - (s - t) / 2.0)}),
        -1: LaurentPoly({-1: np.exp(-t / 2.0)}),
    }
    out = {}
    for k, c in poly.coefficients.items():
        if k == 0:
            out[0] = out.get(0, 0.0) + c
            continue
        if k not in table:
            raise UnsupportedPolynomialError(
                f"no closed form for exponent {k}; supported: u, u^2, 1/u"
            )
        for kk, cc in table[k].coefficients.items():
            out[kk] = out.get(kk, 0.0) + c * cc
    return LaurentPoly(out)


def r_lambda(s, t, lam, omega, n=1, polyline=None, nodes=32):
    """Transform preimage of 1/(z - lambda)^n evaluated at circle points.

    n = 1 is the closed form; the lambda = 0 limit is e^{t/2}/omega.
    Higher n divides the (n-1)-th Cauchy derivative over a circle whose
    radius is half the distance from lambda to the domain boundary.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    omega = np.asarray(omega, dtype=complex)
    lam = complex(lam)
    if n == 1:
        if lam == 0:
            return np.exp(t / 2.0) / omega
        fst = cmaps.f_st_eval(s, t, lam)
        return (fst / lam) / (omega - fst)

    spec = domains.DomainSpec.two_parameter(s, t)
    poly = polyline if polyline is not None else domains._cached_boundary(spec)
    a, b = poly.segments()
    dist = _point_to_segments_distance(lam, a, b)
    radius = 0.5 * dist
    for _ in range(2):
        ring = lam + radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        inside = domains.classify_points(spec, ring, polyline=poly)
        if not inside.any():
            break
        radius *= 0.5
    else:
        raise DomainError(
            "derivative circle keeps intersecting the domain; lambda is "
            "too close to the boundary"
        )
    phis = 2.0 * np.pi * np.arange(nodes) / nodes
    ring = lam + radius * np.exp(1j * phis)
    vals = np.stack([r_lambda(s, t, zeta, omega, 1) for zeta in ring])
    # (1/(n-1)!) d^{n-1} g = (1/2 pi i) oint g(zeta)/(zeta-lam)^n dzeta
    weights = np.exp(1j * (1 - n) * phis) / radius ** (n - 1) / nodes
    return np.tensordot(weights, vals, axes=(0, 0))


def _point_to_segments_distance(lam, a, b):
    d = b - a
    den = np.abs(d) ** 2
    u = np.clip(((lam - a) * np.conj(d)).real / np.where(den > 0, den, 1.0), 0.0, 1.0)
    return float(np.abs(lam - (a + u * d)).min())


def r_lambda_samples(s, t, lam, measure, n=1, polyline=None):
    """r_lambda sampled on a measure grid, ready for gt_apply."""
    omega = np.exp(1j * measure.thetas)
    vals = r_lambda(s, t, lam, omega, n=n, polyline=polyline)
    return CircleFunctionSamples(thetas=measure.thetas, values=vals, measure=measure)


def pi_generating(s, t, omega, z):
    """Generating function Pi(s, t, omega, z) = 1/(1 - omega f_s(chi_{s-t}(z))) - 1.

    chi_{s-t} is the extended inverse, so z may be anywhere off the
    support arc of nu_{s-t}; at s = t the inner map is the identity.
    """
    omega = np.asarray(omega, dtype=complex)
    z = complex(z)
    if z == 0:
        return np.zeros_like(omega)
    if s == t:
        w = z
    else:
        w = cmaps.chi_s_extended(s - t, z)
    fs = cmaps.f_eval(s, w)
    return 1.0 / (1.0 - omega * fs) - 1.0


@dataclass
class IdentityReport:
    """Per-pair deviations of (z - lambda) (G_t r_lambda)(z) from 1."""

    s: float
    t: float
    lambdas: list
    zs: list
    deviations: np.ndarray = field(repr=False)
    grid_size: int = 0
    tolerance: float = 1e-3

    @property
    def max_deviation(self):
        return float(np.max(self.deviations))

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance


def resolvent_identity_check(s, t, lam_samples, z_samples, grid_size=2048, tolerance=1e-3):
    """Verify (z - lambda) (G_t r_lambda)(z) = 1 over sample pairs.

    This is the function-level shadow of r_lambda being the transform
    preimage of the resolvent; the verification path is one-parameter,
    so s must equal t.
    """
    if s != t:
        raise DomainError("the verification path is one-parameter: set s = t")
    measure = _cached_measure(t, grid_size)
    lam_samples = [complex(l) for l in np.atleast_1d(lam_samples)]
    z_samples = [complex(z) for z in np.atleast_1d(z_samples)]
    devs = np.empty((len(lam_samples), len(z_samples)))
    for i, lam in enumerate(lam_samples):
        samples = r_lambda_samples(t, t, lam, measure)
        for j, z in enumerate(z_samples):
            val = gt_apply(t, samples, z)
            devs[i, j] = abs((z - lam) * val - 1.0)
    return IdentityReport(
        s=s,
        t=t,
        lambdas=lam_samples,
        zs=z_samples,
        deviations=devs,
        grid_size=grid_size,
        tolerance=tolerance,
    )


def report_to_json(report, path):
    payload = {
        "s": report.s,
        "t": report.t,
        "grid_size": report.grid_size,
        "tolerance": report.tolerance,
        "max_deviation": report.max_deviation,
        "passed": report.passed,
        "lambdas": [[l.real, l.imag] for l in report.lambdas],
        "zs": [[z.real, z.imag] for z in report.zs],
        "deviations": report.deviations.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
