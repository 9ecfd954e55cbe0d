"""Matrix Brownian motions and their eigenvalue clouds.

Euler--Maruyama integration of the Ito forms of the group SDEs:

    gl:        B <- B (I + dC)                        clock [0, t]
    unitary:   U <- U (I + i dX - dt/2)               clock [0, t]
    elliptic:  b <- b (I + i dw - (s-t)/2 dr)         clock [0, 1]

with dC a Ginibre increment (i.i.d. complex entries, variance dt/N),
dX a Wigner increment (Hermitian, entry variance dt/N), and
dw = sqrt(s - t/2) dX + i sqrt(t/2) dY for independent Wigner pairs.
The unitary path is optionally re-projected onto the group each step by
a couple of Newton--Schulz polar iterations, which keeps the terminal
||U*U - I|| at the 1e-10 level without an eigendecomposition.

Randomness is counter-based: each (seed, trial) pair keys an
independent Philox stream, and draws within a trajectory happen in a
fixed order, so any trial is bit-reproducible in isolation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import domains
from .cmaps import TimeParams
from .errors import EigensolveError, SingularMatrixError, StepSizeError

__all__ = [
    "EnsembleConfig",
    "EigenvalueCloud",
    "trial_rng",
    "sample_increment",
    "simulate",
    "eigenvalues",
    "trace_moment",
    "conditional_expectation_mc",
    "containment_stats",
    "cloud_to_csv",
    "cloud_metadata",
]

KINDS = ("ginibre", "wigner", "unitary_bm", "gl_bm", "elliptic_bm")

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class EnsembleConfig:
    N: int
    params: TimeParams
    steps: int
    seed: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.N < 1 or self.steps < 1:
            raise ValueError("N and steps must be positive")

    @property
    def total_time(self):
        # elliptic runs on the internal clock [0, 1]
        return 1.0 if self.kind == "elliptic_bm" else self.params.t


def default_steps(total_time):
    """Recommended partition: max(1000, 200 ceil(total time))."""
    return max(1000, 200 * int(np.ceil(total_time)))


@dataclass
class EigenvalueCloud:
    values: np.ndarray
    config: EnsembleConfig
    wall_time: float = 0.0


def trial_rng(seed, trial=0):
    """Philox generator keyed by (seed, trial); trials are independent streams."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial),))
    return np.random.Generator(np.random.Philox(ss))


def _wigner_increment(rng, n, dt, size=()):
    """Hermitian increment with entry variance dt/n, from exactly n^2 reals.

    The strict upper triangle takes its real parts from the upper half of
    one Gaussian array and its imaginary parts from the (transposed)
    lower half; the diagonal uses the remaining entries.
    """
    g = rng.standard_normal(size + (n, n))
    s_off = np.sqrt(dt / (2.0 * n))
    s_diag = np.sqrt(dt / n)
    upper = np.triu(g, 1) * s_off
    lower = np.tril(g, -1) * s_off
    h = upper + 1j * lower.swapaxes(-1, -2)
    h = h + np.conj(h.swapaxes(-1, -2))
    idx = np.arange(n)
    h[..., idx, idx] = g[..., idx, idx] * s_diag
    return h


def _ginibre_increment(rng, n, dt, size=()):
    scale = np.sqrt(dt / (2.0 * n))
    re = rng.standard_normal(size + (n, n))
    im = rng.standard_normal(size + (n, n))
    return scale * (re + 1j * im)


def sample_increment(kind, n, dt, rng):
    """One Brownian increment over time dt: 'ginibre' or 'wigner'."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if kind == "ginibre":
        return _ginibre_increment(rng, n, dt)
    if kind == "wigner":
        return _wigner_increment(rng, n, dt)
    raise ValueError(f"unknown increment kind {kind!r}")


def _polar_project(u):
    # Newton-Schulz iterations; the iterate is within O(dt) of unitary,
    # so two passes push the defect to round-off scale
    eye = np.eye(u.shape[-1], dtype=complex)
    for _ in range(3):
        gram = np.conj(u.swapaxes(-1, -2)) @ u
        defect = np.linalg.norm(gram - eye)
        if defect < 1e-10:
            break
        u = u @ (1.5 * eye - 0.5 * gram)
    return u


def simulate(config, trial=0, re_unitarize=True):
    """Terminal matrix of the configured Brownian motion.

    Gaussian kinds return a single exact draw at time t (Brownian
    increments are additive).  The group kinds run the Euler--Maruyama
    loop; non-finite entries abort with a StepSizeError.
    """
    rng = trial_rng(config.seed, trial)
    n = config.N
    s, t = config.params.s, config.params.t

    if config.kind in ("ginibre", "wigner"):
        return sample_increment(config.kind, n, t, rng)

    eye = np.eye(n, dtype=complex)
    state = eye.copy()
    steps = config.steps

    if config.kind == "gl_bm":
        dt = t / steps
        for _ in range(steps):
            state = state @ (eye + _ginibre_increment(rng, n, dt))
    elif config.kind == "unitary_bm":
        dt = t / steps
        for _ in range(steps):
            dx = _wigner_increment(rng, n, dt)
            state = state @ (eye * (1.0 - 0.5 * dt) + 1j * dx)
            if re_unitarize:
                state = _polar_project(state)
    else:  # elliptic_bm
        dr = 1.0 / steps
        a = np.sqrt(s - t / 2.0)
        b = np.sqrt(t / 2.0)
        drift = 1.0 - 0.5 * (s - t) * dr
        for _ in range(steps):
            dx = _wigner_increment(rng, n, dr)
            dy = _wigner_increment(rng, n, dr)
            dw = a * dx + 1j * b * dy
            state = state @ (eye * drift + 1j * dw)

    if not np.isfinite(state).all():
        raise StepSizeError(
            f"trajectory blew up with steps={steps}; increase the partition"
        )
    return state


def eigenvalues(a, config=None):
    """All eigenvalues of a general (non-normal) matrix via LAPACK's
    Schur-based dense solver."""
    if not np.isfinite(a).all():
        raise EigensolveError("matrix has non-finite entries")
    start = time.perf_counter()
    try:
        vals = np.linalg.eigvals(np.asarray(a, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise EigensolveError(f"dense eigensolver failed: {exc}") from exc
    return EigenvalueCloud(values=vals, config=config, wall_time=time.perf_counter() - start)


def trace_moment(a, n):
    """Normalized trace moment (1/N) Tr(a^n); negative n uses LU solves."""
    a = np.asarray(a, dtype=complex)
    dim = a.shape[0]
    n = int(n)
    if n == 0:
        return 1.0 + 0.0j
    if n > 0:
        return complex(np.trace(np.linalg.matrix_power(a, n)) / dim)
    lu, piv = sla.lu_factor(a)
    anorm = np.linalg.norm(a, 1)
    rcond = sla.lapack.zgecon(lu, anorm)[0]
    if rcond == 0 or 1.0 / rcond > _COND_LIMIT:
        raise SingularMatrixError(
            f"condition estimate {0 if rcond == 0 else 1.0 / rcond:.2e} "
            f"exceeds {_COND_LIMIT:.0e}; refusing negative power"
        )
    inv = sla.lu_solve((lu, piv), np.eye(dim, dtype=complex))
    return complex(np.trace(np.linalg.matrix_power(inv, -n)) / dim)


def _laurent_matrix(poly, a):
    """Evaluate a Laurent polynomial on a (batch of) square matrices."""
    dim = a.shape[-1]
    eye = np.eye(dim, dtype=complex)
    out = np.zeros_like(a)
    inv = None
    for k, c in poly.coefficients.items():
        if k == 0:
            out = out + c * eye
            continue
        if k > 0:
            term = a
            for _ in range(k - 1):
                term = term @ a
        else:
            if inv is None:
                inv = np.linalg.inv(a)
            term = inv
            for _ in range(-k - 1):
                term = term @ inv
        out = out + c * term
    return out


# fixed MC batch width: it is part of the draw layout, so changing it
# would change the stream consumed by each sample
_MC_CHUNK = 64


def conditional_expectation_mc(b_mat, t, poly, m_samples, seed, steps=64):
    """Monte Carlo heat-kernel conditioning: (1/M) sum_j p(B U_j).

    U_j are independent unitary Brownian motions at time t.  Only
    holomorphic words in B U_j appear, so the unitary defect of the raw
    Euler chain is immaterial and no per-step projection is run; the
    weak O(dt) bias sits well inside the Monte Carlo noise for the
    default partition.
    """
    if m_samples < 1:
        raise ValueError("m_samples must be positive")
    b_mat = np.asarray(b_mat, dtype=complex)
    n = b_mat.shape[0]
    eye = np.eye(n, dtype=complex)
    dt = float(t) / steps
    acc = np.zeros_like(b_mat)
    done = 0
    chunk_index = 0
    while done < m_samples:
        width = min(_MC_CHUNK, m_samples - done)
        rng = trial_rng(seed, chunk_index)
        u = np.broadcast_to(eye, (width, n, n)).copy()
        factor_diag = 1.0 - 0.5 * dt
        for _ in range(steps):
            dx = _wigner_increment(rng, n, dt, size=(width,))
            u = u @ (factor_diag * eye + 1j * dx)
        acc += _laurent_matrix(poly, b_mat[None, :, :] @ u).sum(axis=0)
        done += width
        chunk_index += 1
    return acc / m_samples


def containment_stats(cloud, spec, margin=0.0, polyline=None):
    """Fraction of eigenvalues inside the domain dilated by ``margin``.

    One-parameter: T(lambda) <= t + margin (T-units).  Two-parameter:
    inside the traced boundary or within ``margin`` plane distance.
    """
    vals = np.asarray(cloud.values if isinstance(cloud, EigenvalueCloud) else cloud)
    if vals.size == 0:
        return 0.0
    inside = domains.classify_points(spec, vals, margin=margin, polyline=polyline)
    return float(np.count_nonzero(inside)) / vals.size


def cloud_to_csv(clouds, path):
    """CSV dump of one or more clouds: trial, re, im."""
    if isinstance(clouds, EigenvalueCloud):
        clouds = [clouds]
    with open(path, "w") as fh:
        fh.write("trial,re,im\n")
        for trial, cloud in enumerate(clouds):
            for v in cloud.values:
                fh.write(f"{trial},{v.real:.17g},{v.imag:.17g}\n")


def cloud_metadata(clouds, extra=None):
    """Sidecar metadata for a cloud dump."""
    if isinstance(clouds, EigenvalueCloud):
        clouds = [clouds]
    cfg = clouds[0].config
    meta = {
        "trials": len(clouds),
        "wall_time": sum(c.wall_time for c in clouds),
    }
    if cfg is not None:
        meta.update(
            {
                "N": cfg.N,
                "s": cfg.params.s,
                "t": cfg.params.t,
                "steps": cfg.steps,
                "seed": cfg.seed,
                "kind": cfg.kind,
            }
        )
    if extra:
        meta.update(extra)
    return meta
