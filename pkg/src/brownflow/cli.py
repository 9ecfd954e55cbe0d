"""Command-line front end.

Grammar:

    brownflow <simulate|domain|nu|brown|transform|verify>
              [--s F] [--t F] [--N INT] [--steps INT] [--trials INT]
              [--seed U64] [--resolution INT]
              [--grid RE_MIN,RE_MAX,IM_MIN,IM_MAX,NX,NY]
              [--epsilon-min F] [--margin F] [--threads INT]
              [--format csv|json] [--out PATH] [--no-plot]

Primary outputs are CSV (or a JSON mirror with --format json); every
run writes a JSON sidecar carrying full provenance (flags, seed,
version) and, for the report subcommands, renders a matplotlib figure
next to the delimited output.  Exit codes: 0 success, 1 validation
error, 2 numeric failure.

Thread count for the BLAS-backed batch operations comes from --threads
or the BROWNFLOW_THREADS environment variable and must be applied
before the numeric stack loads, which is why the heavy imports all
live inside the handlers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time


class CLIError(Exception):
    """Validation failure carrying the message for exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits 2 by default; flag problems are validation errors
        raise CLIError(message)


def _build_parser():
    parser = _Parser(prog="brownflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=False):
        p.add_argument("--s", type=float, default=None, help="outer time (defaults to t)")
        p.add_argument("--t", type=float, required=True, help="inner time")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="primary output path")
        p.add_argument("--no-plot", action="store_true", help="skip the figure render")
        if seed:
            p.add_argument("--seed", type=int, required=True, help="RNG seed (mandatory)")

    p = sub.add_parser("simulate", help="eigenvalue clouds and containment stats")
    common(p, seed=True)
    p.add_argument("--kind", choices=("gl", "unitary", "elliptic", "ginibre", "wigner"), default="gl")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--resolution", type=int, default=512)

    p = sub.add_parser("domain", help="boundary polylines")
    common(p)
    p.add_argument("--resolution", type=int, default=512)

    p = sub.add_parser("nu", help="circle measure: moments, support, density")
    common(p)
    p.add_argument("--resolution", type=int, default=2048, help="density grid size")

    p = sub.add_parser("brown", help="scalar fields over a plane grid")
    common(p, seed=True)
    p.add_argument("--kind", choices=("gl", "ginibre"), default="gl")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--field", choices=("density", "laplacian"), default="density")
    p.add_argument("--grid", default="-2,2,-2,2,61,61", help="RE_MIN,RE_MAX,IM_MIN,IM_MAX,NX,NY")
    p.add_argument("--epsilon-min", type=float, default=1e-6)
    p.add_argument("--resolution", type=int, default=512)

    p = sub.add_parser("transform", help="transform identity checks")
    common(p)
    p.add_argument("--resolution", type=int, default=2048, help="quadrature grid size")
    p.add_argument("--trials", type=int, default=10, help="lambda/z sample count")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify", help="acceptance suite")
    p.add_argument("--suite", default="all", help="'all', 'fast', or comma list of check names")
    p.add_argument("--json", dest="json_path", default=None, help="machine-readable report path")
    p.add_argument("--threads", type=int, default=None)
    return parser


def _apply_threads(threads):
    if threads is None:
        env = os.environ.get("BROWNFLOW_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def _sidecar(path):
    base, _ = os.path.splitext(path)
    return base + ".json"


def _figure(path):
    base, _ = os.path.splitext(path)
    return base + ".png"


def _provenance(args, extra=None):
    from . import __version__

    payload = {
        "version": __version__,
        "command": args.command,
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "command"},
    }
    if extra:
        payload.update(extra)
    return payload


def _params(args):
    from .cmaps import TimeParams

    s = args.s if args.s is not None else args.t
    return TimeParams(float(s), float(args.t))


def _cmd_simulate(args):
    import numpy as np

    from . import domains, plotting, rmt

    params = _params(args)
    kind = {"gl": "gl_bm", "unitary": "unitary_bm", "elliptic": "elliptic_bm"}.get(
        args.kind, args.kind
    )
    steps = args.steps or rmt.default_steps(
        1.0 if kind == "elliptic_bm" else params.t
    )
    cfg = rmt.EnsembleConfig(N=args.N, params=params, steps=steps, seed=args.seed, kind=kind)
    start = time.perf_counter()
    clouds = [rmt.eigenvalues(rmt.simulate(cfg, trial=k), cfg) for k in range(args.trials)]
    wall = time.perf_counter() - start

    spec = domains.DomainSpec(params)
    poly = domains._cached_boundary(spec, args.resolution)
    allvals = np.concatenate([c.values for c in clouds])
    frac = rmt.containment_stats(allvals, spec, margin=args.margin, polyline=poly)

    out = args.out or "eigenvalues.csv"
    if args.format == "csv":
        rmt.cloud_to_csv(clouds, out)
    else:
        payload = [
            {"trial": k, "re": list(c.values.real), "im": list(c.values.imag)}
            for k, c in enumerate(clouds)
        ]
        with open(out, "w") as fh:
            json.dump(payload, fh)
    meta = rmt.cloud_metadata(clouds, extra={"containment_fraction": frac, "margin": args.margin})
    meta["wall_time"] = wall
    with open(_sidecar(out), "w") as fh:
        json.dump(_provenance(args, meta), fh, indent=1)
    if not args.no_plot:
        plotting.plot_cloud(
            clouds, poly, _figure(out),
            title=f"{kind} N={args.N} (s={params.s:g}, t={params.t:g})",
        )
    print(f"wrote {out}; containment fraction {frac:.4f} at margin {args.margin}")
    return 0


def _cmd_domain(args):
    from . import domains, plotting

    params = _params(args)
    spec = domains.DomainSpec(params)
    poly = domains.boundary(spec, args.resolution)
    out = args.out or "boundary.csv"
    if args.format == "csv":
        domains.polyline_to_csv(poly, out)
        with open(_sidecar(out), "w") as fh:
            json.dump(
                _provenance(args, {"loops": poly.loop_count(), "meta": poly.meta}), fh, indent=1
            )
    else:
        domains.polyline_to_json(poly, out)
    if not args.no_plot:
        plotting.plot_boundary(
            poly, _figure(out), title=f"domain boundary (s={params.s:g}, t={params.t:g})"
        )
    print(f"wrote {out}; {poly.loop_count()} loop(s)")
    return 0


def _cmd_nu(args):
    from . import cmaps, plotting

    t = float(args.t)
    grid = cmaps.nu_density(t, grid_size=args.resolution)
    out = args.out or "nu_density.csv"
    moments = {k: cmaps.nu_moment(t, k) for k in range(9)}
    if args.format == "csv":
        with open(out, "w") as fh:
            fh.write("theta,density\n")
            for th, de in zip(grid.thetas, grid.density):
                fh.write(f"{th:.17g},{de:.17g}\n")
    else:
        with open(out, "w") as fh:
            json.dump(
                {"theta": list(grid.thetas), "density": list(grid.density)}, fh
            )
    sidecar = {
        "mass": grid.mass(),
        "support_full_circle": grid.support.full_circle,
        "support_theta_max": grid.support.theta_max,
        "moments": moments,
    }
    with open(_sidecar(out), "w") as fh:
        json.dump(_provenance(args, sidecar), fh, indent=1)
    if not args.no_plot:
        plotting.plot_density(grid, _figure(out), title=f"circle density, t={t:g}")
    print(f"wrote {out}; mass {grid.mass():.9f}, theta_max {grid.support.theta_max:.6f}")
    return 0


def _cmd_brown(args):
    import numpy as np

    from . import brown, domains, plotting, rmt

    params = _params(args)
    parts = [p.strip() for p in args.grid.split(",")]
    if len(parts) != 6:
        raise CLIError("--grid needs RE_MIN,RE_MAX,IM_MIN,IM_MAX,NX,NY")
    grid = brown.GridSpec(
        float(parts[0]), float(parts[1]), float(parts[2]), float(parts[3]),
        int(parts[4]), int(parts[5]),
    )
    kind = {"gl": "gl_bm"}.get(args.kind, args.kind)
    steps = args.steps or rmt.default_steps(params.t)
    cfg = rmt.EnsembleConfig(N=args.N, params=params, steps=steps, seed=args.seed, kind=kind)
    a = rmt.simulate(cfg)
    if args.field == "density":
        eps = np.geomspace(1.0, args.epsilon_min, 13)
        fld = brown.brown_density_grid(a, grid, brown.EpsilonSchedule(tuple(eps)))
    else:
        fld = brown.laplacian_counting(a, grid)
    out = args.out or f"{args.field}.csv"
    if args.format == "csv":
        brown.field_to_csv(fld, out)
    else:
        with open(out, "w") as fh:
            json.dump({"values": fld.values.tolist()}, fh)
    brown.field_to_json(
        fld,
        _sidecar(out),
        extra=_provenance(args, {"mass": brown.integrate_field(fld)}),
    )
    if not args.no_plot:
        poly = None
        try:
            poly = domains._cached_boundary(domains.DomainSpec(params), args.resolution)
        except Exception:
            pass
        plotting.plot_field(fld, _figure(out), polyline=poly, title=f"{fld.kind} field")
    print(f"wrote {out}; field mass {brown.integrate_field(fld):.4f}")
    return 0


def _cmd_transform(args):
    import numpy as np

    from . import cmaps, hall

    params = _params(args)
    if not params.is_one_parameter:
        raise CLIError("transform checks run on the one-parameter path: set --s equal to --t")
    t = params.t
    rng = np.random.default_rng(args.seed)
    count = args.trials
    lams = []
    while len(lams) < count:
        lam = rng.uniform(2, 12) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        if cmaps.t_level(lam) > t + 0.5:
            lams.append(lam)
    zs = []
    while len(zs) < count:
        z = rng.uniform(0.3, 2.0) * np.exp(1j * rng.uniform(-0.7, 0.7))
        if cmaps.t_level(z) < t - 0.1:
            zs.append(z)
    report = hall.resolvent_identity_check(t, t, lams, zs, grid_size=args.resolution)

    measure = hall._cached_measure(t, args.resolution)
    golden = {}
    fsq = hall.circle_samples(measure, lambda w: w**2)
    finv = hall.circle_samples(measure, lambda w: 1.0 / w)
    devs_sq, devs_inv = [], []
    for z in zs:
        want = np.exp(-t) * (z**2 - t * z)
        devs_sq.append(abs(hall.gt_apply(t, fsq, z) - want) / abs(want))
        want = np.exp(-t / 2) / z
        devs_inv.append(abs(hall.gt_apply(t, finv, z) - want) / abs(want))
    golden["u2_max_rel"] = float(max(devs_sq))
    golden["uinv_max_rel"] = float(max(devs_inv))

    out = args.out or "transform_report.json"
    hall.report_to_json(report, out)
    with open(out) as fh:
        payload = json.load(fh)
    payload["golden"] = golden
    payload["provenance"] = _provenance(args)
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    ok = report.passed and golden["u2_max_rel"] <= 1e-4 and golden["uinv_max_rel"] <= 1e-4
    print(
        f"wrote {out}; resolvent max dev {report.max_deviation:.2e}, "
        f"golden u^2 {golden['u2_max_rel']:.2e}, 1/u {golden['uinv_max_rel']:.2e}"
    )
    return 0 if ok else 2


def _cmd_verify(args):
    from . import verify

    if args.suite == "all":
        names = sorted(verify.CHECKS)
    elif args.suite == "fast":
        names = [n for n in sorted(verify.CHECKS) if not n.startswith(("09", "10", "11", "13"))]
    else:
        names = [n.strip() for n in args.suite.split(",") if n.strip()]
        unknown = [n for n in names if n not in verify.CHECKS]
        if unknown:
            raise CLIError(f"unknown checks: {unknown}; known: {sorted(verify.CHECKS)}")
    results = verify.run_suite(names)
    report = verify.suite_report(results)
    if args.json_path:
        with open(args.json_path, "w") as fh:
            json.dump(report, fh, indent=1)
        print(f"wrote {args.json_path}")
    return 0 if report["passed"] else 2


_HANDLERS = {
    "simulate": _cmd_simulate,
    "domain": _cmd_domain,
    "nu": _cmd_nu,
    "brown": _cmd_brown,
    "transform": _cmd_transform,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_threads(getattr(args, "threads", None))
        from .errors import BrownflowError

        try:
            return _HANDLERS[args.command](args)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except BrownflowError as exc:
            print(f"numeric failure: {exc}", file=sys.stderr)
            return 2
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
