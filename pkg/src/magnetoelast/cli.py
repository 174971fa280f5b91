"""Command line interface: run, check, curve, dump-config.

Exit codes: 0 success, 2 validation failure, 3 solver failure (and failed checks).
"""
import argparse
import csv
import os
import sys

from .errors import DomainError, SolverError, ValidationError

# numerical modules are imported inside the commands so that the thread
# settings below are in place before numpy and scipy load

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _threads(n):
    n = n or os.environ.get("MAGNETOELAST_THREADS")
    if n:
        for var in THREAD_VARS:
            os.environ[var] = str(n)


def _out_dir(path):
    path = path or "."
    os.makedirs(path, exist_ok=True)
    return path


def run_hysteresis(sc, out):
    import numpy as np
    from . import llg
    hs_ = sc.sections["hysteresis"]
    mat = sc.material.replace(tau=float(hs_["tau"]))
    period = float(hs_["period"])
    ts, hs, ms = llg.hysteresis_sweep(mat, np.array(float(hs_["theta"])), float(hs_["amplitude"]),
                                      period, int(hs_["n_steps"]), int(hs_["cycles"]))
    path = os.path.join(out, hs_["output"])
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "h_ext", "m_x"])
        for row in zip(ts, hs, ms):
            wr.writerow([format(float(x), ".17g") for x in row])
    down, up = llg.loop_switching_fields(hs, ms)
    print(f"loop written to {path}; zero crossings: descending {down}, ascending {up}")


def run_curve(sc, out):
    import numpy as np
    from . import fields as fd
    from . import runner, statics
    c = sc.sections["curve"]
    a, b, n = runner._floats(c["thetas"])
    rows = statics.transition_curve(sc.material, np.linspace(a, b, int(n)),
                                    runner._floats(c["h_ext"]),
                                    fd.Grid.unit_square(int(c["nx"]), "periodic"))
    path = os.path.join(out, c["output"])
    statics.write_curve(path, rows)
    print(f"transition curve written to {path} ({len(rows)} rows)")


def cmd_run(args):
    from . import runner
    sc = runner.parse_scenario(args.scenario)
    out = _out_dir(args.out)
    if sc.kind == "hysteresis":
        return run_hysteresis(sc, out)
    if sc.kind == "curve":
        return run_curve(sc, out)
    sim = runner.Simulation(sc)
    try:
        sim.run(out, args.snapshots)
    except (SolverError, DomainError):
        sim.dump(out, ["rho", "v", "F", "m", "theta", "w"], tag="failed")
        raise
    last = sim.reports[-1] if sim.reports else None
    if last is not None:
        print(f"{sim.step_index} steps to t = {last.time:.6g}; "
              f"max residual_total/scale = {max(r.residual_total / r.scale for r in sim.reports):.3e}; "
              f"density consistency = {sim.density_consistency():.3e}"
              + ("; cut-off was active" if sim.cutoff_ever else ""))


def cmd_curve(args):
    from . import runner
    sc = runner.parse_scenario(args.scenario)
    run_curve(sc, _out_dir(args.out))


def cmd_check(args):
    from . import acceptance
    results = acceptance.run_all(quick=args.quick)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 3 if failed else 0


def cmd_dump_config(args):
    from . import runner
    if args.scenario:
        sc = runner.parse_scenario(args.scenario)
        sys.stdout.write(runner.dump_config(sc.sections))
    else:
        sys.stdout.write(runner.dump_config())


def build_parser():
    p = argparse.ArgumentParser(prog="magnetoelast",
                                description="Eulerian thermo-magneto-viscoelastic simulator")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for the linear algebra (else MAGNETOELAST_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("scenario")
    r.add_argument("--out", default=".")
    r.add_argument("--snapshots", type=int, default=None, help="dump fields every N steps")
    r.add_argument("--threads", type=int, default=None, dest="threads_sub")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("check", help="run the acceptance suite")
    c.add_argument("--quick", action="store_true", help="smaller grids and step counts")
    c.set_defaults(func=cmd_check)
    cu = sub.add_parser("curve", help="statics transition curve of a scenario")
    cu.add_argument("scenario")
    cu.add_argument("--out", default=".")
    cu.set_defaults(func=cmd_curve)
    d = sub.add_parser("dump-config", help="print the effective configuration")
    d.add_argument("scenario", nargs="?")
    d.set_defaults(func=cmd_dump_config)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    _threads(getattr(args, "threads_sub", None) or args.threads)
    try:
        rc = args.func(args)
    except ValidationError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return 2
    except (SolverError, DomainError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        info = getattr(exc, "info", None)
        if info:
            print(f"  {info}", file=sys.stderr)
        return 3
    return rc or 0


if __name__ == "__main__":
    sys.exit(main())
