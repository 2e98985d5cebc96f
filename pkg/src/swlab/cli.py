"""Command-line front end.

Subcommands:

* ``solve --config F``          run a solve described by a flat key=value
                                config file; writes SWV1 checkpoints and
                                final fields, a CSV iteration log and a
                                JSON report.
* ``verify --suite S --seed N`` run a named verification suite (or "all")
                                on seeded random data; JSON report.
* ``index --op O --degree D --size NxN``  numerical index of a linearized
                                block; JSON record with the expected value.
* ``scan-epsilon --config F --schedule s1,s2,...``  epsilon continuation
                                over the given non-increasing schedule.
* ``export --in F.swv --format csv|json``  convert stored fields.

Exit codes: 0 success, 1 failed verification check, 2 config error,
3 divergence, 4 IO error, 5 ambiguous spectral gap.  The environment
variable SWV_THREADS caps the BLAS/LAPACK thread pools.  With --plots,
report-producing commands also render diagnostic figures next to their
CSV/JSON outputs.
"""

import argparse
import json
import os
import sys

import numpy as np

from .lattice import TorusLattice, BundleSpec
from .equations import Configuration
from .linearization import compute_index, AmbiguousSpectrumError
from .solver import (SolveOptions, SolverDivergence, solve,
                     epsilon_continuation, vortex_ansatz,
                     refine_vortex_ansatz, prolong_configuration,
                     count_vortices)
from .io import (save_fields, load_fields, write_csv_log, write_json_report,
                 FieldIOError, CSV_COLUMNS)
from .verify import run_suites, SUITES

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4
EXIT_AMBIGUOUS = 5


class ConfigError(ValueError):
    pass


_CONFIG_KEYS = {
    "nx": int, "ny": int, "lx": float, "ly": float,
    "conformal": str, "degree": int, "n": int, "weights": str,
    "epsilon": float, "tau": float, "tau_area": float,
    "ansatz": str, "refine_ansatz": str, "initial_fields": str,
    "method": str, "tol": float, "max_iter": int, "gauge_fix": str,
    "lam0": float, "lsqr_iter": int, "checkpoint_every": int,
    "verify_solution": str, "coarse_start": str,
    "out_prefix": str, "seed": int,
}

_BOOLS = {"true": True, "false": False, "1": True, "0": False,
          "yes": True, "no": False}


def parse_run_config(path):
    """Parse and fully validate a flat key=value run configuration."""
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    raw = {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            raw[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value for {key!r}")

    cfg = {
        "nx": raw.get("nx", 16), "ny": raw.get("ny", 16),
        "lx": raw.get("lx", 1.0), "ly": raw.get("ly", 1.0),
        "conformal": raw.get("conformal", "none"),
        "degree": raw.get("degree", 0), "n": raw.get("n", 1),
        "epsilon": raw.get("epsilon", 1.0),
        "ansatz": raw.get("ansatz", "vortex"),
        "initial_fields": raw.get("initial_fields"),
        "method": raw.get("method", "gauss-newton"),
        "tol": raw.get("tol", 1e-8),
        "lam0": raw.get("lam0", 1.0),
        "max_iter": raw.get("max_iter", 200),
        "gauge_fix": raw.get("gauge_fix", "coulomb"),
        "lsqr_iter": raw.get("lsqr_iter", 4000),
        "checkpoint_every": raw.get("checkpoint_every", 0),
        "out_prefix": raw.get("out_prefix", "run"),
        "seed": raw.get("seed", 0),
    }
    if cfg["nx"] < 2 or cfg["ny"] < 2:
        raise ConfigError("lattice must be at least 2x2")
    if cfg["lx"] <= 0 or cfg["ly"] <= 0:
        raise ConfigError("torus side lengths must be positive")
    if cfg["n"] < 1:
        raise ConfigError("n must be >= 1")
    if not 0.0 <= cfg["epsilon"] <= 1.0:
        raise ConfigError("epsilon must lie in [0, 1]")
    if "tau" in raw and "tau_area" in raw:
        raise ConfigError("give tau or tau_area, not both")
    area = cfg["lx"] * cfg["ly"]
    cfg["tau"] = raw.get("tau", raw.get("tau_area", 0.0) / area
                         if "tau_area" in raw else None)
    if cfg["ansatz"] not in ("vortex", "zero"):
        raise ConfigError("ansatz must be 'vortex' or 'zero'")
    for key, default in (("refine_ansatz", "true"),
                         ("verify_solution", "true"),
                         ("coarse_start", "false")):
        val = raw.get(key, default).lower()
        if val not in _BOOLS:
            raise ConfigError(f"{key} must be a boolean")
        cfg[key] = _BOOLS[val]
    if cfg["lam0"] <= 0:
        raise ConfigError("lam0 must be positive")
    if cfg["coarse_start"]:
        if cfg["nx"] % 2 or cfg["ny"] % 2 or cfg["nx"] < 16 or cfg["ny"] < 16:
            raise ConfigError("coarse_start needs even nx, ny >= 16")
        if cfg["initial_fields"]:
            raise ConfigError("coarse_start conflicts with initial_fields")
    if cfg["method"] not in SolveOptions.METHODS:
        raise ConfigError(f"unknown method {cfg['method']!r}")
    if cfg["gauge_fix"] not in ("none", "coulomb"):
        raise ConfigError("gauge_fix must be 'none' or 'coulomb'")
    if cfg["tol"] <= 0:
        raise ConfigError("tol must be positive")
    weights = raw.get("weights")
    if weights is not None:
        try:
            cfg["weights"] = [float(v) for v in weights.split(",")]
        except ValueError:
            raise ConfigError("weights must be a comma-separated float list")
        if len(cfg["weights"]) != cfg["n"]:
            raise ConfigError("weights length must equal n")
    else:
        cfg["weights"] = None
    if cfg["conformal"] not in ("none", "flat") \
            and not cfg["conformal"].startswith("sin:"):
        raise ConfigError("conformal must be none, flat, or sin:AMPLITUDE")
    return cfg


def _build_lattice(cfg):
    conformal = None
    if cfg["conformal"].startswith("sin:"):
        amp = float(cfg["conformal"][4:])
        nx, ny = cfg["nx"], cfg["ny"]
        prof = np.exp(amp * np.sin(2.0 * np.pi * np.arange(nx) / nx))
        conformal = prof[:, None] * np.ones((nx, ny))
    return TorusLattice(cfg["nx"], cfg["ny"], cfg["lx"], cfg["ly"],
                        conformal=conformal)


def _build_initial(cfg):
    if cfg["initial_fields"]:
        return load_fields(cfg["initial_fields"])
    if cfg["coarse_start"]:
        coarse = dict(cfg, nx=cfg["nx"] // 2, ny=cfg["ny"] // 2,
                      coarse_start=False)
        q = _build_initial(coarse)
        opts = SolveOptions(method=cfg["method"], tol=1e-5, max_iter=40,
                            lam0=1e-3, gauge_fix=cfg["gauge_fix"],
                            lsqr_iter=cfg["lsqr_iter"],
                            verify_solution=False)
        try:
            q, _ = solve(q, opts)
        except SolverDivergence as exc:
            # warm-start from the stalled coarse iterate; the fine solve
            # decides whether the run counts as converged
            if exc.configuration is not None:
                q = exc.configuration
        return prolong_configuration(q, _build_lattice(cfg))
    lat = _build_lattice(cfg)
    weights = None if cfg["weights"] is None else np.array(cfg["weights"])
    if cfg["ansatz"] == "zero":
        return Configuration(lat, BundleSpec(cfg["degree"]), n=cfg["n"],
                             weights=weights, epsilon=cfg["epsilon"],
                             tau=cfg["tau"] or 0.0)
    q = vortex_ansatz(lat, BundleSpec(cfg["degree"]), n=cfg["n"],
                      weights=weights, epsilon=cfg["epsilon"],
                      tau=cfg["tau"])
    if cfg["refine_ansatz"] and cfg["degree"] != 0 and cfg["epsilon"] > 0:
        q = refine_vortex_ansatz(q)
    return q


def _solve_options(cfg, schedule=(1.0,)):
    return SolveOptions(method=cfg["method"], tol=cfg["tol"],
                        max_iter=cfg["max_iter"], gauge_fix=cfg["gauge_fix"],
                        lam0=cfg["lam0"], lsqr_iter=cfg["lsqr_iter"],
                        epsilon_schedule=schedule,
                        checkpoint_every=cfg["checkpoint_every"],
                        verify_solution=cfg["verify_solution"])


def _check_outdir(prefix):
    outdir = os.path.dirname(os.path.abspath(prefix))
    if not os.path.isdir(outdir):
        raise FieldIOError(f"missing output directory: {outdir}")


def _emit_plots(prefix, rows, q=None):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    if rows:
        fig, ax = plt.subplots()
        data = np.array([[r[0], r[2], r[3], r[4]] for r in rows], float)
        for j, lab in enumerate(("r1", "r2", "r3")):
            ax.semilogy(data[:, 0], np.maximum(data[:, j + 1], 1e-300),
                        label=lab)
        ax.set_xlabel("iteration")
        ax.set_ylabel("residual norm")
        ax.legend()
        fig.savefig(prefix + "_residuals.png", dpi=120)
        plt.close(fig)
    if q is not None:
        fig, ax = plt.subplots()
        im = ax.imshow(np.abs(q.u[..., 0, 0]).T, origin="lower",
                       extent=(0, q.lattice.Lx, 0, q.lattice.Ly))
        fig.colorbar(im, ax=ax, label="|c1|")
        ax.set_title("first complex component magnitude")
        fig.savefig(prefix + "_field.png", dpi=120)
        plt.close(fig)


def cmd_solve(args):
    try:
        cfg = parse_run_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    prefix = cfg["out_prefix"]
    try:
        _check_outdir(prefix)
        q0 = _build_initial(cfg)
    except FieldIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    opts = _solve_options(cfg)
    np.random.seed(cfg["seed"])

    callback = None
    if cfg["checkpoint_every"] > 0:
        def callback(it, qc, rep):
            if it % cfg["checkpoint_every"] == 0:
                save_fields(f"{prefix}_checkpoint_{it:05d}.swv", qc)

    code = EXIT_OK
    try:
        q, rep = solve(q0, opts, callback=callback)
    except SolverDivergence as exc:
        rep = exc.report
        q = None
        code = EXIT_DIVERGED
    doc = rep.to_dict()
    if q is not None:
        count, flagged = count_vortices(q)
        doc["vortex_count"] = count
        doc["vortex_count_flagged"] = flagged
    try:
        if q is not None:
            save_fields(prefix + "_final.swv", q)
        write_csv_log(prefix + "_log.csv", rep.log_rows)
        write_json_report(prefix + "_report.json", doc)
        if args.plots:
            _emit_plots(prefix, rep.log_rows, q)
    except (FieldIOError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    if code == EXIT_OK and not rep.converged:
        code = EXIT_DIVERGED
    print(f"converged={rep.converged} residual={rep.residual_norm:.3e} "
          f"iterations={rep.iterations}")
    return code


def cmd_verify(args):
    try:
        records = run_suites(args.suite, seed=args.seed)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"suite": args.suite, "seed": args.seed, "checks": records,
           "pass": all(r["pass"] for r in records)}
    if args.out:
        try:
            write_json_report(args.out, doc)
        except FieldIOError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    for rec in records:
        if not rec["pass"]:
            print(f"FAILED: {rec['suite']}/{rec['check']} defect "
                  f"{rec['defect']:.3e} > {rec['tolerance']:.1e}",
                  file=sys.stderr)
    return EXIT_OK if doc["pass"] else EXIT_CHECK_FAILED


_INDEX_EXPECTED = {
    "dbar": lambda d, n: d,
    "dirac": lambda d, n: 0,
    "star-d": lambda d, n: 0,
    "star-dbar-1forms": lambda d, n: 2,
}


def cmd_index(args):
    try:
        nx, _, ny = args.size.partition("x")
        nx, ny = int(nx), int(ny)
    except ValueError:
        print("config error: --size must look like 16x16", file=sys.stderr)
        return EXIT_CONFIG
    if nx * ny > 32 * 32:
        print("config error: index computation limited to 32x32",
              file=sys.stderr)
        return EXIT_CONFIG
    if args.infile:
        try:
            q = load_fields(args.infile)
        except FieldIOError as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        lat = TorusLattice(nx, ny)
        q = Configuration(lat, BundleSpec(args.degree), n=args.n)
    try:
        idx, rec = compute_index(q, args.op)
    except AmbiguousSpectrumError as exc:
        print(f"ambiguous spectral gap: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"operator": args.op, "degree": q.bundle.degree,
           "lattice": f"{q.lattice.Nx}x{q.lattice.Ny}", "index": idx}
    doc.update({k: rec[k] for k in ("dim_ker", "dim_coker", "sigma_gap")})
    expected = _INDEX_EXPECTED.get(args.op)
    if expected is not None:
        doc["expected"] = expected(q.bundle.degree, q.n)
        doc["matches_expected"] = bool(doc["expected"] == idx)
    json.dump(doc, sys.stdout, indent=2)
    print()
    return EXIT_OK


def cmd_scan_epsilon(args):
    try:
        cfg = parse_run_config(args.config)
        schedule = tuple(float(s) for s in args.schedule.split(","))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    prefix = cfg["out_prefix"]
    try:
        _check_outdir(prefix)
        q0 = _build_initial(cfg)
    except FieldIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        opts = _solve_options(cfg, schedule=schedule)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stages = epsilon_continuation(q0, opts)
    doc = {"schedule": list(schedule), "stages": []}
    all_rows = []
    code = EXIT_OK
    try:
        for eps, q, rep in stages:
            stage = rep.to_dict()
            stage["epsilon"] = eps
            doc["stages"].append(stage)
            all_rows.extend(rep.log_rows)
            if rep.converged:
                save_fields(f"{prefix}_eps{eps:.4f}.swv", q)
            else:
                code = EXIT_DIVERGED
        doc["pass"] = all(s["converged"] for s in doc["stages"]) \
            and len(doc["stages"]) >= len(schedule)
        if not doc["pass"]:
            code = EXIT_DIVERGED
        write_json_report(prefix + "_scan.json", doc)
        write_csv_log(prefix + "_scan_log.csv", all_rows)
        if args.plots and stages:
            _emit_plots(prefix + "_scan", all_rows, stages[-1][1])
    except (FieldIOError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"stages converged: "
          f"{sum(1 for s in doc['stages'] if s['converged'])}"
          f"/{len(doc['stages'])}")
    return code


def cmd_export(args):
    try:
        q = load_fields(args.infile)
    except FieldIOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    base = args.out or os.path.splitext(args.infile)[0]
    lat = q.lattice
    try:
        if args.format == "json":
            save_fields(base + ".json", q)
            print(base + ".json")
            return EXIT_OK
        import csv as csv_mod
        with open(base + ".csv", "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            header = ["ix", "iy", "x", "y", "ax", "ay"]
            for k in range(q.n):
                header += [f"re_c1_{k}", f"im_c1_{k}",
                           f"re_c2_{k}", f"im_c2_{k}"]
            header += ["re_phi", "im_phi", "conformal"]
            writer.writerow(header)
            for i in range(lat.Nx):
                for j in range(lat.Ny):
                    row = [i, j, i * lat.hx, j * lat.hy,
                           repr(float(q.a.ax[i, j])),
                           repr(float(q.a.ay[i, j]))]
                    for k in range(q.n):
                        row += [repr(float(q.u[i, j, k, 0].real)),
                                repr(float(q.u[i, j, k, 0].imag)),
                                repr(float(q.u[i, j, k, 1].real)),
                                repr(float(q.u[i, j, k, 1].imag))]
                    row += [repr(float(q.phi[i, j].real)),
                            repr(float(q.phi[i, j].imag)),
                            repr(float(lat.h[i, j]))]
                    writer.writerow(row)
        print(base + ".csv")
        return EXIT_OK
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


def _apply_thread_cap():
    cap = os.environ.get("SWV_THREADS")
    if not cap:
        return
    try:
        limit = max(1, int(cap))
    except ValueError:
        return
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=limit)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(limit))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="swlab", description="lattice laboratory for the reduced "
        "equations on a flat torus")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a solve from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--plots", action="store_true",
                   help="render diagnostic figures beside the outputs")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", default="all", choices=SUITES + ("all",))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="JSON report path "
                   "(default: stdout)")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("index", help="numerical index of a linearized block")
    p.add_argument("--op", required=True,
                   choices=("dbar", "dirac", "star-d", "star-dbar-1forms",
                            "full"))
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--size", default="16x16")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--in", dest="infile", default=None,
                   help="evaluate at stored fields instead of zero")
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("scan-epsilon", help="epsilon continuation")
    p.add_argument("--config", required=True)
    p.add_argument("--schedule", required=True,
                   help="comma-separated non-increasing epsilon values")
    p.add_argument("--plots", action="store_true")
    p.set_defaults(fn=cmd_scan_epsilon)

    p = sub.add_parser("export", help="convert stored fields")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", required=True, choices=("csv", "json"))
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export)
    return parser


def main(argv=None):
    _apply_thread_cap()
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
