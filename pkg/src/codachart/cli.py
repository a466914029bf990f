"""Command-line entry point: ``codachart {transform,ats,design,simulate,monitor}``.

Results go to ``--output`` (default stdout).  Every run also writes a
manifest (subcommand, resolved parameters, argv, paths, version,
duration) to ``--manifest``, to ``<output>.manifest.json`` when an output
file is given, or to stderr otherwise.  Failures print
``{"error": {code, message, context}}`` on stderr and exit nonzero.
"""

import argparse
import json
import sys
import time

from . import __version__, io, kernels
from .chart import ChartDesign, Region, init_chart, update
from .designer import (DesignProblem, calibrate_H, near_optimal_vsi, optimize_fsi,
                       optimize_vsi, solve_hL)
from .errors import CodaChartError, DomainError
from .markov import MarkovSpec, ats_incontrol, ats_outofcontrol
from .montecarlo import SimConfig, simulate_ats
from .simplex import ilr, ilr_inv_rows, sbp_basis

USAGE_EXIT = 2
IO_EXIT = 7


class UsageError(CodaChartError):
    code = "usage_error"
    exit_code = USAGE_EXIT


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, prog=self.prog)


def _add_common(sp, seed=False):
    fmt = sp.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json",
                     help="machine-readable JSON output (default)")
    fmt.add_argument("--table", dest="format", action="store_const", const="table",
                     help="aligned text table")
    sp.set_defaults(format="json")
    sp.add_argument("--output", "-o", help="result file (default: stdout)")
    sp.add_argument("--manifest", help="manifest file path")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--m", type=int, default=30, help="Markov grid resolution")
    if seed:
        sp.add_argument("--seed", type=int, required=True)


def _add_chart_scalars(sp):
    sp.add_argument("--config", help="JSON document with any of the scalar fields below")
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--r", type=float)
    sp.add_argument("--H", type=float, help="control limit; omit to calibrate")
    sp.add_argument("--target-ats0", type=float, help="in-control ATS used to calibrate H")
    sp.add_argument("--w", type=float, help="warning limit; omit for an FSI chart")
    sp.add_argument("--h-S", dest="h_S", type=float)
    sp.add_argument("--h-L", dest="h_L",
                    help="long interval, or 'auto' to solve E0(h) = 1")
    sp.add_argument("--delta", type=float)


def build_parser():
    parser = _Parser(prog="codachart", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("transform", help="ilr / inverse-ilr of a CSV")
    sp.add_argument("--input", "-i", required=True)
    sp.add_argument("--direction", choices=["forward", "inverse"], default="forward")
    sp.add_argument("--basis", choices=["sbp"], default="sbp")
    _add_common(sp)

    sp = sub.add_parser("ats", help="Markov-chain ATS/ARL/E(h)")
    _add_chart_scalars(sp)
    sp.add_argument("--chain", choices=["auto", "1d", "2d"], default="auto")
    _add_common(sp)

    sp = sub.add_parser("design", help="optimal / near-optimal VSI designs")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--target-ats0", type=float, default=200.0)
    sp.add_argument("--delta", type=float, nargs="+", required=True)
    sp.add_argument("--h-S", dest="h_S", type=float, nargs="+", default=[0.1, 0.5])
    sp.add_argument("--mode", default="near-optimal",
                    help="full | near-optimal | ratio:R")
    sp.add_argument("--r-min", type=float, default=0.05)
    sp.add_argument("--r-step", type=float, default=0.01)
    sp.add_argument("--r-refine", type=float, default=0.001)
    sp.add_argument("--w-points", type=int, default=60)
    _add_common(sp)

    sp = sub.add_parser("simulate", help="Monte Carlo ATS/ARL/E(h)")
    _add_chart_scalars(sp)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.add_argument("--max-samples", type=int, default=10_000_000)
    sp.add_argument("--backend", choices=["compiled", "python"])
    _add_common(sp, seed=True)

    sp = sub.add_parser("monitor", help="run the chart over observed compositions")
    sp.add_argument("--data", required=True, help="CSV, n rows per sampling period")
    sp.add_argument("--design", required=True, help="JSON design document")
    sp.add_argument("--reset-on-signal", action="store_true",
                    help="restart the chart after a signal instead of stopping")
    _add_common(sp)
    return parser


_SCALARS = ("p", "n", "r", "H", "target_ats0", "w", "h_S", "h_L", "delta")


def _resolve_scalars(args):
    params = {}
    if args.config:
        doc = io.load_json(args.config)
        unknown = sorted(set(doc) - set(_SCALARS) - {"m"})
        if unknown:
            raise UsageError("unknown fields in config", fields=unknown)
        params.update(doc)
    for key in _SCALARS:
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    params.setdefault("n", 1)
    params.setdefault("delta", 0.0)
    params.setdefault("h_S", 1.0)
    for key in ("p", "r"):
        if key not in params:
            raise UsageError(f"missing required parameter --{key}")
    p, r = int(params["p"]), float(params["r"])
    m = int(params.get("m", args.m))
    params["m"] = m
    if params.get("H") is None:
        target = params.get("target_ats0")
        if target is None:
            raise UsageError("give --H or --target-ats0 to calibrate it")
        params["H"] = calibrate_H(p, r, float(target), m).H
    w = params.get("w")
    h_L = params.get("h_L", "auto" if w is not None else None)
    if h_L is None:
        h_L = params["h_S"]
    if h_L == "auto":
        if w is None:
            raise UsageError("--h-L auto needs --w")
        h_L = solve_hL(p, r, float(params["H"]), float(w), float(params["h_S"]), 1.0, m)
    params["h_L"] = float(h_L)
    if w is None and params["h_S"] != params["h_L"]:
        raise UsageError("a VSI chart (h_S != h_L) needs --w")
    return params


def _ats_result(params, chain="auto"):
    spec = MarkovSpec(p=int(params["p"]), r=float(params["r"]), H=float(params["H"]),
                      w=None if params.get("w") is None else float(params["w"]),
                      h_S=float(params["h_S"]), h_L=float(params["h_L"]),
                      delta=float(params["delta"]), m=params["m"], m1=params["m"],
                      m2=params["m"])
    use_2d = chain == "2d" or (chain == "auto" and spec.delta > 0)
    rep = ats_outofcontrol(spec) if use_2d else ats_incontrol(spec)
    out = rep.to_dict()
    out["n"] = int(params["n"])
    return out


def cmd_transform(args):
    basis_p = None
    if args.direction == "forward":
        X, _ = io.read_compositions(args.input)
        if X.size == 0:
            return "", {"rows": 0}
        basis_p = X.shape[1]
        out = ilr(X, sbp_basis(basis_p))
        text = io.format_csv(io.coord_header(basis_p), out)
    else:
        V, _ = io.read_numeric_csv(args.input)
        if V.size == 0:
            return "", {"rows": 0}
        basis_p = V.shape[1] + 1
        out = ilr_inv_rows(V, sbp_basis(basis_p))
        text = io.format_csv(io.composition_header(basis_p), out)
    return text, {"rows": int(out.shape[0]), "p": basis_p, "direction": args.direction,
                  "basis": args.basis}


def cmd_ats(args):
    params = _resolve_scalars(args)
    result = _ats_result(params, args.chain)
    if args.format == "table":
        keys = ("ats", "arl", "e_h", "chain")
        text = "\n".join(f"{k:>6}  {result[k]:.6g}" if k != "chain" else f"{k:>6}  {result[k]}"
                         for k in keys) + "\n"
    else:
        text = io.dumps(result) + "\n"
    return text, params


def _parse_mode(mode):
    if mode in ("full", "near-optimal", "near"):
        return ("near-optimal" if mode == "near" else mode), None
    if mode.startswith("ratio:"):
        try:
            return "ratio", float(mode.split(":", 1)[1])
        except ValueError:
            raise UsageError("ratio mode needs a number, e.g. ratio:0.5") from None
    raise UsageError("mode must be full, near-optimal or ratio:R", mode=mode)


def design_table(p, deltas, h_short, mode="near-optimal", ratio=None, target_ats0=200.0, n=1,
                 r_min=0.05, r_step=0.01, r_refine=0.001, w_points=60, m=30, threads=1):
    """Rows of a design comparison table (one per delta and h_S)."""
    rows = []
    for delta in deltas:
        fsi = optimize_fsi(p, delta, target_ats0, r_min, r_step, r_refine, m, threads)
        for h_S in h_short:
            problem = DesignProblem(p=p, n=n, delta=delta, h_S=h_S, target_ats0=target_ats0,
                                    r_min=r_min, ratio=ratio, r_step=r_step, r_refine=r_refine,
                                    w_points=w_points, m=m)
            if mode == "near-optimal":
                sol = near_optimal_vsi(fsi.r_star, fsi.H_star, problem)
            else:
                sol = optimize_vsi(problem, threads=threads)
            rows.append({
                "delta": delta, "h_S": h_S, "r_star": sol.r_star, "H_star": sol.H_star,
                "w_star": sol.w_star, "h_L_star": sol.h_L_star, "ats1_vsi": sol.ats1,
                "arl1_fsi": fsi.arl1, "ats0": sol.ats0, "e0_h": sol.e0_h,
                "provenance": sol.provenance, "fsi_r_star": fsi.r_star, "fsi_H_star": fsi.H_star,
            })
    return rows


def format_design_table(rows):
    head = ("delta", "h_S", "r*", "H*", "w*", "h_L*", "ATS1(VSI)", "ARL1(FSI)")
    lines = ["{:>6} {:>5} {:>6} {:>8} {:>6} {:>6} {:>10} {:>10}".format(*head)]
    for row in rows:
        lines.append("{:>6.2f} {:>5.2f} {:>6.3f} {:>8.4f} {:>6.2f} {:>6.2f} {:>10.2f} {:>10.2f}"
                     .format(row["delta"], row["h_S"], row["r_star"], row["H_star"],
                             row["w_star"], row["h_L_star"], row["ats1_vsi"], row["arl1_fsi"]))
    return "\n".join(lines) + "\n"


def cmd_design(args):
    mode, ratio = _parse_mode(args.mode)
    params = {"p": args.p, "n": args.n, "target_ats0": args.target_ats0, "delta": args.delta,
              "h_S": args.h_S, "mode": mode, "ratio": ratio, "r_min": args.r_min,
              "r_step": args.r_step, "r_refine": args.r_refine, "w_points": args.w_points,
              "m": args.m}
    rows = design_table(args.p, args.delta, args.h_S, mode=mode, ratio=ratio,
                        target_ats0=args.target_ats0, n=args.n, r_min=args.r_min,
                        r_step=args.r_step, r_refine=args.r_refine, w_points=args.w_points,
                        m=args.m, threads=args.threads)
    if args.format == "table":
        return format_design_table(rows), params
    return io.dumps({"rows": rows}) + "\n", params


def cmd_simulate(args):
    params = _resolve_scalars(args)
    config = SimConfig(p=int(params["p"]), r=float(params["r"]), H=float(params["H"]),
                       w=None if params.get("w") is None else float(params["w"]),
                       h_S=float(params["h_S"]), h_L=float(params["h_L"]),
                       delta=float(params["delta"]), seed=args.seed, replications=args.reps,
                       max_samples=args.max_samples)
    est = simulate_ats(config, threads=args.threads, backend=args.backend)
    result = est.to_dict()
    result["config"] = config.to_dict()
    params.update(seed=args.seed, reps=args.reps, max_samples=args.max_samples,
                  backend=est.backend)
    if args.format == "table":
        text = "".join(f"{k:>6}  {result[k]:.6g} ± {result[k + '_se']:.2g}\n"
                       for k in ("ats", "arl", "e_h"))
    else:
        text = io.dumps(result) + "\n"
    return text, params


def cmd_monitor(args):
    design = ChartDesign.from_dict(io.load_json(args.design))
    X, _ = io.read_compositions(args.data)
    if X.size and X.shape[1] != design.p:
        raise DomainError(f"data has {X.shape[1]} parts, design expects {design.p}",
                          parts=int(X.shape[1]), p=design.p)
    if X.shape[0] % design.n:
        raise DomainError("number of rows is not a multiple of the sample size n",
                          rows=int(X.shape[0]), n=design.n)
    lines = []
    state = init_chart(design)
    run = 0
    signals = 0
    for start in range(0, X.shape[0], design.n):
        state, report = update(state, design, X[start:start + design.n])
        rec = report.to_dict()
        if args.reset_on_signal:
            rec["run"] = run
        lines.append(json.dumps(rec, sort_keys=True))
        if report.region is Region.SIGNAL:
            signals += 1
            if not args.reset_on_signal:
                break
            state = init_chart(design)
            run += 1
    params = {"design": design.to_dict(), "periods": len(lines), "signals": signals,
              "reset_on_signal": args.reset_on_signal}
    return "".join(line + "\n" for line in lines), params


COMMANDS = {"transform": cmd_transform, "ats": cmd_ats, "design": cmd_design,
            "simulate": cmd_simulate, "monitor": cmd_monitor}


def _emit_error(err, stream):
    stream.write(json.dumps({"error": err}, sort_keys=True, default=str) + "\n")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        text, params = COMMANDS[args.command](args)
    except CodaChartError as exc:
        _emit_error(exc.to_dict(), sys.stderr)
        return exc.exit_code
    except OSError as exc:
        _emit_error({"code": "io_error", "message": str(exc),
                     "context": {"path": getattr(exc, "filename", None)}}, sys.stderr)
        return IO_EXIT
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    manifest = {
        "subcommand": args.command,
        "parameters": params,
        "argv": argv,
        "input": getattr(args, "input", None) or getattr(args, "data", None),
        "output": args.output,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "duration_s": time.perf_counter() - start,
    }
    if args.command == "monitor":
        manifest["design_path"] = args.design
    path = args.manifest or (args.output + ".manifest.json" if args.output else None)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(io.dumps(manifest) + "\n")
    else:
        sys.stderr.write(json.dumps({"manifest": manifest}, sort_keys=True, default=io._plain)
                         + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
