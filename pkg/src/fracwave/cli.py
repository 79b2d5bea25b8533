"""Command-line entry point: ``fracwave simulate | lifespan | verify``.

Exit codes: 0 ok, 1 failed check, 2 usage or config error, 3 numerical
abort, 4 insufficient data.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings

from . import blowup, verification
from .config import KNOWN_KEYS, ConfigError, RunConfig, load_config
from .evolution import BlowupOverflow, ConvergenceError, simulate

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_ABORT, EXIT_DATA = 0, 1, 2, 3, 4

log = logging.getLogger("fracwave")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _add_config_flags(sp):
    sp.add_argument("--config", help="key=value configuration file")
    for f in RunConfig.__dataclass_fields__.values():
        flag = "--" + f.name.replace("_", "-")
        sp.add_argument(flag, dest=f.name, default=None, help=f"override {f.name}")


def _config(args):
    return load_config(args.config, {k: getattr(args, k) for k in KNOWN_KEYS})


def _outdir(cfg):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def cmd_simulate(args):
    from .plotting import plot_trace

    cfg = _config(args)
    out = _outdir(cfg)
    h = cfg.config_hash()
    params = cfg.wave_params()
    u0, u1 = cfg.data()
    try:
        trace, state = simulate(params, u0, u1, cfg.t_end, cfg.scheme_config())
    except (BlowupOverflow, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        write_json(os.path.join(out, "manifest.json"), _manifest(cfg, "aborted", math.nan))
        return EXIT_ABORT
    trace.to_csv(os.path.join(out, "trace.csv"), comment=f"config_hash={h}")
    write_json(os.path.join(out, "manifest.json"), _manifest(cfg, trace.outcome, trace.final_time))
    plot_trace(trace, os.path.join(out, "trace.png"), title=f"{cfg.group} p={cfg.p:g} eps={cfg.epsilon:g}",
               config_hash=h)
    print(f"simulate: outcome={trace.outcome} final_time={trace.final_time:.6g} "
          f"x_norm={trace.x_norm_running[-1]:.6g} steps={len(trace) - 1}")
    return EXIT_ABORT if trace.outcome == "blowup" else EXIT_OK


def _manifest(cfg: RunConfig, outcome, final_time, **extra):
    d = {k: getattr(cfg, k) for k in ("group", "bandlimit", "alpha", "b", "m2", "p", "dt", "scheme", "seed")}
    d.update(outcome=outcome, final_time=final_time, config_hash=cfg.config_hash())
    d.update(extra)
    return d


def cmd_lifespan(args):
    from .plotting import plot_lifespans

    try:
        eps = [float(x) for x in args.epsilons.split(",") if x.strip()]
    except ValueError:
        print("epsilons must be a comma separated list of numbers", file=sys.stderr)
        return EXIT_USAGE
    if len(eps) < 4 or min(eps) <= 0:
        print("need at least 4 positive epsilons", file=sys.stderr)
        return EXIT_USAGE
    cfg = _config(args)
    out = _outdir(cfg)
    h = cfg.config_hash()
    method = blowup._METHOD_ALIASES.get(args.method.lower().replace("_", ""))
    if method is None:
        print(f"unknown method {args.method!r}", file=sys.stderr)
        return EXIT_USAGE
    base = cfg.replace(epsilon=1.0)
    data = base.data()
    if method == blowup.COMPARISON_ODE:
        threshold = float(args.threshold) if args.threshold is not None else 1e6
        t_max = None
    else:
        threshold = cfg.threshold
        t_max = cfg.t_end
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        records, slope, ci = blowup.lifespan_scan(cfg.p, eps, method, cfg.wave_params(), data, threshold,
                                                  cfg.scheme_config(), t_max, workers=args.workers)
        fit = blowup.fit_summary(records, cfg.p, {"method": method, "config_hash": h})
    blowup.write_scan_csv(os.path.join(out, "lifespan_scan.csv"), records, comment=f"config_hash={h}")
    write_json(os.path.join(out, "lifespan_fit.json"), fit)
    if method == blowup.FULL_PDE:
        for r in records:
            outcome = "blowup" if r.finite else "completed"
            write_json(os.path.join(out, f"manifest_eps={r.epsilon:g}.json"),
                       _manifest(cfg.replace(epsilon=r.epsilon), outcome, r.lifespan if r.finite else cfg.t_end,
                                 epsilon=r.epsilon, flags=r.flags))
    plot_lifespans(records, fit, os.path.join(out, "lifespan.png"), config_hash=h)
    nfin = sum(r.finite for r in records)
    print(f"lifespan: method={method} p={cfg.p:g} slope={slope:.4f} +- {ci:.4f} expected={1 - cfg.p:g} "
          f"finite={nfin}/{len(records)}")
    return EXIT_DATA if nfin < 4 else EXIT_OK


def cmd_verify(args):
    from .plotting import plot_reports

    out = args.output_dir
    os.makedirs(out, exist_ok=True)
    reports = verification.run_suite(args.suite)
    write_json(os.path.join(out, f"verify_{args.suite}.json"), [r.to_dict() for r in reports])
    plot_reports(reports, os.path.join(out, f"verify_{args.suite}.png"))
    for r in reports:
        print(r.line())
    failed = sum(not r.passed for r in reports)
    print(f"verify: {len(reports) - failed}/{len(reports)} passed")
    return EXIT_CHECK if failed else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="fracwave", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one evolution and write its norm trace")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("lifespan", help="lifespan sweep over epsilon with a log-log fit")
    _add_config_flags(sp)
    sp.add_argument("--epsilons", required=True, help="comma separated amplitudes (at least 4)")
    sp.add_argument("--method", default="comparison", help="comparison or pde")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_lifespan)

    sp = sub.add_parser("verify", help="run numerical checks and write a JSON report")
    sp.add_argument("suite", choices=verification.SUITES + ("all",))
    sp.add_argument("--output-dir", default="out")
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
