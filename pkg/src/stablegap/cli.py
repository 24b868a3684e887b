"""``stablegap`` command line: one subcommand per computation or check.

Every command writes one self-describing report (JSON, or CSV for tables)
that embeds the resolved configuration and the run metadata.  Defaults can
come from an INI file: ``[common]`` applies to every command and a section
named after the command (``[gap]``, ``[mc]``, ...) overrides it.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad usage or input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import (CenteringError, MeshTooCoarseError, ParameterError, PositivityError,
                     QuadratureError, SolverError, StepCapError, TruncationError)

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3
CACHE_ENV = "STABLEGAP_CACHE_DIR"

log = logging.getLogger("stablegap")


def quantity(value, provenance="computed", tolerance=None):
    return {"value": value, "provenance": provenance, "tolerance": tolerance}


def _point(text):
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected x1,x2 but got {text!r}")
    return tuple(vals)


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats so the output stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return str(float(obj))
    return obj


# ---------------------------------------------------------------------------
# commands; each returns (payload, passed) with passed None when nothing is checked
# ---------------------------------------------------------------------------

def _assemble_kw(args):
    return {"near_field": args.near_field, "killing": args.killing, "cache_dir": args.cache_dir}


def cmd_constants(args):
    from .special import all_constants

    consts = all_constants(args.alpha, args.d)
    if args.format == "csv":
        return [{"name": k, "value": v, "provenance": "computed"} for k, v in consts.items()], None
    return {k: quantity(v) for k, v in consts.items()}, None


def cmd_kernel(args):
    from . import kernels

    ball = kernels.BallSpec(args.center, args.radius)
    if args.which == "density":
        val = kernels.free_density(args.alpha, args.t, args.x)
        return {"density": quantity(val, tolerance=kernels.DENSITY_TOL)}, None
    if args.which == "poisson":
        out = {"kernel": quantity(kernels.poisson_kernel(ball, args.alpha, args.z, args.y))}
        if args.mass:
            out["mass"] = quantity(kernels.poisson_mass(ball, args.alpha, args.z), tolerance=1e-10)
        return out, None
    if args.which == "green":
        return {"green": quantity(kernels.green_unit_ball(args.alpha, args.z, args.y))}, None
    return {"exit_time": quantity(kernels.expected_exit_time(args.alpha, ball, args.z))}, None


def cmd_gap(args):
    from .geometry import parse_domain
    from .operator import assemble
    from .spectral import RESIDUAL_TOL, eigenpairs

    domain = parse_domain(args.domain)
    form = assemble(domain, args.alpha, args.h, **_assemble_kw(args))
    spec = eigenpairs(form, args.k)
    vals = [quantity(float(v), tolerance=RESIDUAL_TOL) for v in spec.values]
    return {
        "domain": domain.to_dict(), "alpha": args.alpha, "h": args.h, "cells": form.n,
        "eigenvalues": vals, "lambda1": vals[0], "lambda2": vals[1],
        "gap": quantity(spec.gap, tolerance=RESIDUAL_TOL),
        "residuals": spec.residuals,
    }, None


def _eigenfunction_report(domain, alpha, h, assemble_kw):
    from . import eigenchecks
    from .geometry import Rectangle
    from .operator import assemble
    from .spectral import eigenpairs

    spec = eigenpairs(assemble(domain, alpha, h, **assemble_kw), 2)
    checks = [eigenchecks.check_symmetry_unimodality(spec)]
    if isinstance(domain, Rectangle):
        checks.append(eigenchecks.check_phi1_bounds(spec))
        checks.append(eigenchecks.check_midconcavity(spec))
        if 1.0 <= alpha < 2.0:
            checks.append(eigenchecks.check_strip_ratio(spec))
    checks.append(eigenchecks.check_harnack(spec))
    return {c.name: c.to_dict() for c in checks}, all(c.passed for c in checks)


def _variational_report(domain, alpha, h, assemble_kw, n_random, seed):
    from .operator import assemble
    from .spectral import eigenpairs
    from .variational import verify_variational

    form = assemble(domain, alpha, h, **assemble_kw)
    rep = verify_variational(form, eigenpairs(form, 2), n_random=n_random, seed=seed)
    return rep.to_dict(), rep.passed()


def _quick_suite(args):
    """A small pass over every module; minutes at most."""
    from .geometry import parse_domain
    from .kernels import BallSpec, poisson_mass
    from .montecarlo import empirical_cf
    from .operator import assemble
    from .partition import run_partition0_suite, run_partition_suite
    from .spectral import eigenpairs

    n = 500 if args.quick else 10_000
    h = 1 / 8 if args.quick else 1 / 16
    out, ok = {}, True

    def record(name, payload, passed):
        nonlocal ok
        out[name] = {"passed": passed, "result": payload}
        ok = ok and passed

    dom = parse_domain(args.domain)
    kw = _assemble_kw(args)
    record("variational", *_variational_report(dom, args.alpha, h, kw, 20, args.seed))
    record("eigenfunction", *_eigenfunction_report(dom, args.alpha, h, kw))
    lam = [eigenpairs(assemble(dom.scaled(beta), args.alpha, h * beta, **kw), 3).values
           for beta in (1.0, 2.0)]
    scale_err = float(np.max(np.abs(lam[1] * 2.0**args.alpha / lam[0] - 1)))
    record("scaling", {"max_rel_error": scale_err}, scale_err < 1e-12)
    for suite in (run_partition0_suite(n, args.seed), run_partition_suite(n, args.seed)):
        record(suite.lemma, {"instances": suite.instances, "violations": suite.violations,
                             "worst_ratio": suite.worst_ratio}, suite.passed)
    mass = poisson_mass(BallSpec((0.0, 0.0), 1.0), args.alpha, (0.3, -0.2))
    record("poisson_mass", {"mass": mass}, abs(mass - 1) < 1e-6)
    cf = empirical_cf(args.alpha, n=20 * n, seed=args.seed)
    record("characteristic_function", cf.to_dict(), cf.passed())
    return out, ok


def cmd_verify(args):
    from .geometry import parse_domain

    if args.what == "all":
        return _quick_suite(args)
    domain = parse_domain(args.domain)
    if args.what == "variational":
        return _variational_report(domain, args.alpha, args.h, _assemble_kw(args),
                                   args.trials, args.seed)
    return _eigenfunction_report(domain, args.alpha, args.h, _assemble_kw(args))


def cmd_bounds(args):
    from .bounds import verify_bounds
    from .geometry import parse_domain

    rep = verify_bounds(parse_domain(args.domain), args.alpha, h=args.h, order=args.order,
                        safety=args.safety, **_assemble_kw(args))
    return rep.to_dict(), rep.passed


def _sweep(text):
    spec = {}
    for item in text:
        key, _, vals = item.partition("=")
        if key not in ("alphas", "ratios") or not vals:
            raise ParameterError(f"bad sweep item {item!r}; expected alphas=... or ratios=...")
        spec[key] = _floats(vals)
    return spec.get("alphas", [0.5, 1.0, 1.5]), spec.get("ratios", [1.0, 2.0, 4.0, 8.0])


def cmd_table(args):
    from .bounds import verify_bounds
    from .geometry import Rectangle

    alphas, ratios = _sweep(args.sweep)
    rows, ok = [], True
    for ratio in ratios:
        for alpha in alphas:
            rep = verify_bounds(Rectangle(ratio * args.b, args.b), alpha, h=args.h,
                                order=args.order, safety=args.safety, **_assemble_kw(args))
            row = {"a_over_b": ratio, "b": args.b, "alpha": alpha, "h": rep.hs[0],
                   "gap_coarse": rep.gaps[0], "gap_fine": rep.gaps[1], "gap": rep.gap,
                   "budget": rep.budget, "gap_provenance": "computed"}
            for chk in rep.bounds:
                row[chk.name] = chk.value
                row[chk.name + "_ok"] = chk.satisfied
            row["bound_provenance"] = "published-bound"
            row["passed"] = rep.passed
            rows.append(row)
            ok = ok and rep.passed
            log.info("a/b=%g alpha=%g gap=%.6g passed=%s", ratio, alpha, rep.gap, rep.passed)
    return rows, ok


def cmd_lemmas(args):
    from .partition import run_partition0_suite, run_partition_suite

    out, ok = {}, True
    for suite in (run_partition0_suite(args.n, args.seed), run_partition_suite(args.n, args.seed)):
        out[suite.lemma] = {"instances": suite.instances, "violations": suite.violations,
                            "worst_ratio": suite.worst_ratio, "passed": suite.passed,
                            "witness": suite.witness}
        ok = ok and suite.passed
    return out, ok


def cmd_mc(args):
    from .kernels import BallSpec, expected_exit_time
    from .montecarlo import (PathConfig, binned_poisson_mass, empirical_cf, exit_position_mc,
                             exit_time_mc)

    if args.which == "cf":
        res = empirical_cf(args.alpha, args.dt, args.xi, args.n, args.seed)
        return res.to_dict(), res.passed()
    ball = BallSpec(args.center, args.radius)
    start = args.start if args.start is not None else ball.center
    cfg = PathConfig(args.alpha, args.dt, args.step_cap, args.seed, args.workers, args.processes)
    if args.which == "exittime":
        est = exit_time_mc(ball, args.alpha, start, cfg, args.n)
        exact = expected_exit_time(args.alpha, ball, start)
        rel = abs(est.value - exact) / exact if exact > 0 else abs(est.value)
        out = est.to_dict()
        out["closed_form"] = quantity(exact)
        out["relative_error"] = quantity(rel, "mc-estimate", 0.03)
        return out, rel < 0.03
    stats = exit_position_mc(ball, args.alpha, start, cfg, args.n)
    quad = binned_poisson_mass(ball, args.alpha, start)
    diff = np.abs(stats.probabilities - quad)
    limit = np.maximum(0.01, 4 * stats.prob_stderr)
    out = stats.to_dict()
    out["quadrature"] = {"value": quad, "provenance": "computed", "tolerance": 1e-10}
    out["max_abs_difference"] = quantity(float(diff.max()), "mc-estimate", "max(0.01, 4 stderr)")
    return out, bool(np.all(diff < limit))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_alpha(p, default=None):
    # not argparse-required so that a config file can supply it
    p.add_argument("--alpha", type=float, default=default, help="stability index in (0, 2)")


def _add_form(p):
    p.add_argument("--domain", default="rect:1,0.5")
    p.add_argument("--h", type=float, default=1 / 16)
    p.add_argument("--near-field", default="moment", choices=("moment", "gauss"))
    p.add_argument("--killing", default="domain", choices=("domain", "cells"))


def build_parser():
    parser = argparse.ArgumentParser(prog="stablegap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="INI file with [common] and per-command sections")
    parser.add_argument("--out", help="report path (default: stdout)")
    parser.add_argument("--cache-dir", default=os.environ.get(CACHE_ENV),
                        help=f"assembled-form cache (default: ${CACHE_ENV})")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="named constants at alpha")
    _add_alpha(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--format", default="json", choices=("json", "csv"))
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("kernel", help="closed-form kernels")
    p.add_argument("which", choices=("density", "poisson", "green", "exittime"))
    _add_alpha(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", type=_point, default=(0.0, 0.0))
    p.add_argument("--z", type=_point, default=(0.0, 0.0))
    p.add_argument("--y", type=_point, default=(2.0, 0.0))
    p.add_argument("--center", type=_point, default=(0.0, 0.0))
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--mass", action="store_true", help="also integrate the Poisson kernel")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("gap", help="lowest eigenvalues and the gap")
    _add_alpha(p)
    _add_form(p)
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("verify", help="property checks")
    p.add_argument("what", choices=("variational", "eigenfunction", "all"))
    _add_alpha(p, 1.0)
    _add_form(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="extrapolated gap against the explicit bounds")
    _add_alpha(p)
    _add_form(p)
    p.set_defaults(h=None)
    p.add_argument("--order", type=float, default=1.0)
    p.add_argument("--safety", type=float, default=3.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("table", help="CSV sweep of gaps and bounds over rectangles")
    p.add_argument("--sweep", nargs="+", default=["alphas=0.5,1,1.5", "ratios=1,2,4,8"])
    p.add_argument("--b", type=float, default=0.5, help="short half-width")
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--order", type=float, default=1.0)
    p.add_argument("--safety", type=float, default=3.0)
    p.add_argument("--near-field", default="moment", choices=("moment", "gauss"))
    p.add_argument("--killing", default="domain", choices=("domain", "cells"))
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("lemmas", help="randomised partition inequalities")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("mc", help="Monte Carlo exit problems and calibration")
    p.add_argument("which", choices=("exittime", "exitpos", "cf"))
    _add_alpha(p)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--processes", type=int, default=1)
    p.add_argument("--step-cap", type=int, default=200_000)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--center", type=_point, default=(0.0, 0.0))
    p.add_argument("--start", type=_point, default=None)
    p.add_argument("--xi", type=_point, default=(1.0, 0.0))
    p.set_defaults(func=cmd_mc)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with INI values installed as defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cp = configparser.ConfigParser()
        if not cp.read(known.config):
            raise ParameterError(f"cannot read config {known.config!r}")
        first = parser.parse_args(argv)
        values = dict(cp["common"]) if cp.has_section("common") else {}
        if cp.has_section(first.command):
            values.update(cp[first.command])
        values = {k.replace("-", "_"): v for k, v in values.items()}
        subparser = parser._subparsers._group_actions[0].choices[first.command]
        actions = {a.dest: a for a in parser._actions + subparser._actions}
        unknown = set(values) - set(actions)
        if unknown:
            raise ParameterError(f"unknown config keys for {first.command}: {sorted(unknown)}")
        for key, text in values.items():
            action = actions[key]
            if isinstance(action, argparse._StoreTrueAction):
                values[key] = cp.BOOLEAN_STATES.get(text.lower(), False)
            elif action.nargs in ("+", "*"):
                values[key] = text.split()
            elif action.type is not None:
                values[key] = action.type(text)
        for target in (parser, subparser):
            own = {a.dest for a in target._actions}
            target.set_defaults(**{k: v for k, v in values.items() if k in own})
    args = parser.parse_args(argv)
    if hasattr(args, "alpha") and args.alpha is None:
        raise ParameterError("--alpha is required (flag or config)")
    return args


def _resolved(args):
    return {k: v for k, v in vars(args).items() if k not in ("func",)}


def _write(report, payload, args):
    if isinstance(payload, list):
        buf = io.StringIO()
        if payload:
            writer = csv.DictWriter(buf, fieldnames=list(payload[0]))
            writer.writeheader()
            writer.writerows(payload)
        text = buf.getvalue()
        if args.out:
            meta = os.path.splitext(args.out)[0] + ".meta.json"
            with open(meta, "w") as fh:
                json.dump(_clean(report), fh, indent=2, default=_json_default)
    else:
        report["result"] = payload
        text = json.dumps(_clean(report), indent=2, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except (ParameterError, configparser.Error) as exc:
        print(f"stablegap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        payload, passed = args.func(args)
    except (ParameterError, MeshTooCoarseError) as exc:
        print(f"stablegap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, QuadratureError, TruncationError, StepCapError, PositivityError,
            CenteringError) as exc:
        print(f"stablegap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": args.command,
        "config": _resolved(args),
        "seconds": time.perf_counter() - t0,
        "seed": getattr(args, "seed", None),
        "passed": passed,
    }
    _write(report, payload, args)
    return EXIT_FAIL if passed is False else EXIT_PASS


if __name__ == "__main__":
    sys.exit(main())
