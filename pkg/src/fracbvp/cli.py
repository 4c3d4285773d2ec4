"""Command line front end.

Exit codes: 0 success, 1 I/O or unexpected failure, 2 validation error
(bad config, hypothesis H1 violated), 3 numerical non-convergence,
4 certificate verdict false (``certify`` only).
"""

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, load_problem, write_report
from .existence import certify
from .expr import ExprError
from .kernel import HypothesisError, KernelContext, SpecError, check_hypotheses
from .measures import MeasureError
from .selftest import DEFAULT_SEED, run_selftest
from .solver import OperatorError, picard_solve, solution_grid, solve_linear, verify_solution
from .spectral import PowerIterationError, spectral_bounds

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_CERT_FAIL = 0, 1, 2, 3, 4

log = logging.getLogger("fracbvp")


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _numerics(cfg, args):
    overrides = {}
    for attr, key in (("quad_order", "quad_order"), ("quad_panels", "quad_panels"),
                      ("quad_tol", "quad_tol"), ("grid", "grid"), ("tol", "tol"),
                      ("max_iter", "max_iter"), ("damping", "damping"), ("n", "nystrom_n")):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return replace(cfg.numerics, **overrides)


def _context(cfg, num):
    return KernelContext(cfg.spec, quad_order=num.quad_order, quad_panels=num.quad_panels)


def analysis_report(ctx, num):
    hyp = check_hypotheses(ctx, num.h2_grid)
    report = {"lambda": ctx.lam, "h1": "pass" if hyp.h1 else "fail", "h2": hyp.h2}
    if not hyp.h1:
        return report, None
    b = spectral_bounds(ctx, n=num.nystrom_n, quad_tol=num.quad_tol)
    report.update({
        "tau1": b.tau1, "tau2": b.tau2,
        "tau1_inv": b.tau1_inv, "tau2_inv": b.tau2_inv,
        "r_estimate": b.r_estimate, "n_nodes": b.n_nodes, "residual": b.residual,
        "mesh_error": b.mesh_error,
        "sandwich": b.sandwich_ok(),
        "h2_grid": hyp.grid_size, "min_g": hyp.min_g,
    })
    return report, b


def cmd_analyze(args):
    cfg = load_problem(args.config)
    num = _numerics(cfg, args)
    ctx = _context(cfg, num)
    report, _ = analysis_report(ctx, num)
    _emit(write_report(report, args.output), args.output)
    if report["h1"] == "fail":
        raise CommandError(f"hypothesis H1 violated: Lambda = {ctx.lam!r}", EXIT_INVALID)
    return EXIT_OK


def cmd_certify(args):
    cfg = load_problem(args.config)
    if cfg.f is None:
        raise ConfigError("f", "certify needs a nonlinearity")
    if cfg.envelope is None:
        raise ConfigError("envelope", "certify needs an envelope block")
    num = _numerics(cfg, args)
    ctx = _context(cfg, num)
    taus = None
    analysis = {"lambda": ctx.lam}
    if ctx.h1:
        analysis, b = analysis_report(ctx, num)
        taus = (b.tau1, b.tau2)
    cert = certify(ctx, cfg.f, cfg.envelope, cfg.x_max, grid=args.grid or num.check_grid,
                   h2_grid=num.h2_grid, c1_global=cfg.c1_global, taus=taus)
    report = cert.to_dict()
    report["analysis"] = analysis
    _emit(write_report(report, args.output), args.output)
    return EXIT_OK if cert.verdict else EXIT_CERT_FAIL


def cmd_solve(args):
    cfg = load_problem(args.config)
    num = _numerics(cfg, args)
    ctx = _context(cfg, num)
    ctx.require_h1()
    nodes = solution_grid(ctx, num.grid)
    if cfg.f is not None:
        f = cfg.f
        u, rep = picard_solve(ctx, f, tol=num.tol, max_iter=num.max_iter,
                              damping=num.damping, nodes=nodes)
    elif cfg.h is not None:
        h = cfg.h
        u = solve_linear(ctx, h.source, nodes=nodes)

        def f(s, x):
            return np.broadcast_to(np.asarray(h(t=s, s=s), dtype=float), np.shape(s))
        rep = verify_solution(ctx, f, u)
    else:
        raise ConfigError("f", "solve needs a nonlinearity f or a forcing term h")
    report = rep.to_dict()
    if cfg.envelope is not None and rep.sup_norm <= cfg.envelope.delta:
        report["notes"].append("sup norm does not exceed delta; this may not be the "
                               "solution located by the existence argument")
    report["n_nodes"] = len(u)
    rows = [(float(t), float(v)) for t, v in zip(u.nodes, u.values)]
    csv_text = write_report(rows, args.output, "csv", header=["t", "u"])
    if args.output is None:
        sys.stdout.write(csv_text)
    json_text = write_report(report, args.report)
    if args.report is None:
        sys.stderr.write(json_text)
    if not rep.converged:
        raise CommandError("fixed-point iteration did not converge", EXIT_NONCONVERGED)
    return EXIT_OK


def cmd_greens(args):
    cfg = load_problem(args.config)
    num = _numerics(cfg, args)
    ctx = _context(cfg, num)
    ctx.require_h1()
    t = np.linspace(0.0, 1.0, args.t_points)
    s = np.linspace(0.0, 1.0, args.s_points)
    T, S = np.meshgrid(t, s, indexing="ij")
    T, S = T.ravel(), S.ravel()
    H, G = ctx.H(T, S), ctx.G(T, S)
    Phi = ctx.phi(S)
    rows = zip(T, S, H, G, Phi, ctx.rho(T) * Phi)
    _emit(write_report(list(rows), args.output, "csv",
                       header=["t", "s", "H", "G", "Phi", "rhoPhi"]), args.output)
    return EXIT_OK


def cmd_selftest(args):
    results = run_selftest(cases=args.cases, seed=args.seed)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print(f"selftest: {'all suites passed' if ok else 'FAILURES'} (cases={args.cases}, seed={args.seed})")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _emit(text, output):
    if output is None:
        sys.stdout.write(text)


def _positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracbvp",
        description="Spectral bounds, existence certificates and positive solutions "
                    "for nonlocal Caputo boundary value problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_quad(p):
        p.add_argument("--quad-order", type=_positive_int, dest="quad_order")
        p.add_argument("--quad-panels", type=_positive_int, dest="quad_panels")
        p.add_argument("--quad-tol", type=_positive_float, dest="quad_tol")

    p = sub.add_parser("analyze", help="Lambda, tau1, tau2 and the spectral radius estimate")
    p.add_argument("config")
    p.add_argument("--n", type=_positive_int, help="Nystrom size (default 256)")
    p.add_argument("--output", "-o")
    add_quad(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("certify", help="check H1, H2, C1, C2 and emit a certificate")
    p.add_argument("config")
    p.add_argument("--grid", type=_positive_int, help="samples per axis for C1/C2 (default 200)")
    p.add_argument("--n", type=_positive_int, help="Nystrom size (default 256)")
    p.add_argument("--output", "-o")
    add_quad(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("solve", help="damped fixed-point solve with residual report")
    p.add_argument("config")
    p.add_argument("--tol", type=_positive_float)
    p.add_argument("--max-iter", type=_positive_int, dest="max_iter")
    p.add_argument("--damping", type=_positive_float)
    p.add_argument("--grid", type=_positive_int)
    p.add_argument("--output", "-o", help="CSV file for t,u (default stdout)")
    p.add_argument("--report", help="JSON file for the solve report (default stderr)")
    add_quad(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("greens", help="tabulate H, G, Phi and rho*Phi on a t x s grid")
    p.add_argument("config")
    p.add_argument("--t-points", type=_positive_int, default=21, dest="t_points")
    p.add_argument("--s-points", type=_positive_int, default=21, dest="s_points")
    p.add_argument("--output", "-o")
    add_quad(p)
    p.set_defaults(func=cmd_greens)

    p = sub.add_parser("selftest", help="run the seeded invariant suites")
    p.add_argument("--cases", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"fracbvp: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, SpecError, MeasureError, ExprError, HypothesisError) as exc:
        print(f"fracbvp: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PowerIterationError as exc:
        print(f"fracbvp: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OperatorError as exc:
        print(f"fracbvp: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except OSError as exc:
        print(f"fracbvp: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
