"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a usage
error.  A summary goes to stdout; CSV/JSON/plot data go to the output
directory (``--out``, overridden by ``$RING_CRYSTAL_OUT``).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analytic import ModulusSolveError
from .harness import (
    ORDERING_SLACK,
    HarnessError,
    aligned_profile,
    analytic_consistency,
    asymptotic_check,
    flux_ramp_experiment,
    flux_sweep,
    ground_state_point,
    lump_scaling_scan,
    parse_range,
    threshold_scan,
    write_plot_data,
    write_table,
)
from .solver import NormDriftError, SolverConfig, SolverDivergence

_DEFAULTS = SolverConfig()
THRESHOLD_DTAU = 1e-2


def _range_arg(text):
    try:
        values = parse_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not values:
        raise argparse.ArgumentTypeError("empty range")
    return values


def _add_solver_flags(p, dtau=_DEFAULTS.dtau):
    p.add_argument("--n-points", type=int, default=_DEFAULTS.n_points, help="grid points (power of two >= 64)")
    p.add_argument("--dtau", type=float, default=dtau, help="imaginary-time step")
    p.add_argument("--dt", type=float, default=_DEFAULTS.dt, help="real-time step")
    p.add_argument("--seed", type=int, default=_DEFAULTS.seed, help="seed of the initial noise")
    p.add_argument("--residual-tol", type=float, default=_DEFAULTS.residual_tol, help="stationarity tolerance")
    p.add_argument("--max-iters", type=int, default=_DEFAULTS.max_iters, help="imaginary-time step cap")


def _add_output_flags(p):
    p.add_argument("--out", default="out", help="output directory ($RING_CRYSTAL_OUT overrides)")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--timing", action="store_true", help="record wall times and a timestamp (artifacts no longer byte-stable)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="ring-crystal", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("ground-state", help="imaginary-time ground state at one (lambda, alpha)", formatter_class=fmt)
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="coupling")
    p.add_argument("--alpha", type=float, default=0.0, help="flux")
    _add_solver_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("flux-sweep", help="ground-state energy across fluxes", formatter_class=fmt)
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="coupling")
    p.add_argument("--alphas", type=_range_arg, default="0:0.5:9", help="fluxes, start:stop:count or a,b,c")
    _add_solver_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("threshold", help="lump-formation coupling at zero flux", formatter_class=fmt)
    p.add_argument("--lambdas", type=_range_arg, default="1.2:2.0:5", help="scan couplings bracketing pi/2")
    p.add_argument("--lambda-tol", type=float, default=0.05, help="final bracket width")
    _add_solver_flags(p, dtau=THRESHOLD_DTAU)
    _add_output_flags(p)

    p = sub.add_parser("asymptotic", help="eps(1/2) - eps(0) against the strong-coupling law", formatter_class=fmt)
    p.add_argument("--lambdas", type=_range_arg, default="5:7:3", help="couplings in [5, 8]")
    _add_solver_flags(p)
    p.set_defaults(residual_tol=1e-11)
    _add_output_flags(p)

    p = sub.add_parser("scaling", help="lump width and antipode amplitude against coupling", formatter_class=fmt)
    p.add_argument("--lambdas", type=_range_arg, default="4:10:7", help="couplings in [4, 12]")
    _add_solver_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("ramp", help="drive the zero-flux lump with a flux ramp", formatter_class=fmt)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0, help="coupling (> pi/2)")
    p.add_argument("--alpha", type=float, default=0.3, help="final flux, |alpha| <= 1/2")
    p.add_argument("--t-ramp", type=float, default=1.0, help="ramp duration")
    p.add_argument("--t-final", type=float, default=10.0, help="total evolution time")
    _add_solver_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("analytic-check", help="self-consistency of the closed-form half-flux state", formatter_class=fmt)
    p.add_argument("--lambda", dest="lams", type=_range_arg, required=True, help="coupling(s)")
    p.add_argument("--n-points", type=int, default=_DEFAULTS.n_points, help="sampling grid")
    _add_output_flags(p)
    return parser


def _config(args, **extra) -> SolverConfig:
    return SolverConfig(
        n_points=args.n_points,
        dtau=args.dtau,
        dt=args.dt,
        seed=args.seed,
        residual_tol=args.residual_tol,
        max_iters=args.max_iters,
        **extra,
    )


def _echo(args, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    d = {k: v for k, v in vars(args).items() if k not in ("out", "jobs", "timing")}
    d["version"] = __version__
    with open(out / f"{args.command}.config.json", "w") as fh:
        json.dump(d, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _Checks:
    def __init__(self):
        self.failed = []

    def __call__(self, name: str, ok: bool, detail: str) -> None:
        print(f"  [{'ok' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            self.failed.append(name)


def _cmd_ground_state(args, out, check):
    cfg = _config(args)
    state, table = ground_state_point(args.lam, args.alpha, cfg)
    rec = table.records[0]
    print(f"lambda={args.lam:g} alpha={args.alpha:g} N={cfg.n_points}")
    print(f"  eps      = {state.eps:.15g}")
    print(f"  mu       = {state.mu:.15g}")
    print(f"  residual = {state.residual:.3e}")
    print(f"  contrast = {state.contrast:.6g}")
    check("converged", state.converged, f"{state.iterations} steps")
    check("below Wilczek branch", rec.eps_numeric <= rec.eps_wilczek + ORDERING_SLACK,
          f"margin {rec.eps_wilczek - rec.eps_numeric:.3e}")
    if rec.eps_analytic_half_flux is not None:
        diff = rec.eps_numeric - rec.eps_analytic_half_flux
        check("matches closed form", abs(diff) <= 1e-8, f"difference {diff:.3e}")
    write_table(table, out, "ground_state", args.timing)
    phi, dens = aligned_profile(state.field)
    write_plot_data(out / "ground_state_density.dat", phi, dens, "phi density (peak at pi)")


def _cmd_flux_sweep(args, out, check):
    table = flux_sweep(args.lam, args.alphas, _config(args), args.jobs)
    print(f"lambda={args.lam:g}: {len(table.records)} fluxes")
    print(f"  {'alpha':>8} {'eps_numeric':>20} {'eps_wilczek':>20} {'eps_uniform':>20}")
    for r in table.records:
        flag = "" if r.converged else "  (unconverged)"
        print(f"  {r.alpha:8.4f} {r.eps_numeric:20.12f} {r.eps_wilczek:20.12f} {r.eps_uniform_best:20.12f}{flag}")
    bad = [r.alpha for r in table.records if not r.converged]
    check("all converged", not bad, f"unconverged at {bad}" if bad else "yes")
    if table.converged():
        margin = table.wilczek_margin()
        check("Wilczek branch never below numeric", margin >= -ORDERING_SLACK, f"min margin {margin:.3e}")
    write_table(table, out, "flux_sweep", args.timing)
    write_plot_data(out / "flux_sweep_eps.dat", [r.alpha for r in table.records],
                    [r.eps_numeric for r in table.records], "alpha eps_numeric")
    write_plot_data(out / "flux_sweep_wilczek.dat", [r.alpha for r in table.records],
                    [r.eps_wilczek for r in table.records], "alpha eps_wilczek")


def _cmd_threshold(args, out, check):
    res = threshold_scan(args.lambdas, _config(args), args.lambda_tol)
    for lam, c in res.contrasts.items():
        print(f"  lambda={lam:.6f} contrast={c:.3e}")
    print(f"lambda_c estimate = {res.lambda_c_estimate:.6f} (bracket {res.bracket[0]:.6f}, {res.bracket[1]:.6f})")
    check("estimate within pi/2 +- 0.05", abs(res.error) <= 0.05, f"error {res.error:+.4f}")
    write_table(res.table, out, "threshold", args.timing)
    write_plot_data(out / "threshold_contrast.dat", list(res.contrasts), list(res.contrasts.values()),
                    "lambda density_contrast")


def _cmd_asymptotic(args, out, check):
    rep = asymptotic_check(args.lambdas, _config(args), args.jobs)
    print(f"  {'lambda':>6} {'measured':>14} {'solver-only':>14} {'formula':>14} {'ratio':>9}")
    for lam, m, n, f, r, ok in zip(rep.lambdas, rep.delta_measured, rep.delta_numeric,
                                   rep.delta_formula, rep.ratios, rep.usable):
        print(f"  {lam:6.2f} {m:14.6e} {n:14.6e} {f:14.6e} {r:9.4f}{'' if ok else '  (below noise floor)'}")
    usable = [m for m, ok in zip(rep.delta_measured, rep.usable) if ok]
    check("usable points", bool(usable), f"{len(usable)} of {len(rep.lambdas)}")
    check("measured delta negative (printed law)", bool(usable) and all(m < 0 for m in usable),
          f"signs {['-' if m < 0 else '+' for m in usable]}")
    for a, b, s, f in rep.slopes:
        check(f"log-slope {a:g}->{b:g}", abs(s / f - 1) <= 0.1, f"measured {s:.4f}, formula {f:.4f}")
    for lam, r, ok in zip(rep.lambdas, rep.ratios, rep.usable):
        if ok:
            check(f"ratio at {lam:g} in [0.5, 2]", 0.5 <= r <= 2.0, f"{r:.4f}")
    write_table(rep.table, out, "asymptotic", args.timing)
    write_plot_data(out / "asymptotic_measured.dat", rep.lambdas, rep.delta_measured, "lambda delta_eps")
    write_plot_data(out / "asymptotic_formula.dat", rep.lambdas, rep.delta_formula, "lambda delta_eps_formula")


def _cmd_scaling(args, out, check):
    rep = lump_scaling_scan(args.lambdas, _config(args))
    for lam, n, w, a, ok in zip(rep.lambdas, rep.n_points, rep.fwhm, rep.antipode, rep.resolved):
        print(f"  lambda={lam:6.2f} N={n:5d} fwhm={w:.6f} antipode={a:.6e}{'' if ok else '  (unresolved)'}")
    for lam, r in rep.fwhm_ratios.items():
        check(f"fwhm({2 * lam:g})/fwhm({lam:g}) = 0.5 +- 10%", abs(r / 0.5 - 1) <= 0.1, f"{r:.4f}")
    target = -math.pi / 2
    check("antipode slope = -pi/2 +- 5%", abs(rep.slope / target - 1) <= 0.05,
          f"{rep.slope:.5f} (without the sqrt(lambda) term {rep.raw_slope:.5f})")
    pref = math.exp(rep.intercept)
    check("prefactor within a factor 2 of 2", 1.0 <= pref <= 4.0, f"{pref:.4f}")
    write_table(rep.table, out, "scaling", args.timing)
    write_plot_data(out / "scaling_fwhm.dat", rep.lambdas, rep.fwhm, "lambda fwhm")
    write_plot_data(out / "scaling_antipode.dat", rep.lambdas, rep.antipode, "lambda antipode_amplitude")


def _cmd_ramp(args, out, check):
    rep = flux_ramp_experiment(args.lam, args.alpha, args.t_ramp, _config(args), t_final=args.t_final)
    final_p = float(rep.kinetic_momentum[-1])
    print(f"lambda={args.lam:g} alpha_final={args.alpha:g} t_ramp={args.t_ramp:g}")
    print(f"  omega_fit          = {rep.omega_fit:.10f} (expected {rep.omega_expected:.10f})")
    print(f"  kinetic momentum   = {final_p:.10f}")
    print(f"  canonical momentum = {float(rep.angular_momentum[-1]):.3e}")
    if args.alpha == 0:
        check("lump at rest", abs(rep.omega_fit) <= 1e-6, f"omega {rep.omega_fit:.3e}")
    else:
        err = rep.omega_fit / rep.omega_expected - 1
        check("omega_fit = -alpha_final +- 10%", abs(err) <= 0.1, f"relative error {err:+.3e}")
        err = final_p / rep.omega_expected - 1
        check("kinetic momentum = -alpha_final +- 5%", abs(err) <= 0.05, f"relative error {err:+.3e}")
    meta = dict(rep.metadata, omega_fit=rep.omega_fit, omega_expected=rep.omega_expected)
    with open(out / "ramp.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_plot_data(out / "ramp_centroid.dat", rep.times, rep.centroid, "t centroid_angle_unwrapped")
    write_plot_data(out / "ramp_kinetic_momentum.dat", rep.times, rep.kinetic_momentum, "t kinetic_momentum")
    write_plot_data(out / "ramp_alpha.dat", rep.times, rep.alpha, "t alpha")


def _cmd_analytic_check(args, out, check):
    rows = []
    for lam in args.lams:
        d = analytic_consistency(lam, args.n_points)
        rec = d["record"]
        print(f"lambda={lam:g}: k={rec.modulus.k:.15g} kc={rec.modulus.kc:.6e} mu={rec.mu:.15g} eps={rec.eps:.15g}")
        check("modulus equation", abs(d["modulus_residual"]) <= 1e-12, f"{d['modulus_residual']:.2e}")
        check("norm", abs(d["norm_error"]) <= 1e-10, f"{d['norm_error']:.2e}")
        check("eps = mu + lam/2 int|psi|^4", abs(d["identity_error"]) <= 1e-8, f"{d['identity_error']:.2e}")
        rows.append({"lambda": lam, "k": rec.modulus.k, "kc": rec.modulus.kc, "K": rec.bigK, "E": rec.bigE,
                     "mu": rec.mu, "eps": rec.eps, "modulus_residual": d["modulus_residual"],
                     "norm_error": d["norm_error"], "identity_error": d["identity_error"]})
    with open(out / "analytic_check.json", "w") as fh:
        json.dump({"version": __version__, "n_points": args.n_points, "rows": rows}, fh, indent=2, sort_keys=True)
        fh.write("\n")


_COMMANDS = {
    "ground-state": _cmd_ground_state,
    "flux-sweep": _cmd_flux_sweep,
    "threshold": _cmd_threshold,
    "asymptotic": _cmd_asymptotic,
    "scaling": _cmd_scaling,
    "ramp": _cmd_ramp,
    "analytic-check": _cmd_analytic_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on bad flags
    out = Path(os.environ.get("RING_CRYSTAL_OUT") or args.out)
    check = _Checks()
    try:
        _echo(args, out)
        _COMMANDS[args.command](args, out, check)
    except (ValueError, ModulusSolveError) as exc:
        print(f"ring-crystal {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (HarnessError, SolverDivergence, NormDriftError) as exc:
        print(f"ring-crystal {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    if check.failed:
        print(f"ring-crystal {args.command}: {len(check.failed)} check(s) failed: {', '.join(check.failed)}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
