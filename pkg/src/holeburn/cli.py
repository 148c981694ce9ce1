"""Command-line front end: simulate, fit, zeeman tables, fixture generation.

Exit codes are a stable contract: 0 success, 2 input or configuration
error, 3 integration non-convergence, 4 fit failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import csvio, pipeline, synth, zeeman
from .config import ConfigError, load_config
from .fitting import (FitError, fit_exponential, fit_hole_lorentzian,
                      fit_linear_ci, fit_trap_model, hom_linewidth_from_hole)
from .integrator import (ConvergenceError, ScaledSignalParams,
                         refine_until_converged, write_signal_csv)
from .model import BeamGeometry

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_FITFAIL = 4


def _parse_range(text):
    try:
        a, _, b = text.partition(":")
        return int(a), int(b)
    except ValueError:
        raise ValueError(f"range must look like start:stop, got '{text}'") from None


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _noise_from_args(args):
    return synth.NoiseSpec(kind=args.noise, seed=args.seed,
                           gaussian_sigma=getattr(args, "gaussian_sigma", 0.0))


def _report(cfg, command, payload) -> dict:
    return {"command": command, **payload, "config": cfg.to_dict()}


def _cmd_simulate(args):
    cfg = load_config(args.config)
    power = cfg.beam_power if args.power_w is None else args.power_w
    gamma_trap = args.gamma_trap
    if args.t_end < 0:
        raise ValueError("t-end must be nonnegative")
    if args.t_end == 0:
        t_grid = np.array([0.0])
    else:
        t_grid = np.linspace(0.0, args.t_end, args.n_t)

    geom = BeamGeometry.for_material(cfg.material, power=power,
                                     focus_fwhm=cfg.focus_fwhm)
    result = refine_until_converged(t_grid, cfg.material, geom, gamma_trap,
                                    cfg.domain, rel_tol=args.tol)
    scaled = result.scaled(cfg.scaled_params(power))
    write_signal_csv(args.out, t_grid, result.values, scaled)
    print(f"simulate: wrote {args.out} "
          f"({result.domain.n_r}x{result.domain.n_z}x{result.domain.n_delta} grid, "
          f"rel change {result.achieved_rel_change:.2e})")
    return EXIT_OK


def _cmd_fit_trap(args):
    cfg = load_config(args.config)
    curves = []
    for path in args.curves:
        curve = csvio.read_decay_curve(path)
        if curve.power_w is None:
            raise ValueError(f"{path}: curve metadata lacks power_w")
        curves.append(curve)
    result = fit_trap_model(curves, cfg.material, focus_fwhm=cfg.focus_fwhm,
                            domain=cfg.domain, options=cfg.fit)
    if not result.converged:
        raise FitError("trap fit did not converge",
                       diagnostics=result.to_dict())
    report = _report(cfg, "fit trap", {
        "inputs": list(args.curves), **result.to_dict()})
    csvio.write_report(args.out, report)
    print(f"fit trap: gamma_trap = {result.gamma_trap:.4g} /s, "
          f"B = {result.background_b:.4g} counts/W -> {args.out}")
    return EXIT_OK


def _cmd_fit_hole(args):
    cfg = load_config(args.config)
    if args.aom_off == "auto":
        probe = csvio.read_raw_scan(args.scan, aom_off_range=(0, 1))
        aom_off = pipeline.detect_aom_off_range(probe.power_monitor)
    elif args.aom_off:
        aom_off = _parse_range(args.aom_off)
    else:
        aom_off = None
    scan = csvio.read_raw_scan(args.scan, aom_off_range=aom_off)
    subtracted = pipeline.subtract_background(scan)
    normalized = pipeline.normalize_by_power(subtracted)
    if args.treated_out:
        csvio.write_treated_scan(args.treated_out, subtracted, normalized)
    keep = normalized.included
    fit = fit_hole_lorentzian(normalized.freq[keep], normalized.signal[keep])
    payload = {"input": args.scan, **fit.to_dict(),
               "hom_linewidth_hz": hom_linewidth_from_hole(fit.fwhm)}
    csvio.write_report(args.out, _report(cfg, "fit hole", payload))
    print(f"fit hole: fwhm = {fit.fwhm / 1e6:.3g} MHz, "
          f"hom linewidth = {fit.fwhm / 2e6:.3g} MHz -> {args.out}")
    return EXIT_OK


def _cmd_fit_expdecay(args):
    cfg = load_config(args.config)
    t, y, _ = csvio.read_xy(args.series, "wait_time_s", "area")
    fit = fit_exponential(t, y, with_offset=not args.no_offset)
    if not fit.converged:
        raise FitError("exponential fit did not converge",
                       diagnostics=fit.to_dict())
    payload = {"input": args.series, **fit.to_dict()}
    csvio.write_report(args.out, _report(cfg, "fit expdecay", payload))
    print(f"fit expdecay: tau = {fit.tau:.4g} s -> {args.out}")
    return EXIT_OK


def _cmd_fit_linear(args):
    cfg = load_config(args.config)
    x, y, _ = csvio.read_xy(args.points, args.x_column, args.y_column)
    fit = fit_linear_ci(x, y, confidence=args.confidence)
    payload = {"input": args.points, **fit.to_dict()}
    csvio.write_report(args.out, _report(cfg, "fit linear", payload))
    print(f"fit linear: slope = {fit.slope:.4g} +- {fit.slope_ci:.2g} "
          f"({fit.confidence:.0%} CI) -> {args.out}")
    return EXIT_OK


def _cmd_zeeman(args):
    cfg = load_config(args.config)
    deltas = _parse_floats(args.delta_f) if args.delta_f else []
    lines = ["delta_f_hz,b_ground_total_t,b_sum_total_t,b_diff_total_t,"
             "b_ground_applied_t,b_sum_applied_t,b_diff_applied_t"]
    for df in deltas:
        res = zeeman.resonance_fields(df, cfg.zeeman)
        diff_t = "" if res.b_diff_total is None else repr(res.b_diff_total)
        diff_a = "" if res.b_diff_applied is None else repr(res.b_diff_applied)
        lines.append(f"{df!r},{res.b_ground_total!r},{res.b_sum_total!r},"
                     f"{diff_t},{res.b_ground_applied!r},"
                     f"{res.b_sum_applied!r},{diff_a}")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"zeeman: wrote {len(deltas)} rows -> {args.out}")
    return EXIT_OK


def _cmd_gen_decay(args):
    cfg = load_config(args.config)
    noise = _noise_from_args(args)
    t_grid = np.linspace(0.0, args.t_end, args.n_t)
    refine_tol = args.tol if args.tol > 0 else None
    if args.powers:
        powers = _parse_floats(args.powers)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        curves = synth.gen_decay_batch(cfg.material, args.gamma_trap,
                                       cfg.scale_a, cfg.background_b, powers,
                                       t_grid, noise, cfg.focus_fwhm,
                                       cfg.domain, refine_tol=refine_tol)
        for p0, curve in zip(powers, curves):
            path = out_dir / f"decay_{p0 * 1e6:g}uW.csv"
            csvio.write_decay_curve(path, curve)
        print(f"gen decay: wrote {len(powers)} curves -> {out_dir}")
    else:
        power = cfg.beam_power if args.power_w is None else args.power_w
        scale = ScaledSignalParams(scale_a=cfg.scale_a,
                                   background_b=cfg.background_b, power=power)
        curve = synth.gen_decay_curve(cfg.material, args.gamma_trap, scale,
                                      t_grid, noise, cfg.focus_fwhm,
                                      cfg.domain, refine_tol=refine_tol)
        csvio.write_decay_curve(args.out, curve)
        print(f"gen decay: wrote {args.out}")
    return EXIT_OK


def _cmd_gen_holescan(args):
    load_config(args.config)
    noise = _noise_from_args(args)
    freq = np.linspace(args.f_min, args.f_max, args.n_points)
    scan = synth.gen_hole_scan(freq, args.baseline, args.depth, args.center,
                               args.fwhm, args.power_level,
                               _parse_range(args.aom_off),
                               power_slope=args.power_slope,
                               fluor_offset=args.fluor_offset,
                               power_offset=args.power_offset, noise=noise)
    csvio.write_raw_scan(args.out, scan)
    print(f"gen holescan: wrote {args.out}")
    return EXIT_OK


def _cmd_gen_holedecay(args):
    load_config(args.config)
    noise = _noise_from_args(args)
    waits = np.linspace(0.0, args.wait_max, args.n_points)
    areas = synth.gen_hole_decay_series(args.tau, args.offset, waits, noise,
                                        amplitude=args.amplitude)
    csvio.write_xy(args.out, waits, areas, "wait_time_s", "area",
                   meta={"tau_s": args.tau, "offset": args.offset,
                         "amplitude": args.amplitude,
                         "noise_kind": noise.kind, "noise_seed": noise.seed})
    print(f"gen holedecay: wrote {args.out}")
    return EXIT_OK


def _add_noise_args(parser, gaussian=True):
    parser.add_argument("--noise", choices=["none", "poisson", "gaussian"],
                        default="none")
    parser.add_argument("--seed", type=int, default=0)
    if gaussian:
        parser.add_argument("--gaussian-sigma", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holeburn",
        description="Trapping-decay simulation and spectral-hole analysis")
    parser.add_argument("--config", default=None,
                        help="INI config file (defaults when omitted)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the detected decay signal")
    p.add_argument("--power-w", type=float, default=None)
    p.add_argument("--gamma-trap", type=float, default=7e4)
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--n-t", type=int, default=81)
    p.add_argument("--tol", type=float, default=5e-3)
    p.add_argument("--out", default="signal.csv")
    p.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="least-squares fits").add_subparsers(
        dest="fit_command", required=True)

    p = fit.add_parser("trap", help="multi-curve trapping-rate fit")
    p.add_argument("curves", nargs="+", help="decay-curve CSV files")
    p.add_argument("--out", default="trap_fit.json")
    p.set_defaults(func=_cmd_fit_trap)

    p = fit.add_parser("hole", help="treat a raw scan and fit the hole")
    p.add_argument("--scan", required=True)
    p.add_argument("--aom-off", default=None, metavar="START:STOP",
                   help="off-segment indices; 'auto' applies a heuristic "
                        "detection from the power trace")
    p.add_argument("--out", default="hole_fit.json")
    p.add_argument("--treated-out", default=None)
    p.set_defaults(func=_cmd_fit_hole)

    p = fit.add_parser("expdecay", help="exponential hole-lifetime fit")
    p.add_argument("--series", required=True)
    p.add_argument("--no-offset", action="store_true")
    p.add_argument("--out", default="expdecay_fit.json")
    p.set_defaults(func=_cmd_fit_expdecay)

    p = fit.add_parser("linear", help="linear fit with confidence interval")
    p.add_argument("--points", required=True)
    p.add_argument("--x-column", default="x")
    p.add_argument("--y-column", default="y")
    p.add_argument("--confidence", type=float, default=0.80)
    p.add_argument("--out", default="linear_fit.json")
    p.set_defaults(func=_cmd_fit_linear)

    p = sub.add_parser("zeeman", help="resonance-field table")
    p.add_argument("--delta-f", default="",
                   help="comma-separated laser frequency separations [Hz]")
    p.add_argument("--out", default="zeeman.csv")
    p.set_defaults(func=_cmd_zeeman)

    gen = sub.add_parser("gen", help="synthetic fixtures").add_subparsers(
        dest="gen_command", required=True)

    p = gen.add_parser("decay", help="synthetic decay curve(s)")
    p.add_argument("--power-w", type=float, default=None)
    p.add_argument("--powers", default=None,
                   help="comma-separated powers [W] for a batch")
    p.add_argument("--gamma-trap", type=float, default=7e4)
    p.add_argument("--t-end", type=float, default=200.0)
    p.add_argument("--n-t", type=int, default=81)
    p.add_argument("--tol", type=float, default=5e-3,
                   help="grid refinement tolerance (0 skips refinement)")
    p.add_argument("--out", default="decay.csv",
                   help="output file, or directory for a batch")
    _add_noise_args(p)
    p.set_defaults(func=_cmd_gen_decay)

    p = gen.add_parser("holescan", help="synthetic raw hole scan")
    p.add_argument("--f-min", type=float, default=-100e6)
    p.add_argument("--f-max", type=float, default=100e6)
    p.add_argument("--n-points", type=int, default=5000)
    p.add_argument("--baseline", type=float, default=1.0)
    p.add_argument("--depth", type=float, default=0.4)
    p.add_argument("--center", type=float, default=-50e6)
    p.add_argument("--fwhm", type=float, default=6e6)
    p.add_argument("--power-level", type=float, default=1000.0)
    p.add_argument("--power-slope", type=float, default=0.0)
    p.add_argument("--fluor-offset", type=float, default=0.0)
    p.add_argument("--power-offset", type=float, default=0.0)
    p.add_argument("--aom-off", default="0:100", metavar="START:STOP")
    p.add_argument("--out", default="holescan.csv")
    _add_noise_args(p)
    p.set_defaults(func=_cmd_gen_holescan)

    p = gen.add_parser("holedecay", help="synthetic hole-area decay series")
    p.add_argument("--tau", type=float, default=0.072)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--wait-max", type=float, default=0.5)
    p.add_argument("--n-points", type=int, default=25)
    p.add_argument("--out", default="holedecay.csv")
    _add_noise_args(p)
    p.set_defaults(func=_cmd_gen_holedecay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(f"diagnostics: {exc.diagnostics}", file=sys.stderr)
        out = getattr(args, "out", None)
        if out:
            csvio.write_report(out, {"command": args.command,
                                     "error": str(exc),
                                     "diagnostics": exc.diagnostics})
        return EXIT_FITFAIL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
