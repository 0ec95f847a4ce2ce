"""Command-line front end.

Subcommands map one-to-one onto the reproduced results:

    etpa response   molecular response map
    etpa spectrum   single-photon spectra at chosen crystal temperatures
    etpa sweep      eTPA probability versus crystal temperature
    etpa fit        cross sections from measured rate files
    etpa power      power-law exponent of a rate-versus-power file

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import engine, fitting, molecule, source
from .config import ConfigError, load_config
from .units import omega_to_wavelength

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("etpa")


def _temps(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad temperature list {text!r}") from None


def _outdir(args, cfg):
    path = args.out or cfg.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(x):
    return float(f"{x:.9g}")


def cmd_response(args):
    cfg = load_config(args.config)
    model = cfg.molecule
    grid = molecule.response_map(model, cfg.window_nm, cfg.window_nm, cfg.response_n)
    if all(st.D_j == 0 for st in model.states):
        log.warning("all dipole products are zero; the response map is identically zero")
    wi, ws = molecule.response_argmax(grid)
    out = _outdir(args, cfg)
    grid.to_csv(os.path.join(out, "response_map.csv"))
    lam_pump = omega_to_wavelength(cfg.pump.omega_p0)
    lam_sum = omega_to_wavelength(wi + ws)
    step = grid.omega_i_axis.spacing
    _write_json(
        os.path.join(out, "response_map.json"),
        {
            "max_lambda_i_nm": _fmt(omega_to_wavelength(wi)),
            "max_lambda_s_nm": _fmt(omega_to_wavelength(ws)),
            "max_abs_L": _fmt(float(np.abs(grid.values).max())),
            "max_sum_frequency_lambda_nm": _fmt(lam_sum),
            "pump_sum_line_lambda_nm": _fmt(lam_pump),
            "max_on_pump_line": bool(abs(wi + ws - cfg.pump.omega_p0) <= step),
        },
    )
    print(f"response_max_lambda_nm={omega_to_wavelength(wi):.3f},{omega_to_wavelength(ws):.3f}")
    print(f"response_max_sum_lambda_nm={lam_sum:.3f} pump_lambda_nm={lam_pump:.3f}")
    return EXIT_OK


def cmd_spectrum(args):
    cfg = load_config(args.config)
    temps = args.temps if args.temps else cfg.spectrum_temperatures
    if not temps:
        raise ConfigError("spectrum.temperatures_c: no temperatures given")
    for T in temps:
        cfg.check_temperature(T, "--temps")
    out = _outdir(args, cfg)
    for T in temps:
        jsa = source.build_jsa(cfg.crystal, cfg.pump, T, cfg.grid)
        spec = source.single_photon_spectrum(jsa, coherent=cfg.coherent)
        name = f"spectrum_T{T:.2f}C.csv"
        spec.to_csv(os.path.join(out, name))
        peaks = ",".join(f"{p:.2f}" for p in source.spectrum_peaks(spec))
        print(f"T_C={T:.2f} peaks_nm={peaks} width10_nm={source.spectrum_width(spec):.2f} file={name}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    temps = np.asarray(args.temps, dtype=float) if args.temps else cfg.sweep_temperatures
    if np.any(np.diff(temps) <= 0):
        raise ConfigError("--temps: temperatures must be strictly increasing")
    for T in temps[[0, -1]]:
        cfg.check_temperature(T, "sweep temperature")
    refine = cfg.refine if args.refine is None else args.refine
    out = _outdir(args, cfg)
    model, crystal, pump, grid = cfg.molecule, cfg.crystal, cfg.pump, cfg.grid

    if args.convergence_check:
        max_rel, curve, _ = engine.convergence_check(model, crystal, pump, temps, grid, cfg.workers)
    else:
        curve = engine.sweep_models([model], crystal, pump, temps, grid, cfg.workers)[0]
        max_rel = None

    refined = bool(refine and len(curve) >= 3)
    t_opt = engine.optimal_temperature(curve, refine=refined)
    meta = {"optimal_T_C": _fmt(t_opt), "refined": refined, "temperatures": len(curve)}
    try:
        meta["detuning_penalty"] = _fmt(
            engine.detuning_penalty(model, crystal, pump, t_opt, grid, cfg.window_nm, cfg.response_n)
        )
    except ZeroDivisionError:
        meta["detuning_penalty"] = None
    if max_rel is not None:
        meta["convergence_max_rel_change"] = _fmt(max_rel)
        meta["convergence_grid"] = grid.doubled().parameters()

    curve.to_csv(os.path.join(out, "probability_curve.csv"))
    curve.write_metadata(
        os.path.join(out, "probability_curve.json"),
        molecule=model.parameters(),
        crystal=crystal.parameters(),
        pump=pump.parameters(),
        **meta,
    )
    print(f"optimal_T_C={t_opt:.4f}")
    if meta["detuning_penalty"] is not None:
        print(f"detuning_penalty={meta['detuning_penalty']:.4f}")
    if max_rel is not None:
        print(f"convergence_max_rel_change={max_rel:.3e}")
        if max_rel >= 5e-3:
            log.warning("grid doubling changed P by %.3g%% (limit 0.5%%)", 100 * max_rel)
    return EXIT_OK


def _load_rate_dataset(path, T, cfg):
    rf = fitting.read_rate_csv(path)
    temperature = rf.temperature if rf.temperature is not None else T
    if temperature is None:
        raise fitting.DataError(f"{path}: no '# temperature_C = ...' tag and no --temps entry")
    c = cfg.correction
    solv = fitting.correct_rates([r.r_solv for r in rf.records], c["dark_solv_cps"], c["efficiency_solv"])
    samp = fitting.correct_rates([r.r_samp for r in rf.records], c["dark_samp_cps"], c["efficiency_samp"])
    try:
        records = [replace(r, r_solv=float(a), r_samp=float(b)) for r, a, b in zip(rf.records, solv, samp)]
    except fitting.DataError as exc:
        raise fitting.DataError(f"{path}: after dark/efficiency correction: {exc}") from None
    return fitting.RateDataset(records, cfg.concentration, cfg.path_length, float(temperature))


def cmd_fit(args):
    cfg = load_config(args.config)
    if args.concentration is not None:
        cfg.concentration = args.concentration
    if args.path_length is not None:
        cfg.path_length = args.path_length
    if not (cfg.concentration > 0 and cfg.path_length > 0):
        raise ConfigError("sample: concentration and path length must be > 0")
    if args.temps and len(args.temps) != len(args.files):
        raise ConfigError(f"--temps: {len(args.temps)} temperatures for {len(args.files)} files")
    temps = args.temps or (None,) * len(args.files)

    results = []
    for path, T in zip(args.files, temps):
        ds = _load_rate_dataset(path, T, cfg)
        try:
            results.append(fitting.fit_dataset(ds, through_origin=args.through_origin))
        except ValueError as exc:
            raise fitting.DataError(f"{path}: {exc}") from None
    results.sort(key=lambda r: r.temperature)

    out = _outdir(args, cfg)
    fitting.write_report(os.path.join(out, "fit_report.csv"), results)
    for r in results:
        print(f"T_C={r.temperature:.2f} slope={r.slope:.8g} stderr={r.slope_stderr:.3g} sigma_e_cm2={r.sigma_e:.4g}")
    if len(results) >= 4:
        coef = fitting.cubic_trend([(r.temperature, r.sigma_e) for r in results])
        with open(os.path.join(out, "cubic_trend.csv"), "w") as fh:
            fh.write("c3,c2,c1,c0\n")
            fh.write(",".join(f"{v:.9g}" for v in coef) + "\n")
        print("cubic_trend=" + ",".join(f"{v:.9g}" for v in coef))
    else:
        print(f"note: cubic trend skipped (needs >= 4 temperatures, got {len(results)})", file=sys.stderr)
    return EXIT_OK


def cmd_power(args):
    pairs = fitting.read_xy_csv(args.file)
    try:
        res = fitting.power_law_exponent(pairs)
    except ValueError as exc:
        raise fitting.DataError(f"{args.file}: {exc}") from None
    print(f"exponent={res.exponent:.6f}")
    print(f"exponent_stderr={res.exponent_stderr:.6g}")
    print(f"amplitude={res.amplitude:.9g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="etpa", description="Entangled two-photon absorption toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration (defaults to the shipped Nile Red / PPLN set)")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("response", parents=[common], help="molecular response map")
    s.set_defaults(func=cmd_response)

    s = sub.add_parser("spectrum", parents=[common], help="single-photon spectra")
    s.add_argument("--temps", type=_temps, help="comma-separated crystal temperatures in degC")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("sweep", parents=[common], help="probability versus crystal temperature")
    s.add_argument("--temps", type=_temps, help="explicit temperatures instead of the configured range")
    s.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None,
                   help="parabolic sub-step refinement of the optimum")
    s.add_argument("--convergence-check", action="store_true", help="repeat on doubled grids and report the change")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fit", parents=[common], help="cross sections from rate files")
    s.add_argument("files", nargs="+")
    s.add_argument("--temps", type=_temps, help="crystal temperature per file when files carry no tag")
    s.add_argument("--through-origin", action="store_true", help="fit slope with zero intercept")
    s.add_argument("--concentration", type=float, help="mol/L")
    s.add_argument("--path-length", type=float, help="mm")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("power", help="power-law exponent of (power, rate) data")
    s.add_argument("file")
    s.set_defaults(func=cmd_power)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except fitting.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except source.DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
