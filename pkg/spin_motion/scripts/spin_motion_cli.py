import argparse
import logging
import sys
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_PARSE = 3

FREQUENCY_PARAMS = ("f1", "f2", "rabi")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser exiting with the usage code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _setup_logging(debug):
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s]: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    logger.setLevel(level)
    logging.getLogger("spin_motion").setLevel(level)


def _parse_bound(text):
    try:
        name, span = text.split("=", 1)
        lo, hi = span.split(":", 1)
        return name.strip(), (float(lo), float(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"invalid bound {text!r}, expected name=lo:hi"
        ) from None


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=str,
        default=None,
        help="Run configuration file (flat 'key = value' lines) overriding the defaults.",
    )
    common.add_argument("--seed", type=int, default=None, help="Seed of synthetic shots.")
    common.add_argument(
        "--shots", type=int, default=None, help="Measurements per point, 0 for theory only."
    )
    common.add_argument("--out", type=str, default=None, help="Output file or folder.")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument(
        "--n-workers", type=int, default=None, help="Number of dask threads to use."
    )
    common.add_argument("--debug", action="store_true", default=False)
    return common


def build_parser():
    parser = _Parser(
        prog="spin_motion",
        description="Gradient-induced spin-motion coupling of trapped ions: "
        "parameters, spectra, force scans, fits and self-checks.",
    )
    parser.add_argument("-v", "--version", action="store_true", help="Print version")
    common = _common_parser()
    sub = parser.add_subparsers(dest="command")

    sub.add_parser(
        "params", parents=[common], help="Print the derived trap and coupling parameters."
    )

    reproduce = sub.add_parser(
        "reproduce", parents=[common], help="Write the theory curves of a reference measurement."
    )
    reproduce.add_argument("figure", choices=["fig3", "fig4", "fig5"])

    sub.add_parser(
        "scan", parents=[common], help="Run the frequency, detuning or time scan of the config."
    )

    fit = sub.add_parser("fit", parents=[common], help="Fit a model to x,p,sigma data.")
    fit.add_argument("data", type=str, help="CSV file, x in Hz.")
    fit.add_argument(
        "--model", choices=["sideband", "two_ion", "detuning"], default="sideband"
    )
    fit.add_argument(
        "--bound",
        action="append",
        type=_parse_bound,
        default=[],
        help="Free parameter and its bounds, name=lo:hi (f1, f2, rabi in Hz). Repeatable.",
    )
    fit.add_argument(
        "--observable", choices=["sum", "at_least_one"], default="sum", help="two_ion model only."
    )

    oracle = sub.add_parser(
        "oracle-check", parents=[common], help="Run the closed-form versus numerics suites."
    )
    oracle.add_argument("--profile", type=str, default="default")
    oracle.add_argument(
        "--tolerance", type=float, default=None, help="Override the integrator tolerance."
    )
    return parser


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {out}")


def _n_workers(args, config):
    return args.n_workers if args.n_workers is not None else int(config.get("n_workers", 1))


def _eta_eff(run, species, trap):
    from spin_motion.trap_params import effective_lamb_dicke

    return run.eta_eff if run.eta_eff is not None else effective_lamb_dicke(species, trap)


def _trap(run):
    from spin_motion.tools import hz_to_angular
    from spin_motion.trap_params import TrapEnvironment

    return TrapEnvironment(
        nu_z=hz_to_angular(run.nu_z_hz), gradient=run.gradient_t_per_m
    )


def cmd_params(args, run, config):
    from spin_motion.io_tools import write_json
    from spin_motion.tools import angular_to_hz, hz_to_angular, resolve_species
    from spin_motion.trap_params import (
        crosstalk_bound,
        derived_quantities,
        gradient_from_splitting,
    )

    species = resolve_species(run.species)
    trap = _trap(run)
    wavelength = None if run.wavelength_nm is None else run.wavelength_nm * 1e-9
    derived = derived_quantities(species, trap, wavelength)
    splitting = derived.predicted_splitting
    report = {
        "species": species.label,
        "z0_m": derived.z0,
        "eta_eff": derived.eta_eff,
        "eta_laser": derived.eta_laser,
        "ion_separation_m": derived.ion_separation,
        "predicted_splitting_rad_s": splitting,
        "predicted_splitting_hz": None if splitting is None else angular_to_hz(splitting),
        "gradient_round_trip_t_per_m": None,
        "crosstalk_bound": None,
    }
    if splitting:
        report["gradient_round_trip_t_per_m"] = gradient_from_splitting(
            species, splitting, derived.ion_separation
        )
        report["crosstalk_bound"] = crosstalk_bound(hz_to_angular(run.rabi_hz), splitting)
    else:
        logger.info("No splitting without a gradient: crosstalk bound not defined")

    if args.format == "json":
        _emit(write_json(report), args.out)
    else:
        import pandas as pd

        df = pd.DataFrame({"quantity": list(report), "value": list(report.values())})
        if args.format == "csv":
            text = df.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        else:
            text = "".join(f"{k} = {v}\n" for k, v in report.items())
        _emit(text, args.out)
    return EXIT_OK


def _write_scan(result, path, fmt, x_unit="hz"):
    from spin_motion.io_tools import scan_payload, write_json, write_scan_csv

    if fmt == "json":
        write_json(scan_payload(result, x_unit), path.with_suffix(".json"))
    else:
        write_scan_csv(result, path.with_suffix(".csv"), x_unit=x_unit)


def cmd_reproduce(args, run, config):
    from spin_motion import presets
    from spin_motion.io_tools import write_detuning_csv, write_trajectory_csv
    from spin_motion.ms_dynamics import phase_space_insets, trajectory
    from spin_motion.spectroscopy import simulate_shots

    settings = config.get("reproduce", {})
    shots = args.shots if args.shots is not None else settings.get("shots", presets.SHOTS)
    seed = args.seed if args.seed is not None else settings.get("seed", 0)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = args.format or "csv"
    figure = args.figure

    if figure == "fig5":
        theory = presets.fig5_theory(parallel=_n_workers(args, config) > 1)
    else:
        theory = presets.theory_curve(figure)
    _write_scan(theory, out_dir / f"{figure}_theory", fmt)
    if shots > 0:
        _write_scan(simulate_shots(theory, shots, seed), out_dir / f"{figure}_shots", fmt)

    if figure == "fig5":
        write_detuning_csv(theory, out_dir / "fig5_scan.csv")
        loop = presets.fig5_drive(presets.fig5_loop_detunings(1)[-1])
        write_trajectory_csv(trajectory(loop, presets.FIG5_ETA), out_dir / "fig5_trajectory.csv")
        insets = phase_space_insets(
            presets.fig5_drive(), presets.FIG5_ETA, presets.fig5_loop_detunings(2) / 2
        )
        insets.to_netcdf(out_dir / "fig5_insets.nc", engine="scipy")
    logger.info(f"{figure} written to {out_dir}")
    return EXIT_OK


def _scan_grid(run):
    from spin_motion.tools import hz_to_angular, us_to_s

    grid = np.linspace(run.scan_start, run.scan_stop, run.scan_points)
    if run.scan_kind == "time":
        return us_to_s(grid)
    return hz_to_angular(grid)


def cmd_scan(args, run, config):
    from spin_motion.io_tools import (
        FLOAT_FORMAT,
        scan_frame,
        scan_payload,
        write_detuning_csv,
        write_json,
        write_scan_csv,
    )
    from spin_motion.ms_dynamics import DriveConfig, detuning_scan, time_scan
    from spin_motion.spectroscopy import LineshapeModel, sideband_spectrum, simulate_shots
    from spin_motion.tools import hz_to_angular, resolve_species, us_to_s

    species = resolve_species(run.species)
    trap = _trap(run)
    eta = _eta_eff(run, species, trap)
    grid = _scan_grid(run)
    rabi = hz_to_angular(run.rabi_hz)
    duration = us_to_s(run.duration_us)

    if run.scan_kind == "frequency":
        model = LineshapeModel(
            carrier_freqs=tuple(hz_to_angular(f) for f in run.carrier_freqs_hz),
            rabi=rabi,
            nu_z=trap.nu_z,
            eta_eff=eta,
            nbar=run.nbar,
            pulse_time=duration,
            include_sidebands=run.include_sidebands,
            debye_waller=run.debye_waller,
        )
        result = sideband_spectrum(model, grid)
    elif run.scan_kind == "detuning":
        drive = DriveConfig(rabi, 0.0, duration, run.phase_sum)
        result = detuning_scan(
            drive, eta, run.nbar, grid, parallel=_n_workers(args, config) > 1
        )
    else:
        drive = DriveConfig(rabi, hz_to_angular(run.detuning_hz), duration, run.phase_sum)
        result = time_scan(drive, eta, run.nbar, grid)

    if run.shots > 0:
        result = simulate_shots(result, run.shots, run.seed)
    x_unit = "us" if run.scan_kind == "time" else "hz"
    out = args.out or run.out
    if args.format == "json":
        _emit(write_json(scan_payload(result, x_unit)), out)
    elif out is None:
        scan_frame(result, x_unit).to_csv(
            sys.stdout, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        )
    elif run.scan_kind == "detuning" and run.shots == 0:
        write_detuning_csv(result, out)
    else:
        write_scan_csv(result, out, x_unit=x_unit)
    return EXIT_OK


def _fit_curve(args, run):
    from spin_motion.exceptions import ConfigError
    from spin_motion.fitting import DetuningCurve, LineshapeCurve, TwoIonCurve
    from spin_motion.ms_dynamics import DriveConfig
    from spin_motion.spectroscopy import LineshapeModel
    from spin_motion.tools import hz_to_angular, resolve_species, us_to_s

    species = resolve_species(run.species)
    trap = _trap(run)
    eta = _eta_eff(run, species, trap)
    rabi = hz_to_angular(run.rabi_hz)
    duration = us_to_s(run.duration_us)
    freqs = tuple(hz_to_angular(f) for f in run.carrier_freqs_hz)
    if args.model == "sideband":
        return LineshapeCurve(
            LineshapeModel(
                freqs,
                rabi,
                trap.nu_z,
                eta,
                run.nbar,
                duration,
                run.include_sidebands,
                run.debye_waller,
            )
        )
    if args.model == "two_ion":
        if len(freqs) != 2:
            raise ConfigError("the two_ion model needs two carrier_freqs_hz")
        return TwoIonCurve(freqs[0], freqs[1], rabi, duration, args.observable)
    return DetuningCurve(DriveConfig(rabi, 0.0, duration, run.phase_sum), eta, run.nbar)


def cmd_fit(args, run, config):
    from spin_motion.exceptions import ConfigError
    from spin_motion.fitting import fit
    from spin_motion.io_tools import read_scan_csv, write_json
    from spin_motion.tools import angular_to_hz, hz_to_angular

    if not args.bound:
        raise ConfigError("at least one --bound name=lo:hi is required")
    bounds = {}
    for name, (lo, hi) in args.bound:
        if name in FREQUENCY_PARAMS:
            lo, hi = hz_to_angular(lo), hz_to_angular(hi)
        bounds[name] = (lo, hi)
    data = read_scan_csv(args.data)
    curve = _fit_curve(args, run)
    # --shots gives the measurements behind each point of the data file
    shots = args.shots or None
    result = fit(
        curve, bounds, data, parallel=_n_workers(args, config) > 1, seed=args.seed, shots=shots
    )

    report = result.to_dict()
    for name in FREQUENCY_PARAMS:
        if name in report["params"]:
            report["params"][name] = angular_to_hz(report["params"][name])
            report["bounds"][name] = [angular_to_hz(b) for b in report["bounds"][name]]
    report["units"] = {name: "Hz" for name in FREQUENCY_PARAMS if name in bounds}
    report["data"] = args.data
    report["shots"] = shots
    if not result.converged:
        logger.warning("Fit did not converge; see 'converged' in the report")
    logger.info(f"Fitted {report['params']} (chi2 = {result.residual:.6g})")
    _emit(write_json(report), args.out)
    return EXIT_OK


def cmd_oracle_check(args, run, config):
    from spin_motion.io_tools import write_json
    from spin_motion.oracle import resolve_profile, run_oracle

    profile = resolve_profile(config.get("oracle_profiles", {}), args.profile, args.tolerance)
    profile["n_workers"] = _n_workers(args, config)
    report = run_oracle(profile)
    _emit(write_json(report), args.out)
    if not report["passed"]:
        logger.error(f"Failing invariants: {', '.join(report['failed'])}")
        return EXIT_NUMERIC
    logger.info("All oracle suites passed")
    return EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "reproduce": cmd_reproduce,
    "scan": cmd_scan,
    "fit": cmd_fit,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    _setup_logging(getattr(args, "debug", False))

    from spin_motion import __version__

    if args.version:
        print(__version__)
        sys.exit(EXIT_OK)
    if args.command is None:
        parser.error("a subcommand is required")

    from spin_motion.exceptions import (
        ConfigError,
        DomainError,
        IntegrationError,
        ParseError,
        TruncationError,
    )
    from spin_motion.tools import load_config, load_run_config

    try:
        config = load_config()
        run = load_run_config(args.config, seed=args.seed, shots=args.shots)
        code = COMMANDS[args.command](args, run, config)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        code = EXIT_USAGE
    except ParseError as exc:
        logger.error(f"Parse error: {exc}")
        code = EXIT_PARSE
    except (DomainError, TruncationError, IntegrationError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        code = EXIT_NUMERIC
    sys.exit(code)
