"""Command-line front end: simulation, surfaces, inversion, fitting, validation.

Every command writes a deterministic JSON (or CSV) payload: identical
arguments and input files give byte-identical output, so results can be
diffed across runs.  Exit codes: 0 ok, 2 usage, 3 infeasible domain,
4 I/O, 5 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    NO_BACKGROUND,
    TRACE_ROLES,
    PowerSweep,
    fit_noise_vs_power,
    read_traces,
    slope_ratio_db,
    squeezing_spectrum,
)
from .calibration import correct_for_detection, invert_observables
from .errors import (
    ConvergenceError,
    DataFormatError,
    InfeasibleObservablesError,
    NegativePowerError,
    NoInteriorOptimumError,
    TruncationError,
    UnphysicalMeasurementError,
)
from .fock import DEFAULT_LEAK_TOL, oracle_chain
from .medium import (
    DEFAULT_SEED_PHOTONS,
    DEFAULT_STAGES,
    DetectionParams,
    MediumParams,
    SurfaceSpec,
    reduced_photon_stats,
    simulate_twin_beams,
    squeezing_surface,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4
EXIT_VALIDATION = 5

#: Contour levels (dB) stamped into surface sidecars, +4 down to -8 in 2 dB steps.
CONTOUR_LEVELS_DB = (4.0, 2.0, 0.0, -2.0, -4.0, -6.0, -8.0)

#: Relative agreement demanded between the Gaussian engine and the Fock oracle.
CROSS_ENGINE_TOL = 1e-6

#: (gain, transmission, stages, seed_photons) grids for `validate`.
CROSS_ENGINE_GRID_QUICK = tuple(
    (g, t, n, s)
    for (g, t, n) in ((1.5, 1.0, 1), (1.5, 0.9, 2), (2.0, 0.8, 1), (1.2, 1.0, 3))
    for s in (0.0, 1.0)
)
CROSS_ENGINE_GRID_FULL = tuple(
    (g, t, n, s)
    for g in (1.2, 1.5, 2.0)
    for t in (0.7, 0.9, 1.0)
    for n in (1, 3, 5)
    for s in (0.0, 1.0, 4.0)
)


def compare_engines(
    gain: float,
    transmission: float,
    stages: int,
    seed_photons: float,
    leak_tol: float = DEFAULT_LEAK_TOL,
) -> dict:
    """Run one cascade on both engines and report relative discrepancies.

    The comparison floor 1e-8 keeps identically-zero quantities (for
    example the difference variance of a lossless vacuum-seeded pair,
    which both engines produce only up to rounding) from reporting
    meaningless relative errors.
    """
    gauss = reduced_photon_stats(
        MediumParams(gain, transmission, stages), seed_photons=seed_photons
    )
    run = oracle_chain(gain, transmission, stages, seed_photons, leak_tol=leak_tol)

    def rel(x: float, y: float) -> float:
        return abs(x - y) / max(abs(x), abs(y), 1e-8)

    return {
        "gain": gain,
        "transmission": transmission,
        "stages": stages,
        "seed_photons": seed_photons,
        "n_max": run.n_max,
        "leakage": run.leakage,
        "mean_probe": {"gaussian": gauss.mean_a, "oracle": run.stats.mean_a},
        "mean_conjugate": {"gaussian": gauss.mean_b, "oracle": run.stats.mean_b},
        "variance_difference": {"gaussian": gauss.var_diff, "oracle": run.stats.var_diff},
        "rel_error": {
            "mean_probe": rel(gauss.mean_a, run.stats.mean_a),
            "mean_conjugate": rel(gauss.mean_b, run.stats.mean_b),
            "variance_difference": rel(gauss.var_diff, run.stats.var_diff),
        },
    }


def cross_engine_report(
    cases, leak_tol: float = DEFAULT_LEAK_TOL, tolerance: float = CROSS_ENGINE_TOL
) -> dict:
    """Gaussian-versus-oracle agreement over a case grid."""
    results = []
    worst = 0.0
    for gain, transmission, stages, seed in cases:
        entry = compare_engines(gain, transmission, stages, seed, leak_tol)
        case_worst = max(entry["rel_error"].values())
        entry["passed"] = bool(case_worst <= tolerance)
        worst = max(worst, case_worst)
        results.append(entry)
    return {
        "tolerance": tolerance,
        "leak_tol": leak_tol,
        "cases": results,
        "max_rel_error": worst,
        "passed": bool(worst <= tolerance),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinbeam",
        description="Twin-beam amplifier simulation and calibration toolkit.",
        epilog=(
            "exit codes: 0 ok; 2 usage or invalid value; 3 infeasible domain; "
            "4 I/O or malformed data; 5 validation failure"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p, formats=("json", "csv")):
        p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
        p.add_argument("--format", choices=formats, default="json", help="output format")

    def add_medium_flags(p):
        p.add_argument("--n-stages", type=int, default=DEFAULT_STAGES, help="slab count of the cascade")
        p.add_argument(
            "--seed-photons", type=float, default=DEFAULT_SEED_PHOTONS,
            help="mean photon number of the coherent probe seed",
        )

    p = sub.add_parser("simulate", help="squeezing of one medium/detection configuration")
    p.add_argument("--gain", type=float, required=True, help="intrinsic intensity gain G >= 1")
    p.add_argument("--transmission", type=float, required=True, help="intrinsic probe transmission in (0, 1]")
    p.add_argument("--eta", type=float, default=0.9, help="balanced detection efficiency")
    p.add_argument("--loss-first", action="store_true", help="apply loss before gain inside each slab")
    add_medium_flags(p)
    add_output_flags(p)

    p = sub.add_parser("surface", help="squeezing map over a (transmission, gain) grid")
    p.add_argument("--t-min", type=float, default=0.05)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--t-steps", type=int, default=20)
    p.add_argument("--g-min", type=float, default=1.0)
    p.add_argument("--g-max", type=float, default=15.0)
    p.add_argument("--g-steps", type=int, default=15)
    p.add_argument("--eta", type=float, default=0.9)
    add_medium_flags(p)
    p.add_argument("--out", type=Path, required=True, help="long-form CSV (transmission,gain,squeezing_db)")
    p.add_argument("--meta-out", type=Path, default=None, help="JSON sidecar path (default: CSV path with .json suffix)")

    p = sub.add_parser("invert", help="recover (gain, transmission) from measured observables")
    p.add_argument("--geff", type=float, required=True, help="effective probe gain at the medium output")
    p.add_argument("--ratio", type=float, required=True, help="conjugate/probe output power ratio")
    add_medium_flags(p)
    add_output_flags(p)

    p = sub.add_parser("correct", help="remove detection efficiency from a measured squeezing ratio")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--measured-db", type=float, help="measured squeezing in dB")
    group.add_argument("--measured", type=float, help="measured squeezing as a linear ratio")
    p.add_argument("--eta", type=float, default=0.9)
    add_output_flags(p)

    p = sub.add_parser("fit", help="linear noise-versus-power fits and their slope ratio")
    p.add_argument("--input", type=Path, required=True, help="power-sweep CSV")
    p.add_argument("--kind", choices=("sql", "fwm", "both"), default="both")
    add_output_flags(p)

    p = sub.add_parser("spectrum", help="background-corrected squeezing spectrum from traces")
    p.add_argument("--input", type=Path, required=True, help="trace CSV")
    background_choices = TRACE_ROLES + (NO_BACKGROUND,)
    p.add_argument(
        "--diff-background", choices=background_choices, default=None,
        help="trace subtracted from the intensity-difference signal (default: electronic if present)",
    )
    p.add_argument(
        "--sql-background", choices=background_choices, default=None,
        help="trace subtracted from the SQL signal (default: electronic if present)",
    )
    add_output_flags(p)

    p = sub.add_parser("validate", help="check the Gaussian engine against the Fock oracle")
    p.add_argument("--full", action="store_true", help="run the full comparison grid (slow)")
    p.add_argument("--tolerance", type=float, default=CROSS_ENGINE_TOL)
    p.add_argument("--leak-tol", type=float, default=DEFAULT_LEAK_TOL)
    add_output_flags(p, formats=("json",))

    return parser


def _cmd_simulate(args):
    params = MediumParams(args.gain, args.transmission, args.n_stages)
    obs = simulate_twin_beams(
        params, DetectionParams(args.eta), args.seed_photons, args.loss_first
    )
    payload = {
        "command": "simulate",
        "version": __version__,
        "params": {
            "gain": args.gain,
            "transmission": args.transmission,
            "efficiency": args.eta,
            "stages": args.n_stages,
            "seed_photons": args.seed_photons,
            "loss_first": args.loss_first,
        },
        "effective_gain": obs.effective_gain,
        "conjugate_probe_ratio": obs.conjugate_probe_ratio,
        "mean_probe": obs.mean_probe,
        "mean_conjugate": obs.mean_conjugate,
        "variance_difference": obs.variance_difference,
        "squeezing": obs.squeezing,
        "squeezing_db": obs.squeezing_db,
    }
    return payload, None


def _cmd_surface(args):
    spec = SurfaceSpec(args.t_min, args.t_max, args.t_steps, args.g_min, args.g_max, args.g_steps)
    grid = squeezing_surface(spec, DetectionParams(args.eta), args.n_stages, args.seed_photons)

    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["transmission", "gain", "squeezing_db"])
    for i, t in enumerate(grid.transmissions):
        for j, g in enumerate(grid.gains):
            writer.writerow([repr(float(t)), repr(float(g)), repr(float(grid.squeezing_db[i, j]))])
    args.out.write_text(buffer.getvalue())

    t_best, g_best, s_best = grid.minimum()
    sidecar = {
        "command": "surface",
        "version": __version__,
        "csv": args.out.name,
        "transmission": {"min": args.t_min, "max": args.t_max, "steps": args.t_steps},
        "gain": {"min": args.g_min, "max": args.g_max, "steps": args.g_steps},
        "efficiency": args.eta,
        "stages": args.n_stages,
        "seed_photons": args.seed_photons,
        "contour_levels_db": list(CONTOUR_LEVELS_DB),
        "minimum": {"transmission": t_best, "gain": g_best, "squeezing_db": s_best},
    }
    meta_path = args.meta_out if args.meta_out is not None else args.out.with_suffix(".json")
    meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return sidecar, None


def _cmd_invert(args):
    result = invert_observables(args.geff, args.ratio, args.n_stages, args.seed_photons)
    payload = {
        "command": "invert",
        "version": __version__,
        "observables": {"effective_gain": args.geff, "conjugate_probe_ratio": args.ratio},
        "stages": args.n_stages,
        "seed_photons": args.seed_photons,
        "gain": result.gain,
        "transmission": result.transmission,
        "residual": result.residual,
        "iterations": result.iterations,
    }
    return payload, None


def _cmd_correct(args):
    measured = args.measured if args.measured is not None else 10.0 ** (args.measured_db / 10.0)
    result = correct_for_detection(measured, args.eta)
    payload = {
        "command": "correct",
        "version": __version__,
        "efficiency": result.efficiency,
        "measured": result.measured,
        "measured_db": result.measured_db,
        "source": result.source,
        "source_db": result.source_db,
    }
    return payload, None


def _fit_payload(fit):
    return {
        "slope_mw_per_uw": fit.slope,
        "intercept_mw": fit.intercept,
        "intercept_dbm": fit.intercept_dbm,
        "residual_rms_mw": fit.residual_rms,
        "points": fit.points,
    }


def _cmd_fit(args):
    sweep = PowerSweep.from_csv(args.input)
    kinds = ("sql", "fwm") if args.kind == "both" else (args.kind,)
    fits = {kind: fit_noise_vs_power(sweep, kind) for kind in kinds}
    payload = {
        "command": "fit",
        "version": __version__,
        "input": args.input.name,
        "freq_hz": sweep.freq_hz,
        "rbw_hz": sweep.rbw_hz,
        "vbw_hz": sweep.vbw_hz,
        "fits": {kind: _fit_payload(fit) for kind, fit in fits.items()},
    }
    if len(fits) == 2:
        ratio_db = slope_ratio_db(fits["fwm"], fits["sql"])
        payload["slope_ratio"] = fits["fwm"].slope / fits["sql"].slope
        payload["slope_ratio_db"] = ratio_db
    return payload, None


def _cmd_spectrum(args):
    traces = read_traces(args.input)
    points = squeezing_spectrum(traces, args.diff_background, args.sql_background)
    payload = {
        "command": "spectrum",
        "version": __version__,
        "input": args.input.name,
        "diff_background": args.diff_background,
        "sql_background": args.sql_background,
        "n_points": len(points),
        "n_feasible": sum(1 for p in points if p.feasible),
        "points": [
            {
                "freq_hz": p.freq_hz,
                "ratio": p.ratio,
                "squeezing_db": p.squeezing_db,
                "feasible": p.feasible,
            }
            for p in points
        ],
    }
    rows = [["freq_hz", "ratio", "squeezing_db", "feasible"]]
    for p in points:
        rows.append(
            [
                repr(p.freq_hz),
                "" if p.ratio is None else repr(p.ratio),
                "" if p.squeezing_db is None else repr(p.squeezing_db),
                "true" if p.feasible else "false",
            ]
        )
    return payload, rows


def _cmd_validate(args):
    cases = CROSS_ENGINE_GRID_FULL if args.full else CROSS_ENGINE_GRID_QUICK
    report = cross_engine_report(cases, args.leak_tol, args.tolerance)
    report = {"command": "validate", "version": __version__, **report}
    return report, None


_DISPATCH = {
    "simulate": _cmd_simulate,
    "surface": _cmd_surface,
    "invert": _cmd_invert,
    "correct": _cmd_correct,
    "fit": _cmd_fit,
    "spectrum": _cmd_spectrum,
    "validate": _cmd_validate,
}


def _flatten(payload, prefix=""):
    items = []
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            items.extend(_flatten(value, name + "."))
        elif isinstance(value, list):
            items.append((name, json.dumps(value)))
        else:
            items.append((name, value))
    return items


def _render(payload, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if rows is None:
        flat = _flatten(payload)
        rows = [[k for k, _ in flat], [_cell(v) for _, v in flat]]
    buffer = io.StringIO()
    csv.writer(buffer).writerows(rows)
    return buffer.getvalue()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0

    try:
        payload, rows = _DISPATCH[args.command](args)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    except (
        InfeasibleObservablesError,
        UnphysicalMeasurementError,
        NoInteriorOptimumError,
        NegativePowerError,
        ConvergenceError,
    ) as exc:
        return _fail(exc, EXIT_INFEASIBLE)
    except (DataFormatError, TruncationError) as exc:
        return _fail(exc, EXIT_VALIDATION)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE)

    if args.command == "surface":
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return EXIT_OK

    text = _render(payload, rows, args.format)
    if args.out is not None:
        try:
            args.out.write_text(text)
        except OSError as exc:
            return _fail(exc, EXIT_IO)
    else:
        sys.stdout.write(text)

    if args.command == "validate" and not payload["passed"]:
        return EXIT_VALIDATION
    return EXIT_OK


def _fail(exc: Exception, code: int) -> int:
    error = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    sys.stderr.write(json.dumps(error, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
