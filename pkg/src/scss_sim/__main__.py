#!/usr/bin/env python3
"""
CLI entry point for scss-sim (squeezed cat-state generation model).

Usage:
    python -m scss_sim sweep --ideal --steps 101 --out results/ideal.csv
    python -m scss_sim simulate --parity odd --R 0.72 --config paper --out results/odd.json
    python -m scss_sim tomo --in data.csv --efficiency 0.76 --storage-roundtrips 15 --out tomo.json
"""

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Callable, Dict, List, Optional

from scss_sim import __version__
from scss_sim.core.config import cfg, resolve_experiment_config
from scss_sim.core.exceptions import (
    ConfigError,
    ConvergenceWarning,
    DataFormatError,
    DimensionMismatchError,
    TruncationError,
)
from scss_sim.core.fock import ScssParams, cat_state, fidelity, wigner
from scss_sim.core.loader import SCHEMAS, loader
from scss_sim.phases.analysis import count_negative_regions, parametric_bootstrap
from scss_sim.phases.optimization import closest_scss, reflectivity_grid, sweep_reflectivity
from scss_sim.phases.protocol import (
    EVEN_MEASURED_FIDELITY,
    EVEN_SIMULATED_FIDELITY,
    EVEN_TARGET,
    HEADLINE_TARGET,
    average_over_storage,
    decay_fit,
    generation_rate,
    simulate_even,
    simulate_scss,
)
from scss_sim.phases.tomography import (
    TomographyJob,
    correction_efficiency,
    degrade,
    ingest_density_matrix,
    load_table_i,
    maxlik_reconstruct,
    sample_quadrature_arrays,
)
from scss_sim.utils.logger import logger, set_console_level
from scss_sim.utils.manifest import RunManifest, verify_manifest

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def reflectivity_arg(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"reflectivity must lie in [0, 1], got {value}")
    return value


def _manifest(args, profile: Optional[str] = None, seed: Optional[int] = None, **parameters) -> RunManifest:
    return RunManifest(command=args.command, profile=profile, seed=seed, argv=list(args.argv), parameters=parameters)


def _check_artifact(path: Optional[str], schema: str) -> int:
    """Re-validate an existing artifact (schema and manifest checksums) without recomputing."""
    if not path:
        logger.error("--check needs --out naming the artifact to validate")
        return EXIT_USAGE
    if schema in SCHEMAS:
        loader.read_csv(path, schema)
    else:
        data = loader.read_json(path)
        missing = [key for key in REPORT_KEYS[schema] if key not in data]
        if missing:
            raise DataFormatError(f"{path}: report lacks {', '.join(missing)}")
    problems = verify_manifest(path)
    for problem in problems:
        logger.error(f"check: {problem}")
    if problems:
        return EXIT_USAGE
    logger.info(f"check: {path} OK")
    return EXIT_OK


REPORT_KEYS: Dict[str, List[str]] = {
    "simulate": ["state", "closest", "negative_regions"],
    "tomo": ["state", "iterations", "converged", "fidelity_target"],
    "rate": ["rate_hz"],
    "decay": ["loss_per_round_trip"],
    "ingest": ["state", "raw_trace", "eigenvalue_adjustments"],
}


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------

def run_sweep(args) -> int:
    if args.check:
        return _check_artifact(args.out, "sweep")
    label, config = resolve_experiment_config(args.config)
    grid = reflectivity_grid(args.r_min, args.r_max, args.steps)
    logger.info(f"\n=== SWEEP ({'ideal' if args.ideal else 'realistic'}, profile {label}) ===")
    result = sweep_reflectivity(config, grid, ideal=args.ideal, n_stor=args.n_stor, parity=args.parity, workers=args.workers)
    best = result.best()
    logger.info(f"best: R={best.R:.3f} F={best.fidelity:.4f} alpha={best.alpha:.3f} ({best.squeezing_db:.2f} dB)")
    if args.out:
        loader.write_csv(result.to_frame(), args.out, "sweep")
        manifest = _manifest(args, label, ideal=args.ideal, parity=args.parity, r_min=args.r_min, r_max=args.r_max, steps=args.steps)
        manifest.add_output(args.out, "sweep")
        manifest.write(args.out)
        logger.info(f"sweep written to {args.out}")
    return EXIT_OK


def run_simulate(args) -> int:
    if args.check:
        return _check_artifact(args.out, "simulate")
    label, config = resolve_experiment_config(args.config)
    R = config.reflectivity if args.R is None else args.R
    logger.info(f"\n=== SIMULATE ({args.parity}, R={R:.3f}, profile {label}) ===")
    if args.n_stor is None:
        state = average_over_storage(config, R, args.parity, workers=args.workers)
    else:
        simulate = simulate_scss if args.parity == "odd" else simulate_even
        state = simulate(config, R, args.n_stor).state

    params, value = closest_scss(state, args.parity, config.target_working_truncation)
    grid = wigner(state)
    regions = count_negative_regions(grid, args.eps)
    reference = HEADLINE_TARGET if args.parity == "odd" else EVEN_TARGET
    reference_fidelity = fidelity(cat_state(reference, config.truncation, config.target_working_truncation), state)
    logger.info(
        f"closest {args.parity} SCSS: F={value:.4f} alpha={params.alpha:.3f} z={params.z:.3f} "
        f"({params.squeezing_db:.2f} dB), negative regions={regions}"
    )

    report = {
        "profile": label,
        "parity": args.parity,
        "R": R,
        "n_stor": args.n_stor,
        "state": state.to_dict(),
        "closest": {"alpha": params.alpha, "z": params.z, "squeezing_db": params.squeezing_db, "fidelity": value},
        "reference": {
            "alpha": reference.alpha,
            "z": reference.z,
            "squeezing_db": reference.squeezing_db,
            "fidelity": reference_fidelity,
        },
        "negative_regions": regions,
    }
    if args.parity == "even":
        report["reference"]["expected_simulated_fidelity"] = EVEN_SIMULATED_FIDELITY
        report["reference"]["measured_fidelity"] = EVEN_MEASURED_FIDELITY

    if args.out:
        loader.write_json(report, args.out)
        manifest = _manifest(args, label, parity=args.parity, R=R, n_stor=args.n_stor)
        manifest.add_output(args.out, "simulate")
        if args.wigner:
            loader.write_wigner(grid, args.wigner)
            manifest.add_output(args.wigner, "wigner")
        manifest.write(args.out)
        logger.info(f"report written to {args.out}")
    elif args.wigner:
        loader.write_wigner(grid, args.wigner)
    return EXIT_OK


def run_sample(args) -> int:
    if args.check:
        return _check_artifact(args.out, "quadratures")
    state = loader.read_density_matrix(args.input)
    if args.efficiency < 1.0:
        state = degrade(state, args.efficiency)
    logger.info(f"\n=== SAMPLE ({args.n} records, seed {args.seed}, efficiency {args.efficiency}) ===")
    x, theta = sample_quadrature_arrays(state, args.n, args.seed, args.phase)
    loader.write_quadratures(x, theta, args.out)
    manifest = _manifest(args, seed=args.seed, n=args.n, efficiency=args.efficiency, phase=args.phase)
    manifest.add_input(args.input)
    manifest.add_output(args.out, "quadratures")
    manifest.write(args.out)
    logger.info(f"quadratures written to {args.out}")
    return EXIT_OK


def run_tomo(args) -> int:
    if args.check:
        return _check_artifact(args.out, "tomo")
    x, theta = loader.read_quadratures(args.input)
    settings = cfg.tomography
    efficiency = correction_efficiency(args.efficiency, args.storage_roundtrips, args.eta_qmc)
    if not 0.5 < efficiency <= 1.0:
        logger.error(f"tomo: correction efficiency {efficiency:.4f} outside (0.5, 1], loss inversion is unstable")
        return EXIT_USAGE
    job = TomographyJob(
        x,
        theta,
        truncation=args.truncation,
        efficiency_correction=efficiency,
        max_iterations=args.max_iterations or int(settings["max_iterations"]),
        convergence_tol=args.tol or float(settings["convergence_tol"]),
        bin_width=float(settings["bin_width"]),
        x_range=float(settings["x_range"]),
        phase_bins=int(settings["phase_bins"]),
    )
    logger.info(f"\n=== TOMOGRAPHY ({job.size} records, correction {efficiency:.4f}) ===")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        result = maxlik_reconstruct(job)
    target = ScssParams(args.target_alpha, args.target_z, args.target_parity)
    target_fidelity = fidelity(cat_state(target, args.truncation), result.state)
    regions = count_negative_regions(wigner(result.state), float(settings["negativity_eps"]))
    logger.info(f"F(target alpha={target.alpha}, z={target.z}) = {target_fidelity:.4f}, negative regions={regions}")

    report = dict(result.to_dict(), records=job.size, efficiency_correction=efficiency)
    report.update(
        target={"alpha": target.alpha, "z": target.z, "parity": target.parity},
        fidelity_target=target_fidelity,
        negative_regions=regions,
    )
    if args.truth:
        truth = loader.read_density_matrix(args.truth)
        report["fidelity_truth"] = fidelity(truth.resize(args.truncation).normalized(), result.state)
        logger.info(f"F(truth) = {report['fidelity_truth']:.4f}")

    if args.bootstrap:
        bootstrap = parametric_bootstrap(
            result.state,
            job.size,
            args.bootstrap,
            target,
            seed=args.seed,
            efficiency_correction=efficiency,
            percentiles=settings["ci_percentiles"],
            workers=args.workers,
            max_iterations=job.max_iterations,
            convergence_tol=job.convergence_tol,
            bin_width=job.bin_width,
            x_range=job.x_range,
            phase_bins=job.phase_bins,
        )
        report["bootstrap"] = bootstrap.to_dict()

    if args.out:
        loader.write_json(report, args.out)
        manifest = _manifest(args, seed=args.seed, efficiency=efficiency, truncation=args.truncation, bootstrap=args.bootstrap)
        manifest.add_input(args.input)
        manifest.add_output(args.out, "tomo")
        manifest.write(args.out)
        logger.info(f"report written to {args.out}")

    if not result.converged:
        logger.error(f"reconstruction did not converge within {result.iterations} iterations")
        return EXIT_NUMERICAL
    return EXIT_OK


def run_rate(args) -> int:
    if args.check:
        return _check_artifact(args.out, "rate")
    label, config = resolve_experiment_config(args.config)
    if args.n_stor_max is not None:
        config = config.replace(n_stor_max=args.n_stor_max)
    logger.info(f"\n=== RATE (profile {label}, storage [{config.n_stor_min}, {config.n_stor_max}]) ===")
    rate = generation_rate(config, args.R, workers=args.workers)
    print(f"{rate:.4f}")
    if args.out:
        loader.write_json({"profile": label, "n_stor_max": config.n_stor_max, "rate_hz": rate}, args.out)
        manifest = _manifest(args, label, n_stor_max=config.n_stor_max, R=args.R)
        manifest.add_output(args.out, "rate")
        manifest.write(args.out)
    return EXIT_OK


def run_decay_fit(args) -> int:
    if args.check:
        return _check_artifact(args.out, "decay")
    points = loader.read_decay_points(args.input)
    loss = decay_fit(points)
    logger.info(f"\n=== DECAY FIT ({len(points)} points) ===")
    print(f"{loss:.6f}")
    if args.out:
        loader.write_json({"points": len(points), "loss_per_round_trip": loss}, args.out)
        manifest = _manifest(args)
        manifest.add_input(args.input)
        manifest.add_output(args.out, "decay")
        manifest.write(args.out)
    return EXIT_OK


def run_ingest(args) -> int:
    if args.check:
        return _check_artifact(args.out, "ingest")
    if args.table:
        result = load_table_i(args.table, args.truncation)
        source = str(loader.table_i_path(args.table))
    else:
        result = ingest_density_matrix(Path(args.input), args.truncation)
        source = args.input
    logger.info(f"\n=== INGEST ({source}) ===")
    target = ScssParams(args.target_alpha, args.target_z, args.target_parity)
    N = result.state.truncation
    target_fidelity = fidelity(cat_state(target, N), result.state)
    logger.info(
        f"trace {result.raw_trace:.4f}, max eigenvalue adjustment {result.max_adjustment:.4f}, "
        f"F(target) = {target_fidelity:.4f}"
    )
    report = dict(result.to_dict(), source=source, fidelity_target=target_fidelity)
    if args.out:
        loader.write_json(report, args.out)
        manifest = _manifest(args, table=args.table, truncation=args.truncation)
        if not args.table:
            manifest.add_input(args.input)
        manifest.add_output(args.out, "ingest")
        manifest.write(args.out)
    return EXIT_OK


# -----------------------------------------------------------------------------
# Parser
# -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scss_sim",
        description="Squeezed cat-state generation: simulation, optimization and tomography",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Lossless reflectivity sweep
  python -m scss_sim sweep --ideal --steps 101 --out results/ideal.csv

  # Storage-averaged headline state with Wigner grid
  python -m scss_sim simulate --parity odd --R 0.72 --config paper --out results/odd.json --wigner results/odd_w.csv

  # Reconstruction corrected for detector and 15 round trips, with bootstrap
  python -m scss_sim tomo --in data.csv --efficiency 0.76 --storage-roundtrips 15 --bootstrap 100 --out tomo.json
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Show debug output on the console")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only show warnings and errors")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    def add_common(sub, out_help: str, config: bool = True):
        if config:
            sub.add_argument("--config", default="paper", help="Profile name or YAML file (default: paper)")
        sub.add_argument("--out", help=out_help)
        sub.add_argument("--check", action="store_true", help="Re-validate an existing --out artifact")
        sub.add_argument("--workers", type=int, help="Worker processes (default: runtime.workers)")

    sweep = subparsers.add_parser("sweep", help="Closest-SCSS fidelity against beam-splitter reflectivity")
    mode = sweep.add_mutually_exclusive_group()
    mode.add_argument("--ideal", action="store_true", help="Lossless heralded state")
    mode.add_argument("--realistic", action="store_true", help="Full experiment model (default)")
    sweep.add_argument("--parity", choices=["odd", "even"], default="odd")
    sweep.add_argument("--r-min", type=reflectivity_arg, default=0.0)
    sweep.add_argument("--r-max", type=reflectivity_arg, default=0.95)
    sweep.add_argument("--steps", type=int, default=20)
    sweep.add_argument("--n-stor", type=int, help="Fixed storage time instead of the storage average")
    add_common(sweep, "CSV output (R,fidelity,alpha,z,squeezing_db)")
    sweep.set_defaults(handler=run_sweep)

    simulate = subparsers.add_parser("simulate", help="Simulate the heralded state at one reflectivity")
    simulate.add_argument("--parity", choices=["odd", "even"], default="odd")
    simulate.add_argument("--R", type=reflectivity_arg, help="Reflectivity (default: profile value)")
    simulate.add_argument("--n-stor", type=int, help="Fixed storage time instead of the storage average")
    simulate.add_argument("--eps", type=float, default=float(cfg.tomography["negativity_eps"]))
    simulate.add_argument("--wigner", help="CSV output of the Wigner grid (x,p,w)")
    add_common(simulate, "JSON report")
    simulate.set_defaults(handler=run_simulate)

    sample = subparsers.add_parser("sample", help="Draw synthetic quadrature records from a state")
    sample.add_argument("--in", dest="input", required=True, help="State JSON or matrix text file")
    sample.add_argument("--n", type=int, default=16339)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--efficiency", type=float, default=1.0, help="Detection efficiency applied before sampling")
    sample.add_argument("--phase", type=float, help="Fixed phase instead of uniform phases")
    add_common(sample, "CSV output (x,theta)", config=False)
    sample.set_defaults(handler=run_sample)

    tomo = subparsers.add_parser("tomo", help="Maximum-likelihood reconstruction from quadrature records")
    tomo.add_argument("--in", dest="input", help="Quadrature CSV (x,theta)")
    tomo.add_argument("--efficiency", type=float, default=1.0, help="Homodyne efficiency to correct for")
    tomo.add_argument("--storage-roundtrips", type=int, default=0, help="Storage round trips to correct for")
    tomo.add_argument("--eta-qmc", type=float, default=0.01, help="Loss per round trip")
    tomo.add_argument("--truncation", type=int, default=20)
    tomo.add_argument("--target-alpha", type=float, default=HEADLINE_TARGET.alpha)
    tomo.add_argument("--target-z", type=float, default=HEADLINE_TARGET.z)
    tomo.add_argument("--target-parity", choices=["odd", "even"], default="odd")
    tomo.add_argument("--truth", help="Known generating state (JSON) for closed-loop checks")
    tomo.add_argument("--bootstrap", type=int, default=0, help="Parametric bootstrap repetitions")
    tomo.add_argument("--seed", type=int, default=0)
    tomo.add_argument("--max-iterations", type=int)
    tomo.add_argument("--tol", type=float, help="Convergence tolerance on the per-sample log-likelihood gain")
    add_common(tomo, "JSON report", config=False)
    tomo.set_defaults(handler=run_tomo)

    rate = subparsers.add_parser("rate", help="Estimated SCSS generation rate")
    rate.add_argument("--n-stor-max", type=int)
    rate.add_argument("--R", type=reflectivity_arg)
    add_common(rate, "JSON report")
    rate.set_defaults(handler=run_rate)

    decay = subparsers.add_parser("decay-fit", help="Loss per round trip from a fidelity decay series")
    decay.add_argument("--in", dest="input", help="CSV (n_stor,fidelity)")
    add_common(decay, "JSON report", config=False)
    decay.set_defaults(handler=run_decay_fit)

    ingest = subparsers.add_parser("ingest", help="Validate and repair a published density matrix")
    source = ingest.add_mutually_exclusive_group()
    source.add_argument("--table", choices=["a", "b", "c"], help="Packaged Table I matrix")
    source.add_argument("--in", dest="input", help="Matrix text file")
    ingest.add_argument("--truncation", type=int)
    ingest.add_argument("--target-alpha", type=float, default=HEADLINE_TARGET.alpha)
    ingest.add_argument("--target-z", type=float, default=HEADLINE_TARGET.z)
    ingest.add_argument("--target-parity", choices=["odd", "even"], default="odd")
    add_common(ingest, "JSON report", config=False)
    ingest.set_defaults(handler=run_ingest)

    return parser


def _required_inputs(args) -> Optional[str]:
    if args.check:
        return None
    if args.command in ("tomo", "decay-fit") and not args.input:
        return "--in is required"
    if args.command == "ingest" and not (args.table or args.input):
        return "one of --table or --in is required"
    if args.command == "sample" and not args.out:
        return "--out is required"
    return None


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    args.argv = list(sys.argv[1:] if argv is None else argv)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    if args.verbose:
        set_console_level(logging.DEBUG)
    elif args.quiet:
        set_console_level(logging.WARNING)

    problem = _required_inputs(args)
    if problem:
        logger.error(f"{args.command}: {problem}")
        return EXIT_USAGE

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except (ConfigError, DataFormatError, FileNotFoundError, TruncationError, DimensionMismatchError) as e:
        logger.error(f"error: {e}")
        return EXIT_USAGE
    except Exception:
        logger.exception("unexpected failure")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
