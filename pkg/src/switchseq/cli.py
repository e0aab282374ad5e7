"""Command-line experiment runner.

Subcommands: optimize, ambiguity, crlb, compare, effective-factor. Every run
writes a manifest with the resolved config, its hash, library versions, and
wall time, so an output directory is sufficient to reproduce itself.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .ambiguity import (DegenerateDirectionError, ObjectiveEvaluator,
                        ambiguity_surface, save_surface_csv)
from .analysis import GridTooNarrowError, compare_schemes
from .anneal import AnnealError, anneal, save_trace_csv
from .arrays import effective_elements
from .config import ConfigError, ExperimentConfig
from .crlb import (EndfireSingularityError, ParamVector, SingularFIMError,
                   UnobservableDopplerError, crlb_aoa, crlb_doppler, fim_numeric)
from .switching import SwitchingSequence

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = (DegenerateDirectionError, EndfireSingularityError,
                  UnobservableDopplerError, SingularFIMError,
                  GridTooNarrowError, AnnealError)


def _write_manifest(out_dir: Path, command: str, config: ExperimentConfig,
                    seed: int, threads: int, wall_time_s: float,
                    outputs: list[str]) -> None:
    canonical = json.dumps(config.raw, sort_keys=True).encode()
    manifest = {
        "command": command,
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "seed": seed,
        "threads": threads,
        "config": config.raw,
        "config_sha256": hashlib.sha256(canonical).hexdigest(),
        "wall_time_s": wall_time_s,
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_optimize(config: ExperimentConfig, out_dir: Path, seed: int,
                 threads: int) -> int:
    start = time.perf_counter()
    array = config.build_array()
    region = config.build_region()
    anneal_cfg = config.build_anneal(threads)
    rng = np.random.default_rng(seed)

    spec = config.sequence_spec
    if anneal_cfg.update == "hybrid":
        if array.partition is None:
            raise ConfigError("hybrid optimization requires a partitioned array")
        from .switching import hybrid_init
        init = hybrid_init(array.num_elements, spec["delta_t_s"],
                           spec["snapshots"], array.partition, rng)
    else:
        from .switching import random_init
        init = random_init(array.num_elements, spec["delta_t_s"],
                           spec["snapshots"], rng)

    final, trace = anneal(init, anneal_cfg, array, region, rng=rng)

    final.save(out_dir / "sequence.json")
    trace.best_sequence.save(out_dir / "best_sequence.json")
    save_trace_csv(trace, out_dir / "trace.csv")
    summary = {
        "initial_objective": trace.initial_objective,
        "final_objective": trace.final_objective,
        "best_objective": trace.best_objective,
        "best_k": trace.best_k,
        "t0": trace.t0,
        "alpha": trace.alpha,
        "iterations": len(trace.records),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_manifest(out_dir, "optimize", config, seed, threads,
                    time.perf_counter() - start,
                    ["sequence.json", "best_sequence.json", "trace.csv",
                     "summary.json"])
    print(f"final objective {trace.final_objective:.6g} "
          f"(best {trace.best_objective:.6g} at k={trace.best_k})")
    return 0


def cmd_ambiguity(config: ExperimentConfig, out_dir: Path, seed: int,
                  threads: int, sequence_file: str | None) -> int:
    start = time.perf_counter()
    array = config.build_array()
    if sequence_file is not None:
        path = Path(sequence_file)
        if not path.exists():
            raise ConfigError(f"sequence file not found: {path}")
        seq = SwitchingSequence.load(path)
        seq_hash = _sha256_file(path)
        if seq.num_elements != array.num_elements:
            raise ConfigError(
                f"sequence has {seq.num_elements} elements, array has "
                f"{array.num_elements}"
            )
    else:
        seq = config.build_sequence(array, np.random.default_rng(seed))
        seq_hash = None

    mu = config.reference_params()
    doppler, angles, axis = config.sweep_grids()
    surface = ambiguity_surface(array, seq, mu, doppler, angles, axis)
    save_surface_csv(surface, out_dir / "surface.csv",
                     metadata={"seed": seed, "sequence_sha256": seq_hash})
    _write_manifest(out_dir, "ambiguity", config, seed, threads,
                    time.perf_counter() - start,
                    ["surface.csv", "surface.csv.meta.json"])
    print(f"surface {surface.magnitude.shape[0]}x{surface.magnitude.shape[1]} "
          f"written to {out_dir / 'surface.csv'}")
    return 0


def cmd_crlb(config: ExperimentConfig, out_dir: Path, seed: int,
             threads: int) -> int:
    start = time.perf_counter()
    if config.array_spec["kind"] != "ula":
        raise ConfigError("crlb closed forms are derived for the omni ULA; "
                          "use an array of kind 'ula'")
    array = config.build_array()
    seq = config.build_sequence(array, np.random.default_rng(seed))
    spec = config.crlb_spec
    params = ParamVector(
        azimuth=math.radians(spec["azimuth_deg"]),
        doppler_hz=spec["doppler_hz"],
        amplitude=spec["amplitude"],
        phase=spec["phase"],
    )
    sigma = spec["noise_sigma"]
    wavelength = array.wavelength
    spacing = config.array_spec["spacing_wavelengths"] * wavelength

    closed_phi = crlb_aoa(array.num_elements, spacing, wavelength,
                          params.azimuth, params.amplitude, sigma)
    closed_nu = crlb_doppler(seq.eta(centered=True), params.amplitude, sigma)
    numeric = fim_numeric(array, seq, params, sigma,
                          elevation=math.radians(spec["elevation_deg"]))

    # the closed forms are reciprocal-diagonal bounds, so the oracle check
    # compares against 1/F_ii; the full-inverse variances are reported too,
    # with off_diag_ratio saying how far apart the two routes can be
    recip = numeric.reciprocal_diagonal
    err_phi = abs(recip[0] - closed_phi) / closed_phi
    err_nu = abs(recip[1] - closed_nu) / closed_nu
    report = {
        "params": {
            "azimuth_deg": spec["azimuth_deg"],
            "doppler_hz": spec["doppler_hz"],
            "amplitude": spec["amplitude"],
            "phase": spec["phase"],
            "noise_sigma": sigma,
            "elements": array.num_elements,
            "delta_t_s": seq.delta_t,
        },
        "closed_form": {"var_phi": closed_phi, "var_nu": closed_nu},
        "numeric": {
            "var_phi": numeric.var_phi,
            "var_nu": numeric.var_nu,
            "var_r": numeric.var_r,
            "var_psi": numeric.var_psi,
        },
        "numeric_diagonal": {
            "var_phi": recip[0],
            "var_nu": recip[1],
            "var_r": recip[2],
            "var_psi": recip[3],
        },
        "off_diag_ratio": numeric.off_diag_ratio,
        "agreement": {
            "var_phi_rel_err": err_phi,
            "var_nu_rel_err": err_nu,
            "within_1pct": bool(err_phi < 0.01 and err_nu < 0.01),
        },
    }
    (out_dir / "crlb_report.json").write_text(json.dumps(report, indent=2) + "\n")
    _write_manifest(out_dir, "crlb", config, seed, threads,
                    time.perf_counter() - start, ["crlb_report.json"])
    print(json.dumps(report["agreement"], indent=2))
    return 0


def cmd_compare(config: ExperimentConfig, out_dir: Path, seed: int,
                threads: int) -> int:
    start = time.perf_counter()
    array = config.build_array()
    if array.partition is None:
        raise ConfigError("compare requires a partitioned (octagonal) array")
    region = config.build_region()
    spec = config.sequence_spec
    from .switching import hybrid_init, random_init, sequential

    rng = np.random.default_rng(seed)
    seq_sequential = sequential(array.num_elements, spec["delta_t_s"],
                                spec["snapshots"], array.partition)

    objective_cfg = config.build_objective(threads)
    k_max = config.anneal_spec["k_max"] if config.anneal_spec else 200
    evaluator = ObjectiveEvaluator(array, region, objective_cfg,
                                   spec["delta_t_s"], spec["snapshots"])

    from .anneal import AnnealConfig

    init_rand = random_init(array.num_elements, spec["delta_t_s"],
                            spec["snapshots"], rng)
    cfg_rand = AnnealConfig(objective=objective_cfg, update="random",
                            k_max=k_max, seed=seed)
    seq_random, trace_random = anneal(init_rand, cfg_rand, array, region,
                                      rng=rng, evaluator=evaluator)

    init_hyb = hybrid_init(array.num_elements, spec["delta_t_s"],
                           spec["snapshots"], array.partition, rng)
    cfg_hyb = AnnealConfig(objective=objective_cfg, update="hybrid",
                           k_max=k_max, seed=seed)
    seq_hybrid, trace_hybrid = anneal(init_hyb, cfg_hyb, array, region,
                                      rng=rng, evaluator=evaluator)

    mu = config.reference_params()
    doppler, angles, axis = config.sweep_grids()
    report = compare_schemes(
        array,
        {"sequential": seq_sequential, "random": seq_random, "hybrid": seq_hybrid},
        mu, doppler, angles, axis,
        threshold_db=config.effective_threshold_db,
        amplitude=config.crlb_spec["amplitude"],
        noise_sigma=config.crlb_spec["noise_sigma"],
    )

    outputs = []
    for name, surface in report.surfaces.items():
        fname = f"surface_{name}.csv"
        save_surface_csv(surface, out_dir / fname, metadata={"seed": seed})
        outputs.extend([fname, fname + ".meta.json"])
    for name, seq in (("sequence_random.json", seq_random),
                      ("sequence_hybrid.json", seq_hybrid)):
        seq.save(out_dir / name)
        outputs.append(name)
    for name, trace in (("trace_random.csv", trace_random),
                        ("trace_hybrid.csv", trace_hybrid)):
        save_trace_csv(trace, out_dir / name)
        outputs.append(name)

    doc = report.to_dict()
    doc["anneal"] = {
        "random": {"final_objective": trace_random.final_objective,
                   "best_objective": trace_random.best_objective},
        "hybrid": {"final_objective": trace_hybrid.final_objective,
                   "best_objective": trace_hybrid.best_objective},
    }
    (out_dir / "comparison.json").write_text(json.dumps(doc, indent=2) + "\n")
    outputs.append("comparison.json")
    _write_manifest(out_dir, "compare", config, seed, threads,
                    time.perf_counter() - start, outputs)
    print(f"broadening ratio {report.broadening_ratio:.3f} "
          f"(1/effective factor {report.inverse_effective_factor:.3f})")
    return 0


def cmd_effective_factor(config: ExperimentConfig, out_dir: Path, seed: int,
                         threads: int) -> int:
    start = time.perf_counter()
    array = config.build_array()
    mu = config.reference_params()
    direction = mu.rx_direction
    idx = effective_elements(array, direction, config.effective_threshold_db)
    report = {
        "azimuth_deg": config.reference_spec["azimuth_deg"],
        "elevation_deg": config.reference_spec["elevation_deg"],
        "threshold_db": config.effective_threshold_db,
        "effective_elements": int(idx.size),
        "total_elements": array.num_elements,
        "effective_factor": idx.size / array.num_elements,
        "indices": idx.tolist(),
    }
    (out_dir / "effective_factor.json").write_text(json.dumps(report, indent=2) + "\n")
    _write_manifest(out_dir, "effective-factor", config, seed, threads,
                    time.perf_counter() - start, ["effective_factor.json"])
    print(f"effective factor {report['effective_factor']:.4f} "
          f"({idx.size}/{array.num_elements})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchseq",
        description="Design and evaluate antenna switching sequences for "
                    "switched-array channel sounders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("optimize", "anneal a switching sequence against the ambiguity objective"),
        ("ambiguity", "compute an ambiguity surface for a sequence"),
        ("crlb", "closed-form vs numeric estimation bounds"),
        ("compare", "full sequential/random/hybrid comparison pipeline"),
        ("effective-factor", "count elements receiving significant power"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment JSON config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for objective evaluation")
        p.add_argument("--out", default=None,
                       help="output directory (default: config output_dir or cwd)")
        if name == "ambiguity":
            p.add_argument("--sequence", default=None,
                           help="sequence JSON file (default: built from config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        seed = args.seed if args.seed is not None else config.seed
        out_dir = Path(args.out or config.output_dir or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "optimize":
            return cmd_optimize(config, out_dir, seed, args.threads)
        if args.command == "ambiguity":
            return cmd_ambiguity(config, out_dir, seed, args.threads,
                                 args.sequence)
        if args.command == "crlb":
            return cmd_crlb(config, out_dir, seed, args.threads)
        if args.command == "compare":
            return cmd_compare(config, out_dir, seed, args.threads)
        return cmd_effective_factor(config, out_dir, seed, args.threads)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "config", "message": str(exc)}}),
              file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}),
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
