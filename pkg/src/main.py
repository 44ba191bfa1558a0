"""
Main entry point for the QIREN toolkit.

Usage:
    python -m src.main <command> [options]

Commands:
    train       Train a model family on a sound or image file (best of N seeds)
    superres    Evaluate a trained image model on a denser grid
    spectrum    DFT of a trained sound model's output versus the target
    ablate      Run the ablation matrix on a dataset
    verify      Run the oracle checks and print a per-check table
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.config import (
    DEFAULT_ABLATION_CSV,
    DEFAULT_CHECKPOINT,
    DEFAULT_LOSS_CSV,
    DEFAULT_REPORT_JSON,
    DEFAULT_SPECTRUM_CSV,
    DEFAULT_SUPERRES_PGM,
    SOUND_SAMPLES,
    get_default_seed,
    get_default_threads,
    get_logger,
    get_output_dir,
)
from src.models import Family, ModelConfig, RunConfig
from src.nn.layers import NeuralError
from src.quantum.reuploading import CircuitError
from src.quantum.statevector import SimulationError
from src.services.ablation import ABLATION_FIELDS, ablate, ablation_directions, ablation_matrix
from src.services.checkpoint import CheckpointError, read_checkpoint, restore_model, save_checkpoint
from src.services.datasets import DatasetError, dataset_to_image, load_dataset, load_sound
from src.services.families import ModelError
from src.services.file_exporter import (
    canonical_json,
    format_results_table,
    save_loss_csv,
    save_pgm,
    save_spectrum_csv,
    save_to_csv,
    save_to_json,
)
from src.services.spectrum import SpectrumError, band_errors, model_output_spectrum, signal_spectrum
from src.services.superres import interp_baseline, superresolve
from src.services.training import TrainingDivergedError, train_best_of
from src.services.verification import format_verification_table, run_verification, summary
from src.utils.validators import dataset_report, format_dataset_report, validate_run_config

logger = get_logger(__name__)

TOOLKIT_ERRORS = (
    SimulationError,
    CircuitError,
    NeuralError,
    ModelError,
    CheckpointError,
    DatasetError,
    SpectrumError,
)


class ConfigError(Exception):
    """Raised for invalid command-line or config-file settings."""
    pass


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--family", choices=[f.value for f in Family], default=None,
                        help="Model family (default: qiren)")
    parent.add_argument("--data", type=str, default=None,
                        help="Sound (.wav/.csv) or image (.pgm) file")
    parent.add_argument("--checkpoint", type=str, default=None,
                        help="Checkpoint file to read (superres, spectrum)")
    parent.add_argument("--epochs", type=int, default=None, help="Training epochs (default: 300)")
    parent.add_argument("--seeds", type=int, default=None,
                        help="Number of seeds to train; seeds are --seed, --seed+1, ...")
    parent.add_argument("--seed", type=int, default=None,
                        help="First seed (default: QIREN_SEED or 0)")
    parent.add_argument("--lr", type=float, default=None,
                        help="Single learning rate for all parameters (default: 5e-4 classical, 5e-3 quantum)")
    parent.add_argument("--qubits", type=int, default=None, help="Qubits per circuit")
    parent.add_argument("--reuploads", type=int, default=None, help="Data re-uploads L")
    parent.add_argument("--blocks", type=int, default=None, help="Blocks per parameter layer K")
    parent.add_argument("--entangler", choices=["CNOT_ring", "CZ_ring"], default=None,
                        help="Entangling ring")
    parent.add_argument("--noise", type=float, default=None, help="Measurement-noise bound")
    parent.add_argument("--cutoff", type=float, default=None,
                        help="Band cutoff as a fraction of Nyquist (default: 0.25)")
    parent.add_argument("--factor", type=int, default=None, help="Superresolution factor (default: 2)")
    parent.add_argument("--out", type=str, default=None,
                        help="Output directory (default: QIREN_OUT or ./runs)")
    parent.add_argument("--threads", type=int, default=None,
                        help="Worker threads for seeds/ablation cells (default: QIREN_THREADS or 1)")
    parent.add_argument("--config", type=str, default=None,
                        help="JSON file with RunConfig fields; flags override it")
    parent.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    return parent


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Quantum implicit neural representations and classical baselines",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Environment Variables:
    QIREN_SEED      Default seed
    QIREN_THREADS   Default worker count
    QIREN_OUT       Default output directory

Examples:
    python -m src.main train --family qiren --data sound.wav --epochs 300 --seeds 5
    python -m src.main superres --checkpoint runs/model.qirn --factor 2
    python -m src.main spectrum --checkpoint runs/model.qirn --data sound.wav
    python -m src.main ablate --data sound.wav --epochs 300 --threads 4
    python -m src.main verify
        """
    )
    common = _common_options()
    sub = parser.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("train", parents=[common], help="Train a model (best of N seeds)")
    sub.add_parser("superres", parents=[common], help="Superresolve a trained image model")
    sub.add_parser("spectrum", parents=[common], help="Output spectrum of a trained sound model")
    ablate_parser = sub.add_parser("ablate", parents=[common], help="Run the ablation matrix")
    ablate_parser.add_argument("--full", action="store_true",
                               help="Run the full cartesian product instead of one axis at a time")
    sub.add_parser("verify", parents=[common], help="Run the oracle checks")
    return parser.parse_args(argv)


def load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(sorted(unknown))}")
    return data


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Resolve settings: flags override the config file, which overrides defaults."""
    values: Dict[str, Any] = {
        "subcommand": args.subcommand,
        "seeds": [get_default_seed()],
        "out": get_output_dir(),
        "threads": get_default_threads(),
    }
    if args.config:
        values.update(load_config_file(args.config))
        values["subcommand"] = args.subcommand

    for name in ("family", "data", "checkpoint", "epochs", "lr", "qubits", "reuploads", "blocks",
                 "entangler", "noise", "cutoff", "factor", "out", "threads"):
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    if getattr(args, "full", False):
        values["full"] = True

    if args.seed is not None or args.seeds is not None:
        first = args.seed if args.seed is not None else values["seeds"][0]
        count = args.seeds if args.seeds is not None else 1
        values["seeds"] = [first + i for i in range(count)]

    config = RunConfig.from_dict(values)
    is_valid, errors = validate_run_config(config)
    if not is_valid:
        raise ConfigError("; ".join(errors))
    return config


def model_config_for(config: RunConfig, d_in: int, d_out: int) -> ModelConfig:
    overrides: Dict[str, Any] = {
        "qubits": config.qubits,
        "reuploads": config.reuploads,
        "blocks": config.blocks,
        "entangler": config.entangler,
        "noise_bound": config.noise,
        "seed": config.seeds[0],
    }
    if config.family == Family.QIREN.value and config.qubits is not None:
        overrides["hidden_dim"] = config.qubits
    return ModelConfig.for_family(config.family, d_in, d_out, **overrides)


def cmd_train(config: RunConfig) -> int:
    dataset = load_dataset(config.data)
    logger.info(format_dataset_report(dataset_report(dataset)))
    model_config = model_config_for(config, dataset.d_in, dataset.d_out)

    best, model, reports = train_best_of(
        model_config, dataset, config.epochs, config.seeds, config.lr, config.threads
    )

    out = Path(config.out)
    metadata = {
        "epochs": best.epochs,
        "final_loss": best.losses[-1] if best.losses else None,
        "final_mse": best.final_mse,
        "seed": best.seed,
        "dataset": dataset.metadata(),
    }
    save_checkpoint(model, out / DEFAULT_CHECKPOINT, metadata=metadata)
    save_to_json(best, out / DEFAULT_REPORT_JSON)
    save_loss_csv(best, out / DEFAULT_LOSS_CSV)
    if len(reports) > 1:
        for report in reports:
            save_to_json(report, out / f"report_seed{report.seed}.json")

    logger.info("\n" + format_results_table([best]))
    print(canonical_json({
        "checkpoint": str(out / DEFAULT_CHECKPOINT),
        "final_mse": best.final_mse,
        "mem_saving": best.mem_saving,
        "params": best.params,
        "seed": best.seed,
    }), end="")
    return 0


def _load_model(config: RunConfig):
    checkpoint = read_checkpoint(config.checkpoint)
    return restore_model(checkpoint), checkpoint.metadata


def cmd_superres(config: RunConfig) -> int:
    model, metadata = _load_model(config)
    grid_shape = metadata.get("dataset", {}).get("grid_shape") or [32, 32]
    result = superresolve(model, config.factor, grid_shape)
    out = Path(config.out)
    save_pgm(dataset_to_image(result), out / DEFAULT_SUPERRES_PGM)

    if config.data:
        image = dataset_to_image(load_dataset(config.data))
        for method in ("nearest", "bilinear"):
            save_pgm(interp_baseline(image, method, config.factor), out / f"{method}.pgm")
    print(canonical_json({"grid_shape": list(result.grid_shape), "factor": config.factor}), end="")
    return 0


def cmd_spectrum(config: RunConfig) -> int:
    model, metadata = _load_model(config)
    shape = metadata.get("dataset", {}).get("grid_shape")
    dataset = load_sound(config.data, n=int(shape[0]) if shape and len(shape) == 1 else SOUND_SAMPLES)
    predicted = model_output_spectrum(model, dataset)
    target = signal_spectrum(dataset.values)

    out = Path(config.out)
    save_spectrum_csv(predicted.to_rows(), out / DEFAULT_SPECTRUM_CSV)
    save_spectrum_csv(target.to_rows(), out / "spectrum_target.csv")

    model.eval()
    errors = band_errors(model.forward(dataset.coords), dataset.values, config.cutoff)
    print(canonical_json({"cutoff": config.cutoff, "band_errors": errors}), end="")
    return 0


def cmd_ablate(config: RunConfig) -> int:
    dataset = load_dataset(config.data)
    cells = ablation_matrix(seeds=config.seeds, full=config.full)
    results = ablate(cells, dataset, config.epochs, config.lr, config.threads)
    save_to_csv([r.to_row() for r in results], Path(config.out) / DEFAULT_ABLATION_CSV, ABLATION_FIELDS)
    directions = ablation_directions(results)
    failed = sum(not r.ok for r in results)
    print(canonical_json({"cells": len(results), "failed": failed, "directions": directions}), end="")
    return 0


def cmd_verify(config: RunConfig) -> int:
    results = run_verification(seed=config.seeds[0])
    logger.info("\n" + format_verification_table(results))
    passed = sum(r.passed for r in results)
    print(canonical_json({"checks": summary(results), "passed": passed, "total": len(results)}), end="")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "train": cmd_train,
    "superres": cmd_superres,
    "spectrum": cmd_spectrum,
    "ablate": cmd_ablate,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main execution function.

    Returns:
        Exit code (0 for success, 1 for bad input or failed checks, 2 for divergence)
    """
    args = parse_args(argv)

    # Set up verbose logging if requested
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        config = build_run_config(args)
        logger.info(f"Running {config.subcommand} with seeds {config.seeds}")
        return COMMANDS[config.subcommand](config)

    except KeyboardInterrupt:
        logger.error("Interrupted by user")
        return 130

    except TrainingDivergedError as e:
        logger.error(f"{e}")
        return 2

    except (ConfigError, *TOOLKIT_ERRORS, OSError, ValueError, KeyError) as e:
        logger.error(f"'{args.subcommand}' failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
