"""
Validation utilities for model configs, run configs and datasets.
"""
from typing import List, Dict, Any, Tuple

import numpy as np

from src.config import get_logger
from src.models import Family, ModelConfig, RunConfig, SignalDataset

logger = get_logger(__name__)

SUBCOMMANDS = ("train", "superres", "spectrum", "ablate", "verify")
ENTANGLERS = ("CNOT_ring", "CZ_ring")
PREPARATIONS = ("none", "hadamard", "ry_half_pi")


def validate_model_config(config: ModelConfig | Dict[str, Any]) -> Tuple[bool, List[str]]:
    """Validate a model configuration.

    Args:
        config: ModelConfig object or dictionary

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    if isinstance(config, dict):
        config = ModelConfig.from_dict(config)
    errors: List[str] = []

    families = [f.value for f in Family]
    if config.family not in families:
        errors.append(f"Unknown family '{config.family}' (expected one of {', '.join(families)})")
    if config.d_in < 1 or config.d_out < 1:
        errors.append("d_in and d_out must be positive")
    if config.hidden_dim < 1:
        errors.append("hidden_dim must be positive")
    if config.family != Family.PURE_QUANTUM.value and config.depth < 1:
        errors.append("depth must be positive")

    quantum = config.family in (Family.QIREN.value, Family.PURE_QUANTUM.value)
    if quantum:
        if config.qubits < 1 or config.reuploads < 1 or config.blocks < 1:
            errors.append("qubits, reuploads and blocks must be positive")
        if config.entangler not in ENTANGLERS:
            errors.append(f"Unknown entangler '{config.entangler}'")
        if config.preparation not in PREPARATIONS:
            errors.append(f"Unknown preparation '{config.preparation}'")
        if config.noise_bound < 0:
            errors.append(f"noise_bound must be non-negative, got {config.noise_bound}")
    if config.family == Family.QIREN.value and config.hidden_dim != config.qubits:
        errors.append("QIREN needs hidden_dim == qubits")
    if config.family == Family.PURE_QUANTUM.value and config.d_out > config.qubits:
        errors.append("pure_quantum cannot measure more outputs than it has qubits")
    if config.family == Family.RELU_RFF.value and config.rff_features < 1:
        errors.append("rff_features must be positive")

    return len(errors) == 0, errors


def validate_run_config(config: RunConfig) -> Tuple[bool, List[str]]:
    """Validate the settings of one CLI invocation.

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors: List[str] = []

    if config.subcommand not in SUBCOMMANDS:
        errors.append(f"Unknown subcommand '{config.subcommand}'")
    if config.subcommand in ("train", "ablate") and not config.data:
        errors.append(f"{config.subcommand} needs --data")
    if config.subcommand in ("superres", "spectrum") and not config.checkpoint:
        errors.append(f"{config.subcommand} needs --checkpoint")
    if config.subcommand == "spectrum" and not config.data:
        errors.append("spectrum needs --data")
    if config.epochs < 0:
        errors.append(f"epochs must be >= 0, got {config.epochs}")
    if not config.seeds:
        errors.append("at least one seed is required")
    if config.lr is not None and config.lr <= 0:
        errors.append(f"lr must be positive, got {config.lr}")
    if config.noise is not None and config.noise < 0:
        errors.append(f"noise must be non-negative, got {config.noise}")
    if config.entangler is not None and config.entangler not in ENTANGLERS:
        errors.append(f"Unknown entangler '{config.entangler}'")
    if not 0 < config.cutoff < 1:
        errors.append(f"cutoff must be in (0, 1), got {config.cutoff}")
    if config.factor < 1:
        errors.append(f"factor must be >= 1, got {config.factor}")
    if config.threads < 1:
        errors.append(f"threads must be >= 1, got {config.threads}")
    for name in ("qubits", "reuploads", "blocks"):
        value = getattr(config, name)
        if value is not None and value < 1:
            errors.append(f"{name} must be positive, got {value}")

    return len(errors) == 0, errors


def validate_dataset(dataset: SignalDataset) -> Tuple[bool, List[str]]:
    """Check the structural invariants of a dataset.

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    errors: List[str] = []

    if dataset.coords.ndim != 2 or dataset.values.ndim != 2:
        errors.append("coords and values must be 2-D arrays")
        return False, errors
    if dataset.coords.shape[0] != dataset.values.shape[0]:
        errors.append(f"{dataset.coords.shape[0]} coordinates but {dataset.values.shape[0]} values")
    if dataset.size != int(np.prod(dataset.grid_shape)):
        errors.append(f"size {dataset.size} != product of grid_shape {tuple(dataset.grid_shape)}")
    if len(dataset.grid_shape) != dataset.d_in:
        errors.append(f"grid_shape has {len(dataset.grid_shape)} axes for d_in={dataset.d_in}")
    if np.any(np.abs(dataset.coords) > 1.0):
        errors.append("coordinates outside [-1, 1]")
    if not np.all(np.isfinite(dataset.values)):
        errors.append("values contain NaN or infinite entries")

    return len(errors) == 0, errors


def dataset_report(dataset: SignalDataset) -> Dict[str, Any]:
    """Statistics and validity of a dataset.

    Returns:
        Report dictionary
    """
    is_valid, errors = validate_dataset(dataset)
    values = dataset.values
    report: Dict[str, Any] = {
        'name': dataset.name,
        'samples': dataset.size,
        'grid_shape': list(dataset.grid_shape),
        'valid': is_valid,
        'errors': errors,
        'stats': {},
    }
    if values.size:
        report['stats'] = {
            'min': float(np.min(values)),
            'max': float(np.max(values)),
            'mean': float(np.mean(values)),
            'std': float(np.std(values)),
            'raw_range': list(dataset.value_range),
            'target_range': list(dataset.target_range),
        }
    for error in errors:
        logger.warning(f"Invalid dataset {dataset.name}: {error}")
    return report


def format_dataset_report(report: Dict[str, Any]) -> str:
    """Render a dataset report as the framed ✓/⚠ text block.

    Args:
        report: Report from dataset_report()
    """
    lines = ["", "=" * 50, " Dataset Report", "=" * 50]

    shape = "x".join(str(s) for s in report.get('grid_shape', []))
    lines.append(f"\n✓ Name: {report.get('name') or '-'}")
    lines.append(f"✓ Samples: {report.get('samples', 0)} ({shape})")

    stats = report.get('stats', {})
    if stats:
        lines.append(f"✓ Values: min {stats['min']:.4f}, max {stats['max']:.4f}, "
                     f"mean {stats['mean']:.4f}, std {stats['std']:.4f}")
        lines.append(f"✓ Raw range {stats['raw_range']} mapped to {stats['target_range']}")

    if report.get('valid'):
        lines.append("✓ Dataset is valid")
    else:
        for error in report.get('errors', []):
            lines.append(f"⚠ {error}")

    lines.append("\n" + "=" * 50)
    return "\n".join(lines)


def print_dataset_report(report: Dict[str, Any]) -> None:
    """Print a formatted dataset report."""
    print(format_dataset_report(report))
