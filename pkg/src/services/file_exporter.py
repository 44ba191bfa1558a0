"""
File exporter service for reports, CSV tables and PGM images.
"""
import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from src.config import DEFAULT_LOSS_CSV, DEFAULT_REPORT_JSON, DEFAULT_SPECTRUM_CSV, get_logger
from src.models import TrainReport

logger = get_logger(__name__)

PathLike = Union[str, Path]


def canonical_json(data: Any) -> str:
    """Sorted keys, compact separators, UTF-8 text, trailing newline."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def _prepare(filename: PathLike) -> Path:
    filepath = Path(filename)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    return filepath


def save_to_json(
    data: TrainReport | Dict[str, Any] | List[Any],
    filename: PathLike = DEFAULT_REPORT_JSON
) -> Path:
    """Save a report (or any JSON-compatible data) as canonical JSON.

    Args:
        data: TrainReport, dictionary or list
        filename: Output filename (default: report.json)

    Returns:
        Path to the saved file

    Raises:
        IOError: If file writing fails
    """
    if isinstance(data, TrainReport):
        data = data.to_dict()

    try:
        filepath = _prepare(filename)
        with open(filepath, "w", encoding="utf-8", newline="\n") as f:
            f.write(canonical_json(data))
        logger.info(f"Saved JSON to {filepath}")
        return filepath
    except Exception as e:
        logger.error(f"Failed to save JSON: {e}")
        raise IOError(f"Failed to save JSON file: {e}")


def save_to_csv(
    rows: Sequence[Dict[str, Any]],
    filename: PathLike,
    fieldnames: Optional[Sequence[str]] = None,
) -> Path:
    """Save rows to a CSV file with LF line endings.

    Args:
        rows: One dictionary per row
        filename: Output filename
        fieldnames: Column order (default: keys of the first row)

    Returns:
        Path to the saved file

    Raises:
        IOError: If file writing fails
    """
    keys = list(fieldnames) if fieldnames else (list(rows[0].keys()) if rows else [])

    try:
        filepath = _prepare(filename)
        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
            writer.writeheader()
            writer.writerows(rows)
        logger.info(f"Saved {len(rows)} rows to {filepath}")
        return filepath
    except Exception as e:
        logger.error(f"Failed to save CSV: {e}")
        raise IOError(f"Failed to save CSV file: {e}")


def save_loss_csv(report: TrainReport, filename: PathLike = DEFAULT_LOSS_CSV) -> Path:
    rows = [{"epoch": i + 1, "loss": repr(loss)} for i, loss in enumerate(report.losses)]
    return save_to_csv(rows, filename, ["epoch", "loss"])


def save_spectrum_csv(rows: Sequence[Dict[str, Any]], filename: PathLike = DEFAULT_SPECTRUM_CSV,
                      with_complex: bool = True) -> Path:
    """Write spectrum rows with header frequency,magnitude[,real,imag]."""
    fields = ["frequency", "magnitude"] + (["real", "imag"] if with_complex else [])
    return save_to_csv(rows, filename, fields)


def save_pgm(image: np.ndarray, filename: PathLike) -> Path:
    """Save intensities in [0, 1] as an 8-bit binary (P5) PGM; values are clipped.

    Raises:
        IOError: If file writing fails
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"Expected a (height, width) image, got shape {image.shape}")
    pixels = np.round(np.clip(image, 0.0, 1.0) * 255).astype(np.uint8)
    height, width = pixels.shape

    try:
        filepath = _prepare(filename)
        with open(filepath, "wb") as f:
            f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            f.write(pixels.tobytes())
        logger.info(f"Saved {width}x{height} PGM to {filepath}")
        return filepath
    except Exception as e:
        logger.error(f"Failed to save PGM: {e}")
        raise IOError(f"Failed to save PGM file: {e}")


def format_results_table(reports: Sequence[TrainReport]) -> str:
    """Plain-text table with MSE, #params and #mem per family."""
    header = f"{'Model':<14}{'MSE':>12}{'#params':>10}{'#mem':>9}"
    lines = [header, "-" * len(header)]
    for report in reports:
        lines.append(
            f"{report.config.get('family', '?'):<14}"
            f"{report.final_mse:>12.3e}"
            f"{report.params:>10d}"
            f"{report.mem_saving:>8.1f}%"
        )
    return "\n".join(lines)
