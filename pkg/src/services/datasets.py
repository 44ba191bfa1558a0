"""
Dataset ingestion: sound (WAV/CSV), grayscale images (PGM) and synthetic targets.
"""
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.io import wavfile

from src.config import IMAGE_SIDE, SOUND_SAMPLES, get_logger
from src.models import SignalDataset

logger = get_logger(__name__)

PathLike = Union[str, Path]


class DatasetError(Exception):
    """Base exception for dataset loading errors."""
    pass


class UnsupportedFormatError(DatasetError):
    """Raised for file formats or encodings the loaders do not handle."""
    pass


# ============================================================================
# Coordinate grids
# ============================================================================

def pixel_centers(size: int) -> np.ndarray:
    """Coordinate of pixel k along an axis of `size` pixels: -1 + (2k + 1) / size."""
    return -1.0 + (2.0 * np.arange(size) + 1.0) / size


def image_grid(height: int, width: int) -> np.ndarray:
    """Row-major (row, col) pixel-center coordinates, shape (height * width, 2)."""
    rows, cols = np.meshgrid(pixel_centers(height), pixel_centers(width), indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=1)


def normalize_range(values: np.ndarray, low: float, high: float) -> Tuple[np.ndarray, Tuple[float, float]]:
    """Affine map of `values` onto [low, high]; a constant signal maps to 0."""
    vmin, vmax = float(np.min(values)), float(np.max(values))
    if vmax == vmin:
        logger.warning(f"Signal is constant ({vmin}); mapping every value to 0")
        return np.zeros_like(values, dtype=np.float64), (vmin, vmax)
    scaled = (np.asarray(values, dtype=np.float64) - vmin) / (vmax - vmin)
    return low + (high - low) * scaled, (vmin, vmax)


# ============================================================================
# Sound
# ============================================================================

def _read_wav(path: Path) -> np.ndarray:
    try:
        _, data = wavfile.read(path)
    except ValueError as e:
        raise UnsupportedFormatError(f"Cannot read WAV {path}: {e}") from e
    if data.ndim != 1:
        raise UnsupportedFormatError(f"{path} has {data.shape[1]} channels; only mono is supported")
    if data.dtype not in (np.uint8, np.int16):
        raise UnsupportedFormatError(f"{path} is {data.dtype}; only 8/16-bit PCM is supported")
    return data.astype(np.float64)


def _read_csv_column(path: Path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise DatasetError(f"Malformed CSV {path}: {e}") from e
    if data.shape[1] != 1:
        raise UnsupportedFormatError(f"{path} has {data.shape[1]} columns; expected one value per line")
    return data[:, 0]


def sound_dataset(samples: Sequence[float], n: int = SOUND_SAMPLES, name: str = "") -> SignalDataset:
    """Uniformly subsample `samples` to n points on linspace(-1, 1) with amplitudes in [-1, 1]."""
    samples = np.asarray(samples, dtype=np.float64)
    if n < 2:
        raise DatasetError(f"Need at least 2 samples, got n={n}")
    if samples.size < n:
        raise DatasetError(f"Signal has {samples.size} samples, {n} requested")
    if not np.all(np.isfinite(samples)):
        raise DatasetError("Signal contains non-finite values")
    index = np.round(np.linspace(0, samples.size - 1, n)).astype(int)
    values, value_range = normalize_range(samples[index], -1.0, 1.0)
    return SignalDataset(
        coords=np.linspace(-1.0, 1.0, n)[:, None],
        values=values[:, None],
        grid_shape=(n,),
        value_range=value_range,
        target_range=(-1.0, 1.0),
        name=name,
    )


def load_sound(path: PathLike, n: int = SOUND_SAMPLES) -> SignalDataset:
    """Load a mono PCM WAV (8/16-bit) or single-column CSV as a 1-D dataset.

    Raises:
        UnsupportedFormatError: For other encodings or extensions
        DatasetError: If the file is too short or malformed
    """
    filepath = Path(path)
    suffix = filepath.suffix.lower()
    if suffix == ".wav":
        samples = _read_wav(filepath)
    elif suffix in (".csv", ".txt"):
        samples = _read_csv_column(filepath)
    else:
        raise UnsupportedFormatError(f"Unsupported sound file: {filepath.name}")
    dataset = sound_dataset(samples, n, name=filepath.stem)
    logger.info(f"Loaded {dataset}")
    return dataset


# ============================================================================
# Images
# ============================================================================

def _pgm_tokens(data: bytes, count: int) -> Tuple[list, int]:
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DatasetError("PGM header ended early")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path: PathLike) -> Tuple[np.ndarray, int]:
    """Parse a P2 or P5 PGM file.

    Returns:
        Tuple of (pixel array of shape (height, width), maxval)
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic in (b"P3", b"P6"):
        raise UnsupportedFormatError(f"{path} is a color image; only grayscale PGM is supported")
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormatError(f"{path} is not a PGM file")

    try:
        (width, height, maxval), pos = _pgm_tokens(data[2:], 3)
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as e:
        raise DatasetError(f"Malformed PGM header in {path}") from e
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DatasetError(f"Invalid PGM dimensions or maxval in {path}")
    body = data[2 + pos:]

    count = width * height
    if magic == b"P2":
        try:
            pixels = np.array(body.split()[:count], dtype=np.int64)
        except ValueError as e:
            raise DatasetError(f"Malformed P2 pixel data in {path}") from e
    else:
        raster = body[1:]  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(raster) < count * dtype.itemsize:
            raise DatasetError(f"P5 raster in {path} is truncated")
        pixels = np.frombuffer(raster, dtype=dtype, count=count).astype(np.int64)
    if pixels.size != count:
        raise DatasetError(f"{path} declares {count} pixels, found {pixels.size}")
    if np.any(pixels > maxval):
        raise DatasetError(f"{path} has pixel values above maxval {maxval}")
    return pixels.reshape(height, width), maxval


def center_crop(image: np.ndarray, side: int) -> np.ndarray:
    height, width = image.shape
    top, left = (height - side) // 2, (width - side) // 2
    return image[top:top + side, left:left + side]


def box_downsample(image: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping factor x factor blocks."""
    side = image.shape[0] // factor
    return image[:side * factor, :side * factor].reshape(side, factor, side, factor).mean(axis=(1, 3))


def image_dataset(image: np.ndarray, side: int = IMAGE_SIDE, name: str = "") -> SignalDataset:
    """Build a 2-D dataset from grayscale intensities already in [0, 1]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise UnsupportedFormatError(f"Expected a grayscale (height, width) array, got shape {image.shape}")
    square = min(image.shape)
    if square > side:
        square = (square // side) * side
    image = center_crop(image, square)
    if square > side:
        image = box_downsample(image, square // side)
    height, width = image.shape
    return SignalDataset(
        coords=image_grid(height, width),
        values=image.reshape(-1, 1),
        grid_shape=(height, width),
        value_range=(float(image.min()), float(image.max())),
        target_range=(0.0, 1.0),
        name=name,
    )


def load_image(path: PathLike, side: int = IMAGE_SIDE) -> SignalDataset:
    """Load a grayscale PGM, center-crop to square and box-downsample to side x side.

    Intensities are divided by maxval, so they lie in [0, 1].
    """
    filepath = Path(path)
    pixels, maxval = read_pgm(filepath)
    dataset = image_dataset(pixels / maxval, side, name=filepath.stem)
    logger.info(f"Loaded {dataset}")
    return dataset


def load_dataset(path: PathLike) -> SignalDataset:
    """Dispatch on the file extension: .pgm is an image, anything else is sound."""
    if Path(path).suffix.lower() == ".pgm":
        return load_image(path)
    return load_sound(path)


def dataset_to_image(dataset: SignalDataset) -> np.ndarray:
    """Values of a 2-D dataset as a (height, width) array."""
    if len(dataset.grid_shape) != 2:
        raise DatasetError(f"{dataset} is not an image")
    return dataset.values[:, 0].reshape(dataset.grid_shape)


# ============================================================================
# Synthetic targets
# ============================================================================

def two_tone(n: int = 256, frequencies: Sequence[int] = (3, 17), name: str = "two_tone") -> SignalDataset:
    """Sum of unit sines with integer cycle counts over a periodic grid x_k = -1 + 2k/n."""
    x = -1.0 + 2.0 * np.arange(n) / n
    t = (x + 1.0) / 2.0
    signal = sum(np.sin(2 * np.pi * f * t) for f in frequencies)
    values, value_range = normalize_range(signal, -1.0, 1.0)
    return SignalDataset(
        coords=x[:, None],
        values=values[:, None],
        grid_shape=(n,),
        value_range=value_range,
        target_range=(-1.0, 1.0),
        name=name,
    )


def smooth_image(side: int = IMAGE_SIDE, seed: int = 0, waves: int = 3) -> np.ndarray:
    """Seeded sum of low-frequency cosines over pixel centers, scaled to [0, 1]."""
    rng = np.random.default_rng(seed)
    grid = image_grid(side, side)
    field = np.zeros(len(grid))
    for _ in range(waves):
        k = rng.uniform(0.5, 2.0, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        field += np.cos(np.pi * grid @ k + phase)
    image, _ = normalize_range(field, 0.0, 1.0)
    return image.reshape(side, side)
