"""
Superresolution: evaluate a trained 2-D model on a denser pixel-center grid,
plus nearest and bilinear interpolation baselines.
"""
from typing import Sequence

import numpy as np

from src.config import IMAGE_SIDE, get_logger
from src.models import SignalDataset
from src.nn.layers import LayerStack
from src.services.datasets import image_grid
from src.services.families import ModelError

logger = get_logger(__name__)

INTERP_METHODS = ("nearest", "bilinear")


def superresolve(model: LayerStack, factor: int, grid_shape: Sequence[int] = (IMAGE_SIDE, IMAGE_SIDE)) -> SignalDataset:
    """Predict the image on a grid `factor` times denser than `grid_shape`.

    factor=1 evaluates exactly the training coordinates.

    Raises:
        ModelError: If the model does not take 2-D coordinates
        ValueError: If factor < 1
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if model.config is not None and model.config.d_in != 2:
        raise ModelError(f"Superresolution needs a 2-D model, this one has d_in={model.config.d_in}")
    height, width = (int(s) * factor for s in grid_shape)
    coords = image_grid(height, width)
    model.eval()
    values = model.forward(coords)
    logger.info(f"Superresolved to {height}x{width} (factor {factor})")
    return SignalDataset(
        coords=coords,
        values=values,
        grid_shape=(height, width),
        value_range=(float(values.min()), float(values.max())),
        target_range=(0.0, 1.0),
        name=f"superres_x{factor}",
    )


def _bilinear_axis(size: int, factor: int):
    # output pixel centers expressed in input pixel-index units
    u = (np.arange(size * factor) + 0.5) / factor - 0.5
    if size == 1:
        return np.zeros_like(u, dtype=int), np.zeros_like(u, dtype=int), np.zeros_like(u)
    i0 = np.clip(np.floor(u).astype(int), 0, size - 2)
    return i0, i0 + 1, u - i0


def interp_baseline(image: np.ndarray, method: str, factor: int) -> np.ndarray:
    """Upsample a grayscale image by `factor` with pixel-center alignment.

    Bilinear extrapolates linearly past the outermost pixel centers, so any
    linear ramp is reproduced exactly.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"Expected a (height, width) image, got shape {image.shape}")
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if method == "nearest":
        return np.repeat(np.repeat(image, factor, axis=0), factor, axis=1)
    if method != "bilinear":
        raise ValueError(f"Unknown interpolation method '{method}'; use one of {INTERP_METHODS}")

    r0, r1, tr = _bilinear_axis(image.shape[0], factor)
    c0, c1, tc = _bilinear_axis(image.shape[1], factor)
    rows = image[r0] * (1 - tr)[:, None] + image[r1] * tr[:, None]
    return rows[:, c0] * (1 - tc)[None, :] + rows[:, c1] * tc[None, :]
