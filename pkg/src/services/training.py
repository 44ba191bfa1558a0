"""
Training harness: full-batch Adam training with MSE loss, eval-mode scoring
and the repeat-and-take-best protocol.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.config import LOG_EVERY_EPOCHS, get_logger
from src.models import ModelConfig, SignalDataset, TrainReport
from src.nn.layers import LayerStack, NonFiniteGradientError
from src.nn.optim import Adam, backprop, mse_loss
from src.services.families import build_model, memory_saving

logger = get_logger(__name__)


class TrainingDivergedError(Exception):
    """Raised when the loss or a gradient stops being finite."""

    def __init__(self, epoch: int, layer: Optional[str] = None, detail: str = ""):
        self.epoch = epoch
        self.layer = layer
        where = f" in {layer}" if layer is not None else ""
        super().__init__(f"Training diverged at epoch {epoch}{where}" + (f": {detail}" if detail else ""))


def evaluate_mse(model: LayerStack, dataset: SignalDataset) -> float:
    """Eval-mode MSE over the whole dataset."""
    model.eval()
    loss, _ = mse_loss(model.forward(dataset.coords), dataset.values)
    return loss


def _first_nonfinite_layer(model: LayerStack, inputs: np.ndarray) -> Optional[str]:
    out = inputs
    for i, layer in enumerate(model.layers):
        out = layer.forward(out)
        if not np.all(np.isfinite(out)):
            return f"layer {i} ({layer!r})"
    return None


def _batches(n: int, batch_size: Optional[int], rng: np.random.Generator) -> List[np.ndarray]:
    if batch_size is None or batch_size >= n:
        return [np.arange(n)]
    order = rng.permutation(n)
    return np.array_split(order, int(np.ceil(n / batch_size)))


def train(
    model: LayerStack,
    dataset: SignalDataset,
    epochs: int,
    seed: int = 0,
    lr: Optional[float] = None,
    batch_size: Optional[int] = None,
) -> TrainReport:
    """Train `model` on `dataset` and report the loss curve and final eval-mode MSE.

    Args:
        model: Model built by build_model
        dataset: Training data
        epochs: Number of passes over the data (0 scores the initial model)
        seed: Seed for mini-batch order; full-batch training draws nothing
        lr: Single learning rate for every group, or None for the per-group defaults
        batch_size: Mini-batch size, or None for full batch

    Returns:
        TrainReport for the run

    Raises:
        TrainingDivergedError: If the loss or a gradient becomes NaN or infinite
    """
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    rng = np.random.default_rng(seed)
    optimizer = Adam(model, lr=lr)
    losses: List[float] = []
    start = time.perf_counter()

    for epoch in range(epochs):
        model.train()
        epoch_loss = 0.0
        for index in _batches(dataset.size, batch_size, rng):
            loss, grads = backprop(model, dataset.coords[index], dataset.values[index])
            if not np.isfinite(loss):
                layer = _first_nonfinite_layer(model, dataset.coords[index])
                raise TrainingDivergedError(epoch, layer, "loss is not finite")
            try:
                optimizer.step(grads)
            except NonFiniteGradientError as e:
                raise TrainingDivergedError(epoch, e.parameter, "gradient is not finite") from e
            epoch_loss += loss * len(index) / dataset.size
        losses.append(epoch_loss)
        logger.debug(f"epoch {epoch + 1}/{epochs}: loss={epoch_loss:.6e}")
        if (epoch + 1) % LOG_EVERY_EPOCHS == 0:
            logger.info(f"Epoch {epoch + 1}/{epochs}: loss={epoch_loss:.6e}")

    final_mse = evaluate_mse(model, dataset)
    if not np.isfinite(final_mse):
        layer = _first_nonfinite_layer(model, dataset.coords)
        raise TrainingDivergedError(epochs, layer, "evaluation MSE is not finite")
    wall_time = time.perf_counter() - start

    config = model.config.to_dict() if model.config is not None else {}
    report = TrainReport(
        losses=losses,
        final_mse=final_mse,
        wall_time=wall_time,
        seed=seed,
        config=config,
        params=model.num_params,
        mem_saving=memory_saving(model.num_params, dataset.values.size),
        epochs=epochs,
        dataset=dataset.metadata(),
    )
    logger.info(f"Trained {report}")
    return report


def _train_seed(config: ModelConfig, dataset: SignalDataset, epochs: int, seed: int,
                lr: Optional[float]) -> Tuple[TrainReport, LayerStack]:
    model = build_model(replace(config, seed=seed))
    return train(model, dataset, epochs, seed, lr), model


def train_best_of(
    config: ModelConfig,
    dataset: SignalDataset,
    epochs: int,
    seeds: Sequence[int],
    lr: Optional[float] = None,
    threads: int = 1,
) -> Tuple[TrainReport, LayerStack, List[TrainReport]]:
    """Train one fresh model per seed and keep the lowest final MSE (first seed wins ties).

    Returns:
        Tuple of (best report, best model, reports in seed order)
    """
    if not seeds:
        raise ValueError("At least one seed is required")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda s: _train_seed(config, dataset, epochs, s, lr), seeds))
    reports = [r for r, _ in results]
    best = int(np.argmin([r.final_mse for r in reports]))
    logger.info(f"Best of {len(seeds)} seeds: seed {reports[best].seed} (MSE={reports[best].final_mse:.3e})")
    return reports[best], results[best][1], reports
