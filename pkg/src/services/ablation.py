"""
Ablation matrix over the hybrid model: BatchNorm, re-upload depth, measurement
noise, entangler ring and the pure quantum baseline.
"""
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.config import get_logger
from src.models import Family, ModelConfig, SignalDataset, TrainReport
from src.services.families import build_model
from src.services.training import train

logger = get_logger(__name__)

BATCHNORM_AXIS = (True, False)
REUPLOAD_AXIS = (1, 2, 3, 4)
NOISE_AXIS = (0.0, 0.05, 0.10, 0.15)
ENTANGLER_AXIS = ("CNOT_ring", "CZ_ring")
FAMILY_AXIS = (Family.QIREN.value, Family.PURE_QUANTUM.value)


@dataclass(frozen=True)
class AblationCell:
    """One point of the ablation matrix."""
    family: str = Family.QIREN.value
    batchnorm: bool = True
    reuploads: int = 3
    noise: float = 0.0
    entangler: str = "CNOT_ring"
    seed: int = 0

    def model_config(self, d_in: int, d_out: int = 1) -> ModelConfig:
        overrides: Dict[str, Any] = {
            "seed": self.seed,
            "reuploads": self.reuploads,
            "noise_bound": self.noise,
            "entangler": self.entangler,
        }
        if self.family == Family.QIREN.value:
            overrides["batchnorm"] = self.batchnorm
        return ModelConfig.for_family(self.family, d_in, d_out, **overrides)

    def label(self) -> str:
        return (f"{self.family} bn={'on' if self.batchnorm else 'off'} L={self.reuploads} "
                f"noise={self.noise:g} {self.entangler} seed={self.seed}")


@dataclass
class AblationResult:
    cell: AblationCell
    report: Optional[TrainReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = asdict(self.cell)
        row.update({
            "params": self.report.params if self.ok else "",
            "final_loss": self.report.losses[-1] if self.ok and self.report.losses else "",
            "final_mse": self.report.final_mse if self.ok else "",
            "status": "ok" if self.ok else "failed",
            "error": self.error or "",
        })
        return row


ABLATION_FIELDS = [
    "family", "batchnorm", "reuploads", "noise", "entangler", "seed",
    "params", "final_loss", "final_mse", "status", "error",
]


def ablation_matrix(
    seeds: Sequence[int] = (0,),
    batchnorm: Sequence[bool] = BATCHNORM_AXIS,
    reuploads: Sequence[int] = REUPLOAD_AXIS,
    noise: Sequence[float] = NOISE_AXIS,
    entangler: Sequence[str] = ENTANGLER_AXIS,
    family: Sequence[str] = FAMILY_AXIS,
    full: bool = False,
) -> List[AblationCell]:
    """Cells to run, for every seed.

    By default each axis is varied on its own around the base cell (QIREN,
    BatchNorm on, L=3, no noise, CNOT ring). With `full` the cartesian
    product is returned instead.
    """
    base = AblationCell()
    if full:
        cells = [
            AblationCell(f, bn if f == Family.QIREN.value else False, L, p, e)
            for f, bn, L, p, e in itertools.product(family, batchnorm, reuploads, noise, entangler)
        ]
    else:
        cells = [base]
        cells += [AblationCell(batchnorm=bn) for bn in batchnorm]
        cells += [AblationCell(reuploads=L) for L in reuploads]
        cells += [AblationCell(noise=p) for p in noise]
        cells += [AblationCell(entangler=e) for e in entangler]
        cells += [AblationCell(family=f, batchnorm=f == Family.QIREN.value) for f in family]

    unique: List[AblationCell] = []
    for cell in cells:
        if cell not in unique:
            unique.append(cell)
    return [AblationCell(**{**asdict(c), "seed": s}) for s in seeds for c in unique]


def _run_cell(cell: AblationCell, dataset: SignalDataset, epochs: int, lr: Optional[float]) -> AblationResult:
    try:
        model = build_model(cell.model_config(dataset.d_in, dataset.d_out))
        report = train(model, dataset, epochs, cell.seed, lr)
        logger.info(f"Ablation cell done: {cell.label()} MSE={report.final_mse:.3e}")
        return AblationResult(cell, report=report)
    except Exception as e:
        logger.warning(f"Ablation cell failed: {cell.label()}: {e}")
        return AblationResult(cell, error=str(e))


def ablate(
    cells: Sequence[AblationCell],
    dataset: SignalDataset,
    epochs: int,
    lr: Optional[float] = None,
    threads: int = 1,
) -> List[AblationResult]:
    """Train every cell; a failing cell is recorded and the run continues.

    Results are returned in the order of `cells`.
    """
    logger.info(f"Running {len(cells)} ablation cells on {dataset} with {threads} worker(s)")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda c: _run_cell(c, dataset, epochs, lr), cells))


def median_final_loss(results: Sequence[AblationResult], **match: Any) -> float:
    """Median last-epoch training loss over successful cells matching `match`."""
    losses = [
        r.report.losses[-1] if r.report.losses else r.report.final_mse
        for r in results
        if r.ok and all(getattr(r.cell, k) == v for k, v in match.items())
    ]
    return float(np.median(losses)) if losses else float("nan")


def ablation_directions(results: Sequence[AblationResult]) -> Dict[str, bool]:
    """Directional checks over the ablation results (median over seeds).

    batchnorm: BatchNorm-on final loss <= BatchNorm-off final loss.
    noise: noiseless final loss <= final loss at the largest noise bound.
    """
    checks: Dict[str, bool] = {}
    base = {"family": Family.QIREN.value, "reuploads": 3, "entangler": "CNOT_ring"}
    on = median_final_loss(results, batchnorm=True, noise=0.0, **base)
    off = median_final_loss(results, batchnorm=False, noise=0.0, **base)
    if np.isfinite(on) and np.isfinite(off):
        checks["batchnorm"] = on <= off
    noises = sorted({r.cell.noise for r in results if r.ok})
    if len(noises) > 1:
        quiet = median_final_loss(results, batchnorm=True, noise=noises[0], **base)
        loud = median_final_loss(results, batchnorm=True, noise=noises[-1], **base)
        if np.isfinite(quiet) and np.isfinite(loud):
            checks["noise"] = quiet <= loud
    for name, passed in checks.items():
        log = logger.info if passed else logger.warning
        log(f"Ablation direction '{name}': {'holds' if passed else 'violated'}")
    return checks
