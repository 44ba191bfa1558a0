"""
Data models for the toolkit.
"""
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, Any, List, Optional, Tuple

import numpy as np

from src.config import BAND_CUTOFF, DEFAULT_EPOCHS


class Family(str, Enum):
    QIREN = "qiren"
    RELU = "relu"
    TANH = "tanh"
    RELU_RFF = "relu_rff"
    SIREN = "siren"
    PURE_QUANTUM = "pure_quantum"


# Per-family defaults reproducing the signal-representation architectures
FAMILY_DEFAULTS: Dict[Family, Dict[str, Any]] = {
    Family.QIREN: {"hidden_dim": 8, "depth": 3, "qubits": 8, "reuploads": 3, "blocks": 2,
                   "batchnorm": True},
    Family.RELU: {"hidden_dim": 10, "depth": 6, "batchnorm": True},
    Family.TANH: {"hidden_dim": 10, "depth": 6, "batchnorm": True},
    Family.RELU_RFF: {"hidden_dim": 10, "depth": 6, "batchnorm": True, "rff_features": 5},
    Family.SIREN: {"hidden_dim": 10, "depth": 6, "batchnorm": False},
    Family.PURE_QUANTUM: {"qubits": 8, "reuploads": 3, "blocks": 1, "batchnorm": False},
}


@dataclass
class ModelConfig:
    """Configuration of one model family instance.

    Attributes:
        family: Model family
        d_in: Coordinate dimension (1 for sound, 2 for images)
        d_out: Signal dimension
        hidden_dim: Width of hidden Linear layers
        depth: Hidden layers (MLPs) or hybrid layers N (QIREN)
        qubits: Qubits per circuit d_h
        reuploads: Data re-uploads L
        blocks: Blocks per parameter layer K
        entangler: "CNOT_ring" or "CZ_ring"
        noise_bound: Measurement-noise bound
        seed: Seed for every random draw of the model
        batchnorm: Whether BatchNorm follows each hidden Linear layer
        rff_features: Number of random frequencies m of the RFF layer
        rff_sigma: Standard deviation of the RFF mapping
        omega0: SIREN frequency multiplier
        preparation: Fixed layer before the first encoding of every circuit
    """
    family: str
    d_in: int
    d_out: int = 1
    hidden_dim: int = 10
    depth: int = 6
    qubits: int = 8
    reuploads: int = 3
    blocks: int = 2
    entangler: str = "CNOT_ring"
    noise_bound: float = 0.0
    seed: int = 0
    batchnorm: bool = True
    rff_features: int = 5
    rff_sigma: float = 10.0
    omega0: float = 30.0
    preparation: str = "hadamard"

    @classmethod
    def for_family(cls, family: str, d_in: int, d_out: int = 1, **overrides: Any) -> "ModelConfig":
        """Config with the family's default architecture, then `overrides`."""
        values: Dict[str, Any] = dict(FAMILY_DEFAULTS.get(Family(family), {}))
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(family=Family(family).value, d_in=d_in, d_out=d_out, **values)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the config to a dictionary for JSON serialization."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        """Create a ModelConfig from a dictionary."""
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})

    def __str__(self) -> str:
        return f"{self.family} (d_in={self.d_in}, d_out={self.d_out}, seed={self.seed})"


@dataclass
class SignalDataset:
    """Coordinate/value pairs sampled on a regular grid.

    Attributes:
        coords: Coordinates in [-1, 1]^d_in, shape (n, d_in)
        values: Normalized signal values, shape (n, d_out)
        grid_shape: Grid the rows enumerate in row-major order, e.g. (1000,) or (32, 32)
        value_range: (min, max) of the raw signal before normalization
        target_range: Interval the values were mapped to
        name: Human-readable source name
    """
    coords: np.ndarray
    values: np.ndarray
    grid_shape: Tuple[int, ...]
    value_range: Tuple[float, float] = (0.0, 1.0)
    target_range: Tuple[float, float] = (-1.0, 1.0)
    name: str = ""

    @property
    def size(self) -> int:
        return int(self.coords.shape[0])

    @property
    def d_in(self) -> int:
        return int(self.coords.shape[1])

    @property
    def d_out(self) -> int:
        return int(self.values.shape[1])

    def metadata(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "grid_shape": list(self.grid_shape),
            "value_range": list(self.value_range),
            "target_range": list(self.target_range),
            "size": self.size,
        }

    def __str__(self) -> str:
        shape = "x".join(str(s) for s in self.grid_shape)
        return f"{self.name or 'signal'} ({shape}, {self.size} samples)"


@dataclass
class TrainReport:
    """Outcome of one training run.

    Attributes:
        losses: Train-mode loss per epoch
        final_mse: Eval-mode MSE on the full dataset after training
        wall_time: Seconds spent training
        seed: Seed of the run
        config: Model configuration snapshot
        params: Trainable parameter count
        mem_saving: Memory saved versus the grid, percent
        epochs: Number of epochs run
    """
    losses: List[float]
    final_mse: float
    wall_time: float
    seed: int
    config: Dict[str, Any]
    params: int
    mem_saving: float
    epochs: int
    dataset: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the report to a dictionary for JSON serialization."""
        return asdict(self)

    def deterministic_dict(self) -> Dict[str, Any]:
        """Report contents without wall time; equal across runs with the same seed."""
        data = self.to_dict()
        data.pop("wall_time")
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainReport":
        """Create a TrainReport from a dictionary."""
        return cls(
            losses=list(data.get("losses", [])),
            final_mse=data.get("final_mse", float("nan")),
            wall_time=data.get("wall_time", 0.0),
            seed=data.get("seed", 0),
            config=data.get("config", {}),
            params=data.get("params", 0),
            mem_saving=data.get("mem_saving", 0.0),
            epochs=data.get("epochs", 0),
            dataset=data.get("dataset", {}),
        )

    def __str__(self) -> str:
        family = self.config.get("family", "?")
        return f"{family} seed={self.seed}: MSE={self.final_mse:.3e} after {self.epochs} epochs"


@dataclass
class RunConfig:
    """Resolved settings of one CLI invocation."""
    subcommand: str
    family: str = "qiren"
    data: Optional[str] = None
    checkpoint: Optional[str] = None
    epochs: int = DEFAULT_EPOCHS
    seeds: List[int] = field(default_factory=lambda: [0])
    lr: Optional[float] = None
    qubits: Optional[int] = None
    reuploads: Optional[int] = None
    blocks: Optional[int] = None
    entangler: Optional[str] = None
    noise: Optional[float] = None
    cutoff: float = BAND_CUTOFF
    factor: int = 2
    out: str = "runs"
    threads: int = 1
    full: bool = False

    def to_dict(self) -> Dict[str, Any]:
        """Convert the config to a dictionary for JSON serialization."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Create a RunConfig from a dictionary, rejecting unknown keys."""
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise KeyError(f"Unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)
