# Services package
from .families import build_model, count_params, memory_saving
from .checkpoint import save_checkpoint, load_checkpoint
from .datasets import load_sound, load_image
from .training import train, train_best_of
from .superres import superresolve, interp_baseline
from .ablation import ablate, ablation_matrix
from .file_exporter import save_to_json, save_to_csv, save_pgm

__all__ = [
    "build_model",
    "count_params",
    "memory_saving",
    "save_checkpoint",
    "load_checkpoint",
    "load_sound",
    "load_image",
    "train",
    "train_best_of",
    "superresolve",
    "interp_baseline",
    "ablate",
    "ablation_matrix",
    "save_to_json",
    "save_to_csv",
    "save_pgm",
]
