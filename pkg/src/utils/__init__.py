# Utils package
from .validators import (
    validate_model_config,
    validate_run_config,
    validate_dataset,
    dataset_report,
    format_dataset_report,
    print_dataset_report,
)

__all__ = [
    "validate_model_config",
    "validate_run_config",
    "validate_dataset",
    "dataset_report",
    "format_dataset_report",
    "print_dataset_report",
]
