"""
Configuration constants and environment variable loading for the toolkit.
"""
import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Set up logging (the default handler writes to stderr)
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(name)s - %(message)s'
)

def get_logger(name: str) -> logging.Logger:
    """Get a logger instance with the given name."""
    return logging.getLogger(name)


# ============================================================================
# Constants
# ============================================================================

# Adam optimizer (betas and epsilon as used for all signal-representation runs)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8

# Learning rates per parameter group
LR_CLASSICAL = 5e-4
LR_QUANTUM = 5e-3

# BatchNorm
BATCHNORM_EPSILON = 1e-5
BATCHNORM_MOMENTUM = 0.1

# Random Fourier features and SIREN
RFF_SIGMA = 10.0
SIREN_OMEGA0 = 30.0

# Spectrum analysis
SPECTRUM_THRESHOLD = 1e-8
SPECTRUM_OVERSAMPLING = 4
BAND_CUTOFF = 0.25

# Checkpoint format
CHECKPOINT_MAGIC = b"QIRN"
CHECKPOINT_VERSION = 1

# Datasets
SOUND_SAMPLES = 1000
IMAGE_SIDE = 32

# Training
DEFAULT_EPOCHS = 300

# Default output filenames
DEFAULT_CHECKPOINT = "model.qirn"
DEFAULT_REPORT_JSON = "report.json"
DEFAULT_LOSS_CSV = "loss.csv"
DEFAULT_SPECTRUM_CSV = "spectrum.csv"
DEFAULT_ABLATION_CSV = "ablation.csv"
DEFAULT_SUPERRES_PGM = "superres.pgm"

# Training log cadence
LOG_EVERY_EPOCHS = 50


# ============================================================================
# Environment Variables
# ============================================================================

def get_default_seed() -> int:
    """Get the default seed from the QIREN_SEED environment variable."""
    return int(os.environ.get("QIREN_SEED", "0"))


def get_default_threads() -> int:
    """Get the default worker count from the QIREN_THREADS environment variable."""
    return max(1, int(os.environ.get("QIREN_THREADS", "1")))


def get_output_dir() -> str:
    """Get the default output directory from the QIREN_OUT environment variable."""
    return os.environ.get("QIREN_OUT", "runs")
