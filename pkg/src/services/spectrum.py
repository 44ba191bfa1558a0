"""
Fourier-spectrum analysis: predicted spectra of re-uploading circuits,
the linear-encoding recursion, DFT extraction of circuit and model outputs,
and brick-wall band splitting of residuals.
"""
import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import SPECTRUM_OVERSAMPLING, SPECTRUM_THRESHOLD, get_logger
from src.models import SignalDataset
from src.nn.layers import LayerStack, LinearLayer, RFFLayer
from src.quantum.reuploading import CircuitParams, CircuitSpec, circuit_forward_batch

logger = get_logger(__name__)

_DEDUP_DECIMALS = 12


class SpectrumError(Exception):
    """Base exception for spectrum analysis errors."""
    pass


class AliasingError(SpectrumError):
    """Raised when a sampling grid cannot resolve the predicted frequencies."""
    pass


class GridError(SpectrumError):
    """Raised for non-uniform, too short or otherwise unusable grids."""
    pass


@dataclass
class FrequencySpectrum:
    """Sorted set of frequency vectors, optionally with complex coefficients.

    Attributes:
        frequencies: Shape (m, dim), rows sorted lexicographically, no duplicates
        coefficients: Shape (m,) complex, or None for a bare frequency set
    """
    frequencies: np.ndarray
    coefficients: Optional[np.ndarray] = None

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        order = np.lexsort(freqs.T[::-1]) if len(freqs) else np.arange(0)
        self.frequencies = freqs[order]
        if self.coefficients is not None:
            self.coefficients = np.asarray(self.coefficients, dtype=complex)[order]

    @property
    def size(self) -> int:
        return int(self.frequencies.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frequencies.shape[1])

    def values(self) -> np.ndarray:
        """Frequencies as a flat array (one-dimensional spectra only)."""
        if self.dim != 1:
            raise SpectrumError(f"values() needs a 1-D spectrum, this one has dimension {self.dim}")
        return self.frequencies[:, 0]

    def as_set(self) -> set:
        return {tuple(np.round(row, _DEDUP_DECIMALS)) for row in self.frequencies}

    def is_subset_of(self, other: "FrequencySpectrum") -> bool:
        return self.as_set() <= other.as_set()

    def is_conjugate_symmetric(self, tol: float = 1e-10) -> bool:
        """True if c(-n) == conj(c(n)) for every frequency present."""
        freq_set = self.as_set()
        if self.coefficients is None:
            return {tuple(-x for x in f) for f in freq_set} == freq_set
        lookup = {tuple(np.round(f, _DEDUP_DECIMALS)): c for f, c in zip(self.frequencies, self.coefficients)}
        for f, c in lookup.items():
            mirror = lookup.get(tuple(-x for x in f))
            if mirror is None or abs(mirror - np.conj(c)) > tol:
                return False
        return True

    def to_rows(self) -> List[Dict[str, float]]:
        """One CSV row per frequency: frequency, magnitude and the complex parts."""
        rows = []
        coeffs = self.coefficients if self.coefficients is not None else np.ones(self.size)
        for f, c in zip(self.frequencies, coeffs):
            rows.append({
                "frequency": float(f[0]) if self.dim == 1 else " ".join(f"{x:g}" for x in f),
                "magnitude": float(abs(c)),
                "real": float(np.real(c)),
                "imag": float(np.imag(c)),
            })
        return rows

    def __len__(self) -> int:
        return self.size


def _unique(values: np.ndarray) -> np.ndarray:
    return np.unique(np.round(values, _DEDUP_DECIMALS))


def _require_positive(**kwargs: int) -> None:
    for name, value in kwargs.items():
        if value < 1:
            raise SpectrumError(f"{name} must be >= 1, got {value}")


# ============================================================================
# Predicted spectra
# ============================================================================

def predicted_spectrum_plain(d: int, d_h: int, L: int) -> FrequencySpectrum:
    """Integer grid {-dL, ..., dL}^d_h reachable by d unit-weight wires per feature uploaded L times."""
    _require_positive(d=d, d_h=d_h, L=L)
    axis = np.arange(-d * L, d * L + 1)
    grid = np.array(list(itertools.product(axis, repeat=d_h)), dtype=np.float64)
    return FrequencySpectrum(grid)


def spectrum_recursion_linear(weights: Sequence[float]) -> FrequencySpectrum:
    """One encoding pass with linear weights: Omega(k) = {Omega(k-1) - w_k, Omega(k-1), Omega(k-1) + w_k}."""
    if len(weights) < 1:
        raise SpectrumError("At least one weight is required")
    omega = np.array([-weights[0], 0.0, weights[0]], dtype=np.float64)
    for w in weights[1:]:
        omega = _unique(np.concatenate([omega - w, omega, omega + w]))
    return FrequencySpectrum(_unique(omega))


def check_nondegeneracy(weights: Sequence[float]) -> List[bool]:
    """Per weight, whether it exceeds twice the reach of all earlier weights.

    When every entry is True the one-pass spectrum has exactly 3^d frequencies.
    """
    result = []
    reach = 0.0
    for w in weights:
        result.append(bool(abs(w) > 2 * reach))
        reach += abs(w)
    return result


def predicted_spectrum_linear(weights: Sequence[float], L: int) -> FrequencySpectrum:
    """Spectrum of a feature encoded with `weights` and uploaded L times (L-fold sum of one pass)."""
    _require_positive(L=L)
    single = spectrum_recursion_linear(weights).values()
    total = np.zeros(1)
    for _ in range(L):
        total = _unique((total[:, None] + single[None, :]).ravel())
    return FrequencySpectrum(total)


def claim2_spectrum_size(d: int, d_h: int, L: int) -> int:
    """Spectrum size with non-degenerate linear encoding: ((3^d - 1) L + 1)^d_h."""
    _require_positive(d=d, d_h=d_h, L=L)
    return ((3 ** d - 1) * L + 1) ** d_h


def plain_spectrum_size(d: int, d_h: int, L: int) -> int:
    _require_positive(d=d, d_h=d_h, L=L)
    return (2 * d * L + 1) ** d_h


# ============================================================================
# Empirical spectra
# ============================================================================

def max_circuit_frequency(spec: CircuitSpec) -> float:
    """Largest frequency along one input axis: L times the summed encoding weights."""
    return spec.reuploads * float(np.sum(np.abs(spec.encoding_weights)))


def circuit_dft(
    spec: CircuitSpec,
    params: CircuitParams,
    axis: int = 0,
    grid_size: Optional[int] = None,
    seed: int = 0,
    output: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Full DFT of one circuit output sampled along input `axis` on a uniform [0, 2pi) grid.

    The remaining inputs are held at seeded random values in [-pi, pi).

    Returns:
        Tuple of (integer frequencies, complex coefficients) in FFT order

    Raises:
        SpectrumError: If the circuit is noisy or the axis/output is out of range
        GridError: If the encoding weights are not integers
        AliasingError: If grid_size cannot resolve the predicted frequencies
    """
    if spec.noise_bound > 0:
        raise SpectrumError("Spectrum extraction needs a noiseless circuit")
    if not 0 <= axis < spec.num_qubits:
        raise SpectrumError(f"axis {axis} out of range for {spec.num_qubits} inputs")
    if not 0 <= output < spec.num_outputs:
        raise SpectrumError(f"output {output} out of range for {spec.num_outputs} outputs")
    weights = np.asarray(spec.encoding_weights)
    if not np.allclose(weights, np.round(weights)):
        raise GridError("DFT extraction on a 2pi-periodic grid needs integer encoding weights")

    max_freq = int(round(max_circuit_frequency(spec)))
    if grid_size is None:
        grid_size = SPECTRUM_OVERSAMPLING * (2 * max_freq + 1)
    if grid_size <= 2 * max_freq:
        raise AliasingError(
            f"grid_size {grid_size} cannot resolve frequencies up to {max_freq}; need > {2 * max_freq}"
        )

    rng = np.random.default_rng(seed)
    fixed = rng.uniform(-np.pi, np.pi, size=spec.num_qubits)
    inputs = np.tile(fixed, (grid_size, 1))
    inputs[:, axis] = 2 * np.pi * np.arange(grid_size) / grid_size

    samples = circuit_forward_batch(spec, params, inputs)[:, output]
    coeffs = np.fft.fft(samples) / grid_size
    freqs = np.round(np.fft.fftfreq(grid_size, d=1.0 / grid_size)).astype(int)
    return freqs, coeffs


def extract_circuit_spectrum(
    spec: CircuitSpec,
    params: CircuitParams,
    axis: int = 0,
    grid_size: Optional[int] = None,
    seed: int = 0,
    output: int = 0,
    threshold: float = SPECTRUM_THRESHOLD,
) -> FrequencySpectrum:
    """Frequencies along `axis` whose DFT coefficient exceeds `threshold`."""
    freqs, coeffs = circuit_dft(spec, params, axis, grid_size, seed, output)
    keep = np.abs(coeffs) > threshold
    logger.debug(f"Extracted {int(keep.sum())} frequencies along axis {axis}")
    return FrequencySpectrum(freqs[keep].astype(np.float64), coeffs[keep])


def out_of_support_mass(freqs: np.ndarray, coeffs: np.ndarray, support: FrequencySpectrum) -> float:
    """Largest coefficient magnitude at a frequency outside `support`."""
    allowed = set(np.round(support.values(), _DEDUP_DECIMALS))
    outside = [abs(c) for f, c in zip(freqs, coeffs) if round(float(f), _DEDUP_DECIMALS) not in allowed]
    return float(max(outside, default=0.0))


def _uniform_1d(dataset: SignalDataset) -> np.ndarray:
    if dataset.d_in != 1:
        raise GridError(f"Spectrum of a model output needs a 1-D dataset, got d_in={dataset.d_in}")
    x = dataset.coords[:, 0]
    if x.size < 2:
        raise GridError("Need at least two samples")
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12) or steps[0] <= 0:
        raise GridError("Coordinates do not form a uniform increasing grid")
    return x


def signal_spectrum(values: np.ndarray) -> FrequencySpectrum:
    """One-sided DFT of a real signal: bins 0..n//2, coefficients normalized by n."""
    values = np.asarray(values, dtype=np.float64).ravel()
    coeffs = np.fft.rfft(values) / values.size
    return FrequencySpectrum(np.arange(coeffs.size, dtype=np.float64), coeffs)


def model_output_spectrum(model: LayerStack, dataset: SignalDataset, output: int = 0) -> FrequencySpectrum:
    """DFT of model predictions over a 1-D uniform dataset grid.

    Raises:
        GridError: If the dataset is not a uniform 1-D grid
    """
    _uniform_1d(dataset)
    model.eval()
    pred = model.forward(dataset.coords)[:, output]
    return signal_spectrum(pred)


def fourier_series_eval(spectrum: FrequencySpectrum, x: np.ndarray) -> np.ndarray:
    """Evaluate sum_n c_n exp(i 2pi n.x) at points `x` of shape (batch, dim); real part."""
    if spectrum.coefficients is None:
        raise SpectrumError("Fourier-series evaluation needs coefficients")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    phase = 2 * np.pi * x @ spectrum.frequencies.T
    return np.real(np.exp(1j * phase) @ spectrum.coefficients)


def rff_fourier_series(rff: RFFLayer, readout: LinearLayer, output: int = 0) -> FrequencySpectrum:
    """Explicit Fourier series of readout(RFF(x)) for one output.

    a cos(2pi m.x) + b sin(2pi m.x) contributes (a - ib)/2 at +m and (a + ib)/2 at -m.
    """
    m = rff.mapping.shape[0]
    a = readout.weight[output, :m]
    b = readout.weight[output, m:]
    freqs = np.vstack([np.zeros((1, rff.in_features)), rff.mapping, -rff.mapping])
    coeffs = np.concatenate([[readout.bias[output]], (a - 1j * b) / 2, (a + 1j * b) / 2])
    # merges coincident frequencies
    keys: Dict[tuple, complex] = {}
    for f, c in zip(freqs, coeffs):
        key = tuple(np.round(f, _DEDUP_DECIMALS))
        keys[key] = keys.get(key, 0.0) + c
    return FrequencySpectrum(np.array(list(keys)), np.array(list(keys.values())))


# ============================================================================
# Band splitting
# ============================================================================

def band_split(signal: np.ndarray, cutoff: float) -> Tuple[np.ndarray, np.ndarray]:
    """Brick-wall split at cutoff x Nyquist; low + high reconstructs `signal`.

    Raises:
        SpectrumError: If cutoff is outside (0, 1)
        GridError: If the signal has fewer than 4 samples
    """
    if not 0 < cutoff < 1:
        raise SpectrumError(f"cutoff must be in (0, 1), got {cutoff}")
    signal = np.asarray(signal, dtype=np.float64)
    n = signal.shape[0]
    if n < 4:
        raise GridError(f"Band split needs at least 4 samples, got {n}")
    spectrum = np.fft.fft(signal, axis=0)
    low_mask = np.abs(np.fft.fftfreq(n)) <= cutoff * 0.5
    low_mask = low_mask.reshape((n,) + (1,) * (signal.ndim - 1))
    low = np.real(np.fft.ifft(np.where(low_mask, spectrum, 0), axis=0))
    high = np.real(np.fft.ifft(np.where(low_mask, 0, spectrum), axis=0))
    return low, high


def band_errors(pred: np.ndarray, target: np.ndarray, cutoff: float) -> Dict[str, float]:
    """Split the squared error of `pred` into low-band, high-band and cross terms.

    low + high + cross == total (the mean squared error).
    """
    residual = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    low, high = band_split(residual, cutoff)
    return {
        "low": float(np.mean(low ** 2)),
        "high": float(np.mean(high ** 2)),
        "cross": float(2 * np.mean(low * high)),
        "total": float(np.mean(residual ** 2)),
    }
