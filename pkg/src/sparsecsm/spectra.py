"""Welch-style cross-spectral matrix estimation.

Each block of ``fft_block`` samples is multiplied by a periodic von Hann
window and transformed with numpy's real FFT.  Spectra are scaled by

    sqrt(2 / (fft_block * sum(window**2)))

so that a white channel of unit variance carries an expected power of
``2 / fft_block`` in every bin, i.e. its ``fft_block / 2`` positive-frequency
bins add up to one.  A sinusoid of RMS 1 centred on a bin therefore shows
2/3 in that bin and 1/6 in each neighbour (the Hann main lobe).
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .errors import InsufficientDataError, ParameterError

_CHUNK = 512


@dataclass(frozen=True)
class CrossSpectralMatrix:
    C: np.ndarray
    band_centre: float
    block_count: int

    @property
    def n(self):
        return self.C.shape[0]

    def hermitian_defect(self):
        scale = np.linalg.norm(self.C)
        if scale == 0:
            return 0.0
        return float(np.linalg.norm(self.C - self.C.conj().T) / scale)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.C).min())


def hann(fft_block):
    return get_window("hann", fft_block, fftbins=True)


def spectrum_scale(window):
    return np.sqrt(2.0 / (len(window) * np.sum(window**2)))


def hop_length(fft_block, overlap):
    if not 0 <= overlap < 1:
        raise ParameterError("overlap must be in [0, 1)")
    hop = (1.0 - overlap) * fft_block
    if abs(hop - round(hop)) > 1e-9:
        raise ParameterError("overlap must give an integer hop length")
    return int(round(hop))


def block_spectra(signals, fft_block, overlap, window=None):
    """Yield scaled one-sided spectra in chunks of shape ``(n, blocks, bins)``."""
    x = np.atleast_2d(np.asarray(signals, dtype=np.float64))
    if x.shape[1] < fft_block:
        raise InsufficientDataError(
            f"need at least {fft_block} samples, got {x.shape[1]}"
        )
    w = hann(fft_block) if window is None else np.asarray(window, dtype=np.float64)
    scale = spectrum_scale(w)
    hop = hop_length(fft_block, overlap)
    frames = sliding_window_view(x, fft_block, axis=1)[:, ::hop, :]
    for start in range(0, frames.shape[1], _CHUNK):
        chunk = frames[:, start:start + _CHUNK, :]
        yield np.fft.rfft(chunk * w, axis=2) * scale


def welch_csm(signals, fft_block, overlap, band_index, band_centre=None):
    """Cross-spectral matrix of one frequency bin, averaged over all blocks."""
    x = np.atleast_2d(np.asarray(signals, dtype=np.float64))
    n = x.shape[0]
    if not 0 <= band_index <= fft_block // 2:
        raise ParameterError(f"band_index {band_index} outside [0, {fft_block // 2}]")
    acc = np.zeros((n, n), dtype=np.complex128)
    count = 0
    for blk in block_spectra(x, fft_block, overlap):
        c = blk[:, :, band_index]
        acc += c @ c.conj().T
        count += c.shape[1]
    C = acc / count
    C = 0.5 * (C + C.conj().T)
    return CrossSpectralMatrix(C, float("nan") if band_centre is None else band_centre, count)


def welch_power(signal, fft_block, overlap):
    """Averaged auto-power of one channel in every bin ``0 .. fft_block/2``."""
    total = None
    count = 0
    for blk in block_spectra(signal, fft_block, overlap):
        p = np.sum(np.abs(blk[0]) ** 2, axis=0)
        total = p if total is None else total + p
        count += blk.shape[1]
    return total / count


def csm_from_block_vectors(blocks):
    """``(1/K) sum_k c_k c_k^H`` from a ``(K, n)`` array of block spectra."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    C = blocks.T @ blocks.conj() / blocks.shape[0]
    return 0.5 * (C + C.conj().T)
