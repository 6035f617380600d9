"""Synthetic microphone data for a scenario.

Sources emit uncorrelated white noise.  The default path works directly in
the frequency domain: for every Welch block it draws circular complex
Gaussian source amplitudes at the reference point and propagates them to
the microphones with the steering matrix.  :func:`simulate_time_signals`
builds the equivalent time-domain recordings for :func:`welch_csm`.

All randomness comes from counter-style streams keyed by
``(seed, stream, chunk)``, so any chunk of blocks can be regenerated on
its own and results do not depend on evaluation order.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .propagation import build_steering_matrix
from .scenario import ArrayGeometry
from .spectra import CrossSpectralMatrix, welch_csm

CHUNK_BLOCKS = 1024

_STREAM_SOURCES = 1
_STREAM_NOISE = 2
_STREAM_POSITIONS = 3
_STREAM_TIME = 4


def rng_for(seed, stream, chunk=0):
    ss = np.random.SeedSequence([int(seed), stream, int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def _circular_normal(rng, shape, power):
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(np.asarray(power) / 2.0)


@dataclass(frozen=True)
class SnapRecord:
    source: int
    grid_index: int
    distance: float


def snap_sources(scenario, tol=1e-9):
    """Map every source to its nearest grid node; warn when it is off-grid."""
    records = []
    for k, src in enumerate(scenario.sources):
        idx, dist = scenario.grid.nearest(src.position)
        if dist > tol:
            warnings.warn(
                f"source {k} at {src.position} snapped to grid node {idx + 1} "
                f"({dist:.3g} m away)",
                stacklevel=2,
            )
        records.append(SnapRecord(k, idx, dist))
    return records


def source_band_powers(scenario, records=None):
    """Per-band auto-power of every source at the reference point.

    A source of RMS ``q`` at 1 m gives ``q**2 / r0**2`` at the reference
    point, spread evenly over the ``fft_block / 2`` positive bands.
    """
    if records is None:
        records = snap_sources(scenario)
    pts = scenario.grid.points()
    ref = scenario.reference_point
    out = np.empty(len(records))
    for k, rec in enumerate(records):
        r0 = np.linalg.norm(pts[rec.grid_index] - ref)
        q = scenario.sources[rec.source].rms_at_1m
        out[k] = q**2 / (r0**2 * scenario.n_bands)
    return out


def true_solution(scenario):
    """Diagonal of the exact source matrix, as a complex ``m``-vector."""
    records = snap_sources(scenario)
    x = np.zeros(scenario.grid.size, dtype=np.complex128)
    for rec, p in zip(records, source_band_powers(scenario, records)):
        x[rec.grid_index] += p
    return x


def perturb_mic_positions(geometry, avg_deviation, seed, normal="z"):
    """Displace every mic inside the array plane.

    Displacements are isotropic 2-D Gaussian with per-axis standard
    deviation ``avg_deviation / sqrt(pi / 2)``, which makes the mean
    displacement length equal ``avg_deviation``.
    """
    pos = np.array(geometry.mic_positions, dtype=np.float64)
    if avg_deviation == 0:
        return ArrayGeometry(pos)
    axes = [k for k in range(3) if k != "xyz".index(normal)]
    sigma = avg_deviation / np.sqrt(np.pi / 2.0)
    rng = rng_for(seed, _STREAM_POSITIONS)
    pos[:, axes] += sigma * rng.standard_normal((pos.shape[0], 2))
    return ArrayGeometry(pos)


def true_geometry(scenario):
    """Geometry the data is synthesised with (perturbed when configured)."""
    err = scenario.mic_position_error
    if err is None or err.avg_deviation == 0:
        return scenario.geometry
    return perturb_mic_positions(scenario.geometry, err.avg_deviation, err.seed,
                                 scenario.grid.normal)


def _block_chunks(scenario, seed):
    """Yield ``(K_chunk, n)`` arrays of block spectra in a fixed order."""
    records = snap_sources(scenario)
    powers = source_band_powers(scenario, records)
    n = scenario.geometry.n
    if records:
        a_true = build_steering_matrix(scenario, true_geometry(scenario).mic_positions)
        cols = a_true[:, [r.grid_index for r in records]]
    noise = scenario.noise
    noise_power = noise.rms**2 / scenario.n_bands if noise is not None else 0.0
    total = scenario.block_count
    for chunk, start in enumerate(range(0, total, CHUNK_BLOCKS)):
        size = min(CHUNK_BLOCKS, total - start)
        c = np.zeros((size, n), dtype=np.complex128)
        if records:
            x = _circular_normal(rng_for(seed, _STREAM_SOURCES, chunk),
                                 (size, len(records)), powers)
            c += x @ cols.T
        if noise_power > 0:
            c += _circular_normal(rng_for(noise.seed, _STREAM_NOISE, chunk),
                                  (size, n), noise_power)
        yield c


def synthesize_block_spectra(scenario, seed):
    """All ``K`` microphone spectra of the analysis band, shape ``(K, n)``."""
    chunks = list(_block_chunks(scenario, seed))
    if not chunks:
        return np.zeros((0, scenario.geometry.n), dtype=np.complex128)
    return np.concatenate(chunks, axis=0)


def estimate_csm(scenario, seed):
    """``C = (1/K) sum_k c_k c_k^H`` over the synthesised blocks."""
    n = scenario.geometry.n
    acc = np.zeros((n, n), dtype=np.complex128)
    count = 0
    for c in _block_chunks(scenario, seed):
        acc += c.T @ c.conj()
        count += c.shape[0]
    if count == 0:
        raise InsufficientDataError("measurement too short for a single block")
    C = acc / count
    C = 0.5 * (C + C.conj().T)
    return CrossSpectralMatrix(C, scenario.band_centre, count)


def _fractional_delay(spectrum, freqs, delay):
    return spectrum * np.exp(-2j * np.pi * freqs * delay)


def simulate_time_signals(scenario, seed):
    """Microphone recordings ``(n, T)`` for the whole measurement.

    Each source signal is white Gaussian noise with the source's RMS at
    1 m.  Delays ``r / c0`` are applied as linear phase over the full
    record, which treats the record as periodic.
    """
    records = snap_sources(scenario)
    geom = true_geometry(scenario)
    T = scenario.n_samples
    n = geom.n
    fs = scenario.sampling_rate
    freqs = np.fft.rfftfreq(T, d=1.0 / fs)
    pts = scenario.grid.points()
    out = np.zeros((n, T))
    rng = rng_for(seed, _STREAM_TIME)
    for rec in records:
        q = scenario.sources[rec.source].rms_at_1m
        s_hat = np.fft.rfft(q * rng.standard_normal(T))
        r = np.linalg.norm(geom.mic_positions - pts[rec.grid_index], axis=1)
        for j in range(n):
            out[j] += np.fft.irfft(_fractional_delay(s_hat, freqs, r[j] / scenario.c0),
                                   n=T) / r[j]
    if scenario.noise is not None and scenario.noise.rms > 0:
        nrng = rng_for(scenario.noise.seed, _STREAM_TIME, 1)
        out += scenario.noise.rms * nrng.standard_normal((n, T))
    return out


def time_domain_csm(scenario, seed):
    signals = simulate_time_signals(scenario, seed)
    csm = welch_csm(signals, scenario.fft_block, scenario.overlap, scenario.band_index,
                    scenario.band_centre)
    return csm
