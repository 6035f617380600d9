"""Monopole propagation and steering matrices.

A unit pressure at the reference point, caused by a monopole at a focus
point, arrives at a microphone scaled by ``r0 / r`` and shifted in phase
by ``omega * (r0 - r) / c0``, where ``r`` and ``r0`` are the distances
from the focus point to the microphone and to the reference point.  The
phase sign matches numpy's forward FFT, ``exp(-i omega t)``.
"""

import numpy as np

from .errors import GeometryError


def steering_coeff(focus_point, mic, reference_point, omega, c0):
    focus_point = np.asarray(focus_point, dtype=np.float64)
    r = float(np.linalg.norm(focus_point - np.asarray(mic, dtype=np.float64)))
    r0 = float(np.linalg.norm(focus_point - np.asarray(reference_point, dtype=np.float64)))
    if r == 0.0 or r0 == 0.0:
        raise GeometryError("focus point coincides with a microphone or the reference point")
    return (r0 / r) * np.exp(1j * omega * (r0 - r) / c0)


def steering_matrix(mic_positions, focus_points, reference_point, omega, c0):
    """``(n, m)`` matrix with entry ``[j, i]`` for mic ``j`` and focus point ``i``."""
    mics = np.asarray(mic_positions, dtype=np.float64)
    pts = np.asarray(focus_points, dtype=np.float64)
    r = np.linalg.norm(mics[:, None, :] - pts[None, :, :], axis=2)
    r0 = np.linalg.norm(pts - np.asarray(reference_point, dtype=np.float64), axis=1)
    if np.any(r == 0.0) or np.any(r0 == 0.0):
        raise GeometryError("focus point coincides with a microphone or the reference point")
    return (r0[None, :] / r) * np.exp(1j * omega * (r0[None, :] - r) / c0)


def build_steering_matrix(scenario, mic_positions=None):
    """Steering matrix of ``scenario`` on its focus grid.

    ``mic_positions`` overrides the nominal array (used to synthesise data
    with misplaced microphones); the reference point stays at the nominal
    array centroid either way.
    """
    mics = scenario.geometry.mic_positions if mic_positions is None else mic_positions
    return steering_matrix(
        mics,
        scenario.grid.points(),
        scenario.reference_point,
        scenario.omega,
        scenario.c0,
    )
