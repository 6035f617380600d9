"""Experiment description: array, focus grid, sources, sampling and corruption.

A scenario is loaded from a JSON document whose keys mirror the dataclass
fields below.  Units are SI throughout (metres, pascal, hertz, seconds).
Unknown keys are rejected so typos do not silently fall back to defaults.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ScenarioError


@dataclass(frozen=True)
class ArrayGeometry:
    mic_positions: np.ndarray  # (n, 3)

    def __post_init__(self):
        pos = np.asarray(self.mic_positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ScenarioError(f"mic_positions must be (n>=1, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise ScenarioError("mic_positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "mic_positions", pos)

    @property
    def n(self) -> int:
        return self.mic_positions.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.mic_positions.mean(axis=0)


@dataclass(frozen=True)
class FocusGrid:
    """Regular ``nx`` by ``ny`` grid of candidate source locations.

    Point ``(ix, iy)`` sits at ``origin + spacing * (ix, iy)`` in the plane
    orthogonal to ``normal``; its 0-based linear index is ``ix * ny + iy``.
    """

    nx: int
    ny: int
    spacing: float
    origin: tuple = (0.0, 0.0, 0.0)
    normal: str = "z"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ScenarioError("grid needs nx, ny >= 1")
        if not self.spacing > 0:
            raise ScenarioError("grid spacing must be > 0")
        if self.normal not in ("x", "y", "z"):
            raise ScenarioError(f"grid normal must be x, y or z, got {self.normal!r}")
        origin = tuple(float(v) for v in self.origin)
        if len(origin) != 3:
            raise ScenarioError("grid origin must be a 3-vector")
        object.__setattr__(self, "origin", origin)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def _axes(self):
        normal = "xyz".index(self.normal)
        return [k for k in range(3) if k != normal]

    def linear_index(self, ix, iy):
        return np.asarray(ix) * self.ny + np.asarray(iy)

    def unravel(self, index):
        index = np.asarray(index)
        return index // self.ny, index % self.ny

    def point(self, ix, iy) -> np.ndarray:
        u, v = self._axes()
        p = np.array(self.origin, dtype=np.float64)
        p[u] += ix * self.spacing
        p[v] += iy * self.spacing
        return p

    def points(self) -> np.ndarray:
        """All grid points as an ``(m, 3)`` array in linear-index order."""
        ix, iy = self.unravel(np.arange(self.size))
        u, v = self._axes()
        pts = np.tile(np.array(self.origin, dtype=np.float64), (self.size, 1))
        pts[:, u] += ix * self.spacing
        pts[:, v] += iy * self.spacing
        return pts

    def plane_coords(self, pts) -> np.ndarray:
        """Project 3-D points onto the two in-plane axes."""
        return np.asarray(pts)[..., self._axes()]

    def nearest(self, position):
        """Return ``(linear_index, distance)`` of the closest grid node."""
        position = np.asarray(position, dtype=np.float64)
        rel = position - np.array(self.origin)
        u, v = self._axes()
        ix = int(np.clip(np.rint(rel[u] / self.spacing), 0, self.nx - 1))
        iy = int(np.clip(np.rint(rel[v] / self.spacing), 0, self.ny - 1))
        node = self.point(ix, iy)
        return int(self.linear_index(ix, iy)), float(np.linalg.norm(node - position))


@dataclass(frozen=True)
class Source:
    position: tuple
    rms_at_1m: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise ScenarioError("source position must be a finite 3-vector")
        if not self.rms_at_1m >= 0:
            raise ScenarioError("source rms_at_1m must be >= 0")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class NoiseSpec:
    """White noise added independently at every microphone.

    ``rms`` is the broadband RMS in pascal; each positive-frequency band
    receives ``rms**2 / (fft_block / 2)`` of power.
    """

    rms: float
    seed: int = 0


@dataclass(frozen=True)
class PositionErrorSpec:
    avg_deviation: float
    seed: int = 0


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    grid: FocusGrid
    sources: tuple = ()
    c0: float = 343.0
    sampling_rate: float = 51200.0
    fft_block: int = 128
    overlap: float = 0.5
    measurement_time: float = 80.0
    band_index: int = 48
    noise: NoiseSpec | None = None
    mic_position_error: PositionErrorSpec | None = None
    name: str = ""
    seed: int = 0
    solver: dict = field(default_factory=dict)
    postprocess: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        n = self.fft_block
        if n < 2 or n & (n - 1):
            raise ScenarioError(f"fft_block must be a power of two, got {n}")
        if not 0 <= self.overlap < 1:
            raise ScenarioError("overlap must be in [0, 1)")
        if not 1 <= self.band_index <= n // 2 - 1:
            raise ScenarioError(f"band_index must be in [1, {n // 2 - 1}]")
        if not self.c0 > 0 or not self.sampling_rate > 0:
            raise ScenarioError("c0 and sampling_rate must be > 0")
        if not self.measurement_time > 0:
            raise ScenarioError("measurement_time must be > 0")
        if self.noise is not None and not self.noise.rms >= 0:
            raise ScenarioError("noise rms must be >= 0")
        if self.mic_position_error is not None and not self.mic_position_error.avg_deviation >= 0:
            raise ScenarioError("avg_deviation must be >= 0")

    @property
    def band_width(self) -> float:
        return self.sampling_rate / self.fft_block

    @property
    def band_centre(self) -> float:
        return self.band_index * self.band_width

    @property
    def omega(self) -> float:
        return 2.0 * np.pi * self.band_centre

    @property
    def n_bands(self) -> int:
        return self.fft_block // 2

    @property
    def hop(self) -> float:
        return (1.0 - self.overlap) * self.fft_block

    @property
    def n_samples(self) -> int:
        return int(round(self.measurement_time * self.sampling_rate))

    @property
    def block_count(self) -> int:
        """Number of Welch blocks that fit into the measurement."""
        k = int(np.floor((self.n_samples - self.overlap * self.fft_block) / self.hop))
        return max(k, 0)

    @property
    def reference_point(self) -> np.ndarray:
        return self.geometry.centroid

    def replace(self, **changes) -> "Scenario":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return Scenario(**data)


_TOP_KEYS = {f.name for f in fields(Scenario)}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")


def _build(cls, obj, where, required=()):
    allowed = {f.name for f in fields(cls)}
    _check_keys(obj, allowed, where)
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioError(f"{where}: missing keys {missing}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    _check_keys(doc, _TOP_KEYS, "scenario")
    for key in ("geometry", "grid"):
        if key not in doc:
            raise ScenarioError(f"scenario: missing '{key}'")
    data = dict(doc)
    geo = doc["geometry"]
    _check_keys(geo, {"mic_positions"}, "geometry")
    if "mic_positions" not in geo:
        raise ScenarioError("geometry: missing 'mic_positions'")
    data["geometry"] = ArrayGeometry(np.asarray(geo["mic_positions"], dtype=float))
    data["grid"] = _build(FocusGrid, doc["grid"], "grid", ("nx", "ny", "spacing"))
    sources = doc.get("sources", [])
    if not isinstance(sources, list):
        raise ScenarioError("sources: expected a list")
    data["sources"] = tuple(
        _build(Source, s, f"sources[{i}]", ("position", "rms_at_1m"))
        for i, s in enumerate(sources)
    )
    if doc.get("noise") is not None:
        data["noise"] = _build(NoiseSpec, doc["noise"], "noise", ("rms",))
    if doc.get("mic_position_error") is not None:
        data["mic_position_error"] = _build(
            PositionErrorSpec, doc["mic_position_error"], "mic_position_error",
            ("avg_deviation",),
        )
    for key in ("solver", "postprocess"):
        if key in doc and not isinstance(doc[key], dict):
            raise ScenarioError(f"{key}: expected an object")
    try:
        return Scenario(**data)
    except TypeError as exc:
        raise ScenarioError(f"scenario: {exc}") from exc


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    return {
        "name": sc.name,
        "seed": sc.seed,
        "geometry": {"mic_positions": sc.geometry.mic_positions.tolist()},
        "grid": {
            "nx": sc.grid.nx,
            "ny": sc.grid.ny,
            "spacing": sc.grid.spacing,
            "origin": list(sc.grid.origin),
            "normal": sc.grid.normal,
        },
        "sources": [
            {"position": list(s.position), "rms_at_1m": s.rms_at_1m} for s in sc.sources
        ],
        "c0": sc.c0,
        "sampling_rate": sc.sampling_rate,
        "fft_block": sc.fft_block,
        "overlap": sc.overlap,
        "measurement_time": sc.measurement_time,
        "band_index": sc.band_index,
        "noise": asdict(sc.noise) if sc.noise else None,
        "mic_position_error": asdict(sc.mic_position_error) if sc.mic_position_error else None,
        "solver": dict(sc.solver),
        "postprocess": dict(sc.postprocess),
    }


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(doc)


def builtin_scenario_path(name: str) -> Path:
    """Path of a checked-in scenario (``three_sources`` etc.)."""
    ref = resources.files("sparsecsm") / "scenarios" / f"{name}.json"
    return Path(str(ref))


def load_builtin(name: str) -> Scenario:
    return load_scenario(builtin_scenario_path(name))


def vogel_spiral(n=64, radius=0.2, z=0.0):
    """Sunflower-spiral array of ``n`` mics with its centroid on the z axis."""
    k = np.arange(n)
    r = radius * np.sqrt((k + 0.5) / n)
    theta = k * np.pi * (3.0 - np.sqrt(5.0))
    pos = np.column_stack([r * np.cos(theta), r * np.sin(theta), np.full(n, float(z))])
    pos[:, :2] -= pos[:, :2].mean(axis=0)
    return pos
