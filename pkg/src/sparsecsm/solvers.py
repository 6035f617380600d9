"""Split Bregman solvers for ``A X A^H ~ C`` with an l1 penalty on ``X``.

Two variants share one loop:

* :func:`solve_weighted` works on a full ``m x m`` matrix ``X`` and
  penalises ``sparsity_weight * ||W o X||_1``.  Large off-diagonal weights
  push ``X`` towards a diagonal.
* :func:`solve_structured` restricts ``X`` to diagonal matrices and stores
  only the diagonal, so nothing of size ``m x m`` is ever formed.

Each outer (Bregman) iteration runs ``alternating_sweeps`` sweeps of
``gd_steps`` gradient steps on the smooth part followed by a soft
shrinkage of ``X + B``, then updates ``B <- B + (X - D)``.  The shrinkage
threshold is ``sparsity_weight * W / coupling_weight``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields
from typing import Any

import numpy as np

from .errors import DimensionError, DivergenceError, ParameterError, ScenarioError
from .linalg import as_cmatrix, frob_norm_sq
from .prox import shrink_complex, threshold_matrix


@dataclass
class SolverConfig:
    mode: str = "structured"
    outer_iterations: int = 75
    alternating_sweeps: int = 4
    gd_steps: int = 10
    coupling_weight: float = 1e4
    sparsity_weight: float = 10.0
    # Explicit W; when None it is built from diag_weight / offdiag_weight.
    weights: Any = None
    diag_weight: float = 1.0
    offdiag_weight: float = 1.0
    step: Any = "optimal"
    init: Any = "zeros"
    residual_tol: float = 0.0
    change_tol: float = 0.0
    divergence_factor: float = 10.0
    record_inner: bool = False
    record_history: bool = False

    def __post_init__(self):
        if self.mode not in ("weighted", "structured"):
            raise ParameterError(f"mode must be 'weighted' or 'structured', got {self.mode!r}")
        for name in ("outer_iterations", "alternating_sweeps", "gd_steps"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if not self.coupling_weight > 0:
            raise ParameterError("coupling_weight must be > 0")
        if not self.sparsity_weight >= 0:
            raise ParameterError("sparsity_weight must be >= 0")
        if self.diag_weight < 0 or self.offdiag_weight < 0:
            raise ParameterError("weights must be >= 0")
        if self.step != "optimal":
            try:
                step = float(self.step)
            except (TypeError, ValueError):
                raise ParameterError(f"step must be 'optimal' or a number, got {self.step!r}")
            if not step > 0:
                raise ParameterError("fixed step must be > 0")
        if self.init not in ("zeros", "ones") and not isinstance(self.init, (int, float)):
            raise ParameterError("init must be 'zeros', 'ones' or a number")

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverConfig":
        allowed = {f.name for f in fields(cls)} - {"weights"}
        unknown = set(doc) - allowed
        if unknown:
            raise ScenarioError(f"solver: unknown keys {sorted(unknown)}")
        try:
            return cls(**doc)
        except ParameterError as exc:
            raise ScenarioError(f"solver: {exc}") from exc

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "weights"}
        if self.weights is not None:
            out["weights"] = "explicit"
        return out

    @property
    def init_value(self) -> float:
        if self.init == "zeros":
            return 0.0
        if self.init == "ones":
            return 1.0
        return float(self.init)


@dataclass
class SolveReport:
    X: np.ndarray
    D: np.ndarray
    mode: str
    energy: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    inner_energy: list = field(default_factory=list)
    history: list = field(default_factory=list)
    B: np.ndarray | None = None
    outer_done: int = 0
    converged: bool = False
    wall_time: float = 0.0
    config: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def solution(self):
        """The sparse iterate ``D``; it carries exact zeros, ``X`` does not."""
        return self.D

    @property
    def diagonal(self):
        return self.D if self.D.ndim == 1 else np.diag(self.D)

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "outer_iterations_run": self.outer_done,
            "converged": self.converged,
            "wall_time_s": self.wall_time,
            "energy": [float(e) for e in self.energy],
            "residual": [float(r) for r in self.residual],
            "config": self.config,
            "seed": self.seed,
            "nonzeros": int(np.count_nonzero(self.D)),
        }


# -- model pieces -----------------------------------------------------------

def _forward(A, X):
    """``A X A^H`` for a dense ``X`` or a diagonal given as a 1-D array."""
    if X.ndim == 1:
        return (A * X) @ A.conj().T
    return A @ X @ A.conj().T


def _backward(A, R, diagonal):
    """``A^H R A``, or only its diagonal when ``diagonal`` is set."""
    if diagonal:
        return np.sum(A.conj() * (R @ A), axis=0)
    return A.conj().T @ (R @ A)


def _l1(X):
    return float(np.sum(np.abs(X.real)) + np.sum(np.abs(X.imag)))


def _check_shapes(A, X, C):
    n, m = A.shape
    if C.shape != (n, n):
        raise DimensionError(f"C must be {n}x{n}, got {C.shape}")
    if X.ndim == 1 and X.shape != (m,) or X.ndim == 2 and X.shape != (m, m):
        raise DimensionError(f"X must be {m}x{m} or length {m}, got {X.shape}")


def objective_weighted(A, X, C, lam, W=None):
    """``1/2 ||A X A^H - C||_F^2 + lam * ||W o X||_1``."""
    A = np.asarray(A, dtype=np.complex128)
    X = np.asarray(X, dtype=np.complex128)
    C = np.asarray(C, dtype=np.complex128)
    _check_shapes(A, X, C)
    fit = 0.5 * frob_norm_sq(_forward(A, X) - C)
    wx = X if W is None else np.asarray(W, dtype=np.float64) * X
    return fit + lam * _l1(wx)


def bregman_energy(A, X, C, mu, D, B):
    """Smooth energy of the X-subproblem,
    ``1/2 ||A X A^H - C||^2 + mu/2 ||D - X - B||^2``."""
    return 0.5 * frob_norm_sq(_forward(A, X) - C) + 0.5 * mu * frob_norm_sq(D - X - B)


def grad_unstructured(A, X, C, mu, D, B):
    """Gradient of :func:`bregman_energy` over unstructured ``X``.

    For complex ``X`` it is the real gradient in the sense that the
    directional derivative along ``H`` equals ``Re <G, H>``.
    """
    A = np.asarray(A, dtype=np.complex128)
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2:
        raise DimensionError("grad_unstructured needs a full matrix X")
    _check_shapes(A, X, C)
    return _backward(A, _forward(A, X) - C, diagonal=False) + mu * (X - D + B)


def grad_diagonal(A, x, C, mu, d, b):
    """Gradient over diagonal ``X``: the diagonal of the unstructured one.

    ``x``, ``d``, ``b`` are the diagonals; the result is a 1-D array.  Only
    ``n x m`` intermediates are allocated.
    """
    A = np.asarray(A, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise DimensionError("grad_diagonal needs the diagonal as a 1-D array")
    _check_shapes(A, x, C)
    return _backward(A, _forward(A, x) - C, diagonal=True) + mu * (x - d + b)


def optimal_step(A, G, mu):
    """Exact line-search step ``||G||^2 / (||A G A^H||^2 + mu ||G||^2)``.

    Returns 0.0 for a zero gradient, meaning no step is needed.
    """
    G = np.asarray(G, dtype=np.complex128)
    gg = frob_norm_sq(G)
    if gg == 0.0:
        return 0.0
    return gg / (frob_norm_sq(_forward(np.asarray(A, dtype=np.complex128), G)) + mu * gg)


def weight_matrix(m, diag_weight=1.0, offdiag_weight=1.0):
    W = np.full((m, m), float(offdiag_weight))
    np.fill_diagonal(W, float(diag_weight))
    return W


# -- solvers ------------------------------------------------------------------

def _run(A, C, config: SolverConfig, structured: bool) -> SolveReport:
    A = as_cmatrix(A, "A")
    C = as_cmatrix(C, "C")
    n, m = A.shape
    if C.shape != (n, n):
        raise DimensionError(f"C must be {n}x{n}, got {C.shape}")

    mu = float(config.coupling_weight)
    shape = (m,) if structured else (m, m)
    W_obj = None
    if structured:
        thr = config.sparsity_weight / mu
    else:
        W = config.weights
        if W is None:
            W = weight_matrix(m, config.diag_weight, config.offdiag_weight)
        W = threshold_matrix(W, (m, m))
        thr = config.sparsity_weight * W / mu
        W_obj = W

    init = config.init_value
    X = np.full(shape, init, dtype=np.complex128)
    D = X.copy()
    B = np.zeros(shape, dtype=np.complex128)
    fixed_step = None if config.step == "optimal" else float(config.step)

    report = SolveReport(X=X, D=D, mode=config.mode, config=config.to_dict())
    # Bregman iterates are not monotone in the objective, so blow-up is
    # judged against the energy of the starting point.
    start = objective_weighted(A, D, C, config.sparsity_weight, W_obj)
    floor = max(1e-12 * 0.5 * frob_norm_sq(C), np.finfo(float).tiny)
    t0 = time.perf_counter()

    # Overflow is expected when a run blows up; it is reported below.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(config.outer_iterations):
            for _ in range(config.alternating_sweeps):
                P = _forward(A, X)
                for _ in range(config.gd_steps):
                    G = _backward(A, P - C, structured) + mu * (X - D + B)
                    AGA = _forward(A, G)
                    gg = frob_norm_sq(G)
                    if gg == 0.0:
                        break
                    alpha = fixed_step if fixed_step is not None else gg / (
                        frob_norm_sq(AGA) + mu * gg)
                    if not np.isfinite(alpha):
                        report.X, report.D, report.B = X, D, B
                        raise DivergenceError("step size became non-finite", report)
                    X = X - alpha * G
                    P = P - alpha * AGA
                    if config.record_inner:
                        e = 0.5 * frob_norm_sq(P - C) + 0.5 * mu * frob_norm_sq(D - X - B)
                        report.inner_energy.append((k, e))
                    if config.change_tol > 0 and alpha * np.sqrt(gg) <= (
                            config.change_tol * np.sqrt(frob_norm_sq(X))):
                        break
                D = shrink_complex(X + B, thr)
            B = B + (X - D)

            fit = frob_norm_sq(_forward(A, X) - C)
            energy = objective_weighted(A, D, C, config.sparsity_weight, W_obj)
            report.energy.append(energy)
            report.residual.append(float(np.sqrt(fit)))
            if config.record_history:
                report.history.append((X.copy(), D.copy(), B.copy()))
            report.outer_done = k + 1
            report.X, report.D, report.B = X, D, B

            if not np.isfinite(energy) or not np.all(np.isfinite(X)):
                report.wall_time = time.perf_counter() - t0
                raise DivergenceError(f"non-finite energy at outer iteration {k}", report)
            if energy > config.divergence_factor * start and energy > floor:
                report.wall_time = time.perf_counter() - t0
                raise DivergenceError(
                    f"energy {energy:.4g} exceeds {config.divergence_factor}x the starting "
                    f"value {start:.4g} at outer iteration {k}", report)

            if config.residual_tol > 0:
                gap = np.sqrt(frob_norm_sq(X - D))
                if gap <= config.residual_tol * max(np.sqrt(frob_norm_sq(D)), 1e-300):
                    report.converged = True
                    break

    report.wall_time = time.perf_counter() - t0
    return report


def solve_weighted(A, C, config: SolverConfig | None = None) -> SolveReport:
    """Split Bregman on a full matrix ``X`` with entrywise weights."""
    config = config or SolverConfig(mode="weighted")
    if config.mode != "weighted":
        config = SolverConfig(**{**{f.name: getattr(config, f.name) for f in fields(config)},
                                 "mode": "weighted"})
    return _run(A, C, config, structured=False)


def solve_structured(A, C, config: SolverConfig | None = None) -> SolveReport:
    """Split Bregman over diagonal ``X``; iterates are 1-D diagonals."""
    config = config or SolverConfig(mode="structured")
    if config.mode != "structured":
        config = SolverConfig(**{**{f.name: getattr(config, f.name) for f in fields(config)},
                                 "mode": "structured"})
    return _run(A, C, config, structured=True)


def solve(A, C, config: SolverConfig) -> SolveReport:
    if config.mode == "weighted":
        return solve_weighted(A, C, config)
    return solve_structured(A, C, config)
