"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the pytest
terminal summary under "acceptance criteria".
"""

import time

import numpy as np
import pytest

from sparsecsm.cli import main
from sparsecsm.evaluate import evaluate
from sparsecsm.linalg import check_solvable, kron, vec
from sparsecsm.pipeline import postprocess_options_for, solver_config_for, truth_records
from sparsecsm.postprocess import choose_k, kmeans, remap_diagonal, summarize
from sparsecsm.propagation import build_steering_matrix
from sparsecsm.prox import shrink_complex
from sparsecsm.scenario import Source, load_builtin
from sparsecsm.solvers import (
    SolverConfig,
    bregman_energy,
    grad_diagonal,
    grad_unstructured,
    optimal_step,
    solve_structured,
    solve_weighted,
)
from sparsecsm.synthesis import estimate_csm, time_domain_csm, true_geometry, true_solution

from conftest import crandn, record_criterion

pytestmark = pytest.mark.acceptance

REFERENCE_VALUES = {421: 0.1422, 851: 0.0392, 1456: 0.0682}


def end_to_end(scenario, k=3):
    """simulate -> solve -> postprocess with the scenario's own settings."""
    t0 = time.perf_counter()
    csm = estimate_csm(scenario, scenario.seed)
    A = build_steering_matrix(scenario)
    report = solve_structured(A, csm.C, solver_config_for(scenario))
    opts = postprocess_options_for(scenario, k=k)
    points = remap_diagonal(report.diagonal, scenario.grid, opts.threshold).points
    estimates = summarize(kmeans(points, min(k, len(points)), seed=opts.seed))
    elapsed = time.perf_counter() - t0
    metrics = evaluate([e.to_record() for e in estimates], truth_records(scenario))
    return report, points, estimates, metrics, elapsed


def describe(metrics):
    errs = [p["position_error_m"] for p in metrics["pairs"]]
    ratios = [p["strength_ratio"] for p in metrics["pairs"]]
    return (f"{metrics['detected_sources']} estimates, max position error "
            f"{max(errs, default=float('nan')):.4f} m, strength ratios "
            + "/".join(f"{r:.3f}" for r in ratios))


def check_recovery(metrics, max_err, strength_tol):
    pairs = metrics["pairs"]
    return (metrics["detected_sources"] == 3 and len(pairs) == 3
            and all(p["position_error_m"] <= max_err + 1e-12 for p in pairs)
            and all(abs(p["strength_ratio"] - 1) <= strength_tol for p in pairs))


# -- 1 -------------------------------------------------------------------------------

def test_c01_ground_truth():
    t0 = time.perf_counter()
    sc = load_builtin("three_sources")
    x = true_solution(sc)
    elapsed = time.perf_counter() - t0
    idx = (np.flatnonzero(x) + 1).tolist()
    rel = {i: abs(x[i - 1].real - v) / v for i, v in REFERENCE_VALUES.items()}
    ok = idx == sorted(REFERENCE_VALUES) and max(rel.values()) <= 0.01 and elapsed < 1.0
    record_criterion(1, "ground truth", ok,
                     f"indices {idx}, values " + "/".join(f"{x[i - 1].real:.5f}" for i in idx)
                     + f", worst rel. dev {max(rel.values()):.4f}, {elapsed:.3f} s")
    assert ok


# -- 2, 3 -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def noise_free_run():
    return end_to_end(load_builtin("three_sources").replace(measurement_time=8.0))


def test_c02_noise_free_end_to_end(noise_free_run):
    report, _, _, metrics, elapsed = noise_free_run
    ok = check_recovery(metrics, 0.01, 0.15) and elapsed <= 600
    record_criterion(2, "noise-free end to end", ok, describe(metrics) + f", {elapsed:.1f} s")
    assert ok


def test_noise_free_within_ten_percent(noise_free_run):
    _, _, _, metrics, _ = noise_free_run
    assert check_recovery(metrics, 0.01, 0.10)


def test_noise_free_three_dominant_entries(noise_free_run):
    report, *_ = noise_free_run
    d = np.abs(report.diagonal.real)
    top = np.sort(np.argsort(d)[-3:] + 1).tolist()
    assert top == sorted(REFERENCE_VALUES)
    assert np.sort(d)[-4] < 0.05 * np.sort(d)[-3]


def test_noise_free_sum_conservation(noise_free_run):
    report, *_ = noise_free_run
    truth = true_solution(load_builtin("three_sources")).real.sum()
    assert abs(report.X.real.sum() - truth) <= 0.05 * truth


def test_c03_noisy_end_to_end():
    sc = load_builtin("three_sources_noisy").replace(measurement_time=8.0)
    _, points, _, metrics, elapsed = end_to_end(sc)
    ok = check_recovery(metrics, 0.01, 0.25)
    record_criterion(3, "noisy end to end", ok,
                     describe(metrics) + f", {len(points)} entries above threshold, "
                     f"{elapsed:.1f} s")
    assert ok


# -- 4 ---------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def position_error_run():
    return end_to_end(load_builtin("three_sources_mic_error"))


def test_c04_position_error(position_error_run):
    report, points, estimates, metrics, _ = position_error_run
    above = int(np.sum(np.abs(report.diagonal) > 1e-3))
    pairs = metrics["pairs"]
    ok = (above > 3 and len(pairs) == 3
          and all(p["position_error_m"] <= 0.03 for p in pairs)
          and all(0.5 <= p["strength_ratio"] <= 2.0 for p in pairs))
    record_criterion(4, "positional-error robustness", ok,
                     f"{above} raw entries above 1e-3; " + describe(metrics))
    assert ok


def test_position_error_cluster_sums_within_quarter(position_error_run):
    *_, metrics, _ = position_error_run
    assert all(abs(p["strength_ratio"] - 1) <= 0.25 for p in metrics["pairs"])


def test_position_error_auto_k(position_error_run):
    _, points, *_ = position_error_run
    assert choose_k(points) == 3


# -- 5 ----------------------------------------------------------------------------------

def test_c05_gradients():
    rng = np.random.default_rng(5)
    n, m, h = 3, 6, 1e-6
    worst = 0.0
    for _ in range(120):
        A = crandn(rng, n, m)
        Cr = crandn(rng, n, n)
        C = (Cr + Cr.conj().T) / 2
        mu = rng.uniform(0.1, 10)
        X, D, B, H = (crandn(rng, m, m) for _ in range(4))
        G = grad_unstructured(A, X, C, mu, D, B)
        fd = (bregman_energy(A, X + h * H, C, mu, D, B)
              - bregman_energy(A, X - h * H, C, mu, D, B)) / (2 * h)
        an = np.vdot(G, H).real
        worst = max(worst, abs(fd - an) / abs(an))
        x, d, b, hv = (crandn(rng, m) for _ in range(4))
        g = grad_diagonal(A, x, C, mu, d, b)
        fd = (bregman_energy(A, x + h * hv, C, mu, d, b)
              - bregman_energy(A, x - h * hv, C, mu, d, b)) / (2 * h)
        an = np.vdot(g, hv).real
        worst = max(worst, abs(fd - an) / abs(an))
    ok = worst < 1e-5
    record_criterion(5, "gradient correctness", ok,
                     f"120 directions each, worst relative error {worst:.2e}")
    assert ok


# -- 6 -----------------------------------------------------------------------------------

def test_c06_optimal_step():
    rng = np.random.default_rng(6)
    worst = -np.inf
    for _ in range(50):
        A = crandn(rng, 3, 6)
        Cr = crandn(rng, 3, 3)
        C = (Cr + Cr.conj().T) / 2
        mu = rng.uniform(0.1, 10)
        X, D, B = (crandn(rng, 6, 6) for _ in range(3))
        G = grad_unstructured(A, X, C, mu, D, B)
        a = optimal_step(A, G, mu)
        e_star = bregman_energy(A, X - a * G, C, mu, D, B)
        for t in np.linspace(0.0, 2 * a, 1000):
            worst = max(worst, e_star - bregman_energy(A, X - t * G, C, mu, D, B))
    ok = worst <= 1e-10
    record_criterion(6, "optimal step", ok,
                     f"50 states x 1000 scan points, worst excess {worst:.2e}")
    assert ok


# -- 7 -----------------------------------------------------------------------------------

def brute_1d(b, t):
    """Coarse-then-fine grid minimisation of ``t|x| + (x - b)^2 / 2``."""
    lo, hi = min(b, 0.0) - 0.01, max(b, 0.0) + 0.01
    xs = np.arange(lo, hi, 1e-3)
    x0 = xs[np.argmin(t * np.abs(xs) + 0.5 * (xs - b) ** 2)]
    xs = np.arange(x0 - 2e-3, x0 + 2e-3, 1e-6)
    return xs[np.argmin(t * np.abs(xs) + 0.5 * (xs - b) ** 2)]


def test_c07_shrinkage_oracle():
    rng = np.random.default_rng(7)
    z = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-3, 3, 1000)
    t = rng.uniform(0, 2, 1000)
    out = shrink_complex(z.reshape(25, 40), t.reshape(25, 40)).ravel()
    worst = 0.0
    for k in range(1000):
        ref = complex(brute_1d(z[k].real, t[k]), brute_1d(z[k].imag, t[k]))
        worst = max(worst, abs(out[k] - ref))
    ok = worst <= 1e-4
    record_criterion(7, "shrinkage oracle", ok, f"1000 pairs, worst deviation {worst:.2e}")
    assert ok


# -- 8 -----------------------------------------------------------------------------------

def test_c08_kronecker():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(20):
        A, X = crandn(rng, 4, 4), crandn(rng, 4, 4)
        worst = max(worst, np.linalg.norm(kron(A.conj(), A) @ vec(X) - vec(A @ X @ A.conj().T)))
    ok = worst < 1e-12
    record_criterion(8, "Kronecker identity", ok, f"20 instances, worst residual {worst:.2e}")
    assert ok


# -- 9 ------------------------------------------------------------------------------------

def test_c09_solvability():
    rng = np.random.default_rng(9)
    consistent = inconsistent = 0
    for _ in range(10):
        A = crandn(rng, 6, 4)
        ok, _ = check_solvable(A, A @ crandn(rng, 4, 4) @ A.conj().T, rtol=1e-8)
        consistent += ok
        A2 = crandn(rng, 6, 2) @ crandn(rng, 2, 4)
        bad, _ = check_solvable(A2, crandn(rng, 6, 6), rtol=1e-8)
        inconsistent += not bad
    ok = consistent == 10 and inconsistent == 10
    record_criterion(9, "solvability diagnostic", ok,
                     f"{consistent}/10 consistent accepted, {inconsistent}/10 rank-deficient "
                     "inconsistent rejected")
    assert ok


# -- 10 ------------------------------------------------------------------------------------

def test_c10_csm_statistics():
    sc = load_builtin("three_sources").replace(measurement_time=8.0)
    csm = estimate_csm(sc, sc.seed)
    C = csm.C
    n = C.shape[0]
    tr = np.trace(C).real
    A_true = build_steering_matrix(sc, true_geometry(sc).mic_positions)
    expect = np.trace((A_true * true_solution(sc)) @ A_true.conj().T).real
    hermitian = np.array_equal(C, C.conj().T)
    psd = csm.min_eigenvalue() >= -1e-10 * tr / n
    dev = abs(tr - expect) / expect
    ok = hermitian and psd and dev <= 0.03 and abs(csm.block_count - 6400) <= 1
    record_criterion(10, "CSM statistics", ok,
                     f"K={csm.block_count}, exactly Hermitian={hermitian}, "
                     f"min eig {csm.min_eigenvalue():.2e}, trace deviation {dev:.2e}")
    assert ok


# -- 11 -------------------------------------------------------------------------------------

def test_c11_frequency_time_equivalence():
    sc = load_builtin("three_sources").replace(
        sources=(Source((0.0, 0.0, 0.3), 1.0),), measurement_time=8.1)
    cf = estimate_csm(sc, 1)
    ct = time_domain_csm(sc, 1)
    diff = np.linalg.norm(cf.C - ct.C) / np.linalg.norm(cf.C)
    ok = diff < 0.05 and min(cf.block_count, ct.block_count) >= 6400
    record_criterion(11, "frequency/time equivalence", ok,
                     f"K={cf.block_count}/{ct.block_count}, normalised difference {diff:.4f}")
    assert ok


# -- 12 --------------------------------------------------------------------------------------

def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_gradient_reference(A, C, lam, iters=50000):
    """Accelerated proximal gradient on ``1/2||AXA^H - C||^2 + lam ||X||_1``,
    written independently of the package."""
    L = np.linalg.norm(A, 2) ** 4
    m = A.shape[1]
    X = np.zeros((m, m), complex)
    Y, t = X.copy(), 1.0
    for _ in range(iters):
        G = A.conj().T @ (A @ Y @ A.conj().T - C) @ A
        Z = Y - G / L
        Xn = _soft(Z.real, lam / L) + 1j * _soft(Z.imag, lam / L)
        tn = (1 + np.sqrt(1 + 4 * t * t)) / 2
        Y = Xn + (t - 1) / tn * (Xn - X)
        X, t = Xn, tn
    return X


def test_c12_small_instance_equivalence():
    worst = 0.0
    for seed in range(3):
        rng = np.random.default_rng(seed)
        A = crandn(rng, 3, 5)
        X0 = np.zeros((5, 5), complex)
        X0[2, 2] = 1.0
        C = A @ X0 @ A.conj().T
        lam = 1e-3
        ref = prox_gradient_reference(A, C, lam)
        cfg = SolverConfig(mode="weighted", outer_iterations=4000, alternating_sweeps=1,
                           gd_steps=50, coupling_weight=1.0, sparsity_weight=lam)
        rep = solve_weighted(A, C, cfg)
        worst = max(worst, np.linalg.norm(rep.D - ref))
    ok = worst <= 1e-6
    record_criterion(12, "small-instance solver equivalence", ok,
                     f"3 toys, worst ||D - reference||_F {worst:.2e}")
    assert ok


# -- 13 ---------------------------------------------------------------------------------------

def test_c13_determinism(tmp_path):
    trees = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["run-all", "--scenario", "three_sources", "--out", str(out)]) == 0
        trees.append({p.relative_to(out).as_posix(): p.read_bytes()
                      for p in sorted(out.rglob("*")) if p.is_file()})
    ok = trees[0] == trees[1] and len(trees[0]) >= 10
    record_criterion(13, "determinism", ok,
                     f"{len(trees[0])} artifacts compared byte for byte, identical={ok}")
    assert ok


# -- full-size weighted solver ------------------------------------------------------------------

@pytest.fixture(scope="module")
def weighted_full_run():
    sc = load_builtin("three_sources_weighted").replace(measurement_time=8.0)
    csm = estimate_csm(sc, sc.seed)
    A = build_steering_matrix(sc)
    return sc, solve_weighted(A, csm.C, solver_config_for(sc))


@pytest.mark.slow
def test_weighted_full_size_dominant_entries(weighted_full_run):
    sc, report = weighted_full_run
    d = np.real(np.diagonal(report.D))
    top = sorted(int(i) + 1 for i in np.argsort(-np.abs(d))[:3])
    assert top == [421, 851, 1456]


@pytest.mark.slow
def test_weighted_full_size_noise_free(weighted_full_run):
    sc, report = weighted_full_run
    opts = postprocess_options_for(sc)
    points = remap_diagonal(report.D, sc.grid, opts.threshold).points
    estimates = summarize(kmeans(points, 3, seed=opts.seed))
    metrics = evaluate([e.to_record() for e in estimates], truth_records(sc))
    assert metrics["max_position_error_m"] <= 0.01
