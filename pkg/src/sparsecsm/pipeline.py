"""Batch stages behind the command line: simulate, solve, postprocess, evaluate.

Each stage reads and writes plain files so stages can be rerun or
swapped independently.  Layout of a ``run-all`` output directory::

    simulate/    csm.cmat csm.json steering.cmat truth.json true_diagonal.cmat
    solve/       report.json X.cmat D.cmat
    postprocess/ estimates.json estimates.csv points.csv diagonal.csv
                 [silhouette.csv] diagonal.png map.png
    evaluate/    metrics.json
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .errors import DivergenceError, ScenarioError, SparseCSMError
from .evaluate import evaluate
from .postprocess import choose_k, kmeans, merge_close, remap_diagonal, silhouette_table, summarize
from .propagation import build_steering_matrix
from .scenario import Scenario, load_builtin, load_scenario, scenario_to_dict
from .solvers import SolverConfig, solve as run_solver
from .synthesis import estimate_csm, snap_sources, source_band_powers, true_solution

log = logging.getLogger(__name__)


class NoSourcesDetected(SparseCSMError):
    pass


@dataclasses.dataclass(frozen=True)
class PostprocessOptions:
    k: int | str | None = None
    threshold: float = 1e-5
    seed: int = 0
    weighted_centroids: bool = False
    merge_radius: float | None = None
    k_max: int = 10
    max_iter: int = 100

    @classmethod
    def from_dict(cls, doc):
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - allowed
        if unknown:
            raise ScenarioError(f"postprocess: unknown keys {sorted(unknown)}")
        return cls(**doc)


def resolve_scenario(source) -> Scenario:
    """Load a scenario from a path, or by name from the checked-in set."""
    if isinstance(source, Scenario):
        return source
    path = Path(source)
    if path.exists():
        return load_scenario(path)
    try:
        return load_builtin(str(source))
    except ScenarioError:
        raise
    except Exception:
        raise ScenarioError(f"scenario {source!r} not found") from None


def truth_records(scenario):
    records = snap_sources(scenario)
    powers = source_band_powers(scenario, records)
    pts = scenario.grid.points()
    out = []
    for rec, p in zip(records, powers):
        x, y, z = pts[rec.grid_index]
        out.append({"x": float(x), "y": float(y), "z": float(z), "strength": float(p),
                    "grid_index": rec.grid_index + 1, "snap_distance_m": rec.distance})
    return out


# -- stages --------------------------------------------------------------------

def simulate(scenario, seed, out_dir):
    out = Path(out_dir)
    csm = estimate_csm(scenario, seed)
    A = build_steering_matrix(scenario)
    io.write_cmat(out / "csm.cmat", csm.C)
    io.write_json(out / "csm.json", {
        "band_centre_hz": scenario.band_centre,
        "band_index": scenario.band_index,
        "block_count": csm.block_count,
        "seed": int(seed),
        "scenario": scenario.name,
    })
    io.write_cmat(out / "steering.cmat", A)
    io.write_cmat(out / "true_diagonal.cmat", true_solution(scenario))
    io.write_json(out / "truth.json", {"sources": truth_records(scenario)})
    return csm, A


def solve(csm_path, steering_path, config: SolverConfig, out_dir, seed=None):
    C = io.read_cmat(csm_path)
    A = io.read_cmat(steering_path)
    n, m = A.shape
    if C.shape != (n, n):
        raise ScenarioError(f"CSM is {C.shape}, steering matrix needs {n}x{n}")
    out = Path(out_dir)
    try:
        report = run_solver(A, C, config)
    except DivergenceError as exc:
        if exc.report is not None:
            doc = exc.report.summary()
            doc.pop("wall_time_s")
            doc["status"] = "diverged"
            doc["message"] = str(exc)
            io.write_json(out / "report.json", doc)
        raise
    report.seed = seed
    io.write_cmat(out / "X.cmat", report.X)
    io.write_cmat(out / "D.cmat", report.D)
    doc = report.summary()
    # wall time would make reruns differ byte-wise; log it instead
    log.info("solver finished in %.1f s", doc.pop("wall_time_s"))
    doc["status"] = "ok"
    doc["files"] = {"X": "X.cmat", "D": "D.cmat"}
    io.write_json(out / "report.json", doc)
    return report


def load_solution(report_path):
    report_path = Path(report_path)
    doc = io.read_json(report_path)
    if doc.get("status") != "ok":
        raise ScenarioError(f"{report_path}: report status is {doc.get('status')!r}")
    D = io.read_cmat(report_path.parent / doc["files"]["D"])
    if D.shape[1] == 1:
        return D[:, 0]
    return np.diagonal(D).copy()


def postprocess(diag, grid, options: PostprocessOptions, out_dir, truth=None,
                truth_diag=None, figures=True):
    out = Path(out_dir)
    remap = remap_diagonal(diag, grid, options.threshold)
    points = remap.points
    if not points:
        raise NoSourcesDetected(
            f"no diagonal entries above threshold {options.threshold:g}")
    k = options.k
    table = None
    if k is None or k == "auto":
        table = silhouette_table(points, options.k_max, options.seed)
        k = choose_k(points, options.k_max, options.seed)
    k = min(int(k), len(points))
    clusters = kmeans(points, k, seed=options.seed, max_iter=options.max_iter,
                      weighted=options.weighted_centroids)
    if options.merge_radius:
        clusters = merge_close(clusters, options.merge_radius)
    estimates = summarize(clusters)

    records = [e.to_record() for e in estimates]
    io.write_json(out / "estimates.json", {
        "k": k,
        "threshold": options.threshold,
        "max_imag": remap.max_imag,
        "estimates": records,
    })
    io.write_csv(out / "estimates.csv", ["x", "y", "z", "strength", "n_members"],
                 [[r["x"], r["y"], r["z"], r["strength"], r["n_members"]] for r in records])
    label = {}
    for c, est in enumerate(estimates):
        for idx in est.member_indices:
            label[idx] = c
    io.write_csv(out / "points.csv", ["grid_index", "x", "y", "z", "strength", "cluster"],
                 [[p.grid_index, *p.position, p.strength, label.get(p.grid_index, -1)]
                  for p in points])
    d = np.asarray(diag)
    io.write_csv(out / "diagonal.csv", ["index", "re", "im"],
                 [[i + 1, float(d[i].real), float(d[i].imag)] for i in np.flatnonzero(d)])
    if table is not None:
        io.write_csv(out / "silhouette.csv", ["k", "silhouette"],
                     [[kk, v] for kk, v in sorted(table.items())])
    if figures:
        from .plotting import plot_diagonal, plot_source_map

        plot_diagonal(out / "diagonal.png", d, points, estimates, truth_diag, options.threshold)
        plot_source_map(out / "map.png", grid, points, estimates, truth or ())
    return estimates, table


def evaluate_files(estimates_path, truth_path, out_dir):
    est = io.read_json(estimates_path)["estimates"]
    truth = io.read_json(truth_path)["sources"]
    metrics = evaluate(est, truth)
    io.write_json(Path(out_dir) / "metrics.json", metrics)
    return metrics


def solver_config_for(scenario, mode=None) -> SolverConfig:
    doc = dict(scenario.solver)
    if mode is not None:
        doc["mode"] = mode
    return SolverConfig.from_dict(doc)


def postprocess_options_for(scenario, k=None, threshold=None) -> PostprocessOptions:
    doc = dict(scenario.postprocess)
    if k is not None:
        doc["k"] = k
    if threshold is not None:
        doc["threshold"] = threshold
    return PostprocessOptions.from_dict(doc)


def run_all(scenario, seed, out_dir, mode=None, k=None, threshold=None, figures=True):
    out = Path(out_dir)
    config = solver_config_for(scenario, mode)
    options = postprocess_options_for(scenario, k, threshold)
    io.write_json(out / "scenario.json", scenario_to_dict(scenario))
    log.info("simulating %s (seed %s)", scenario.name, seed)
    simulate(scenario, seed, out / "simulate")
    log.info("solving (%s)", config.mode)
    report = solve(out / "simulate" / "csm.cmat", out / "simulate" / "steering.cmat",
                   config, out / "solve", seed=seed)
    truth = truth_records(scenario)
    log.info("post-processing")
    postprocess(report.diagonal, scenario.grid, options, out / "postprocess", truth=truth,
                truth_diag=true_solution(scenario), figures=figures)
    metrics = evaluate_files(out / "postprocess" / "estimates.json",
                             out / "simulate" / "truth.json", out / "evaluate")
    return metrics


def _run_band(args):
    scenario, band, seed, out_dir, mode, k, threshold, figures = args
    sc = scenario.replace(band_index=band)
    return band, run_all(sc, seed, Path(out_dir) / f"band_{band}", mode, k, threshold, figures)


def run_bands(scenario, bands, seed, out_dir, mode=None, k=None, threshold=None,
              figures=True, jobs=1):
    """Independent ``run_all`` per band; every band writes to its own directory."""
    for b in bands:
        scenario.replace(band_index=b)  # validate before any work starts
    tasks = [(scenario, b, seed, out_dir, mode, k, threshold, figures) for b in bands]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return dict(pool.map(_run_band, tasks))
    return dict(map(_run_band, tasks))
