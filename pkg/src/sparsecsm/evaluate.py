"""Compare source estimates with the known truth.

No single error score is produced; each matched pair reports its own
position error and strength ratio, and leftovers on either side are
counted.
"""

import numpy as np


def match_sources(estimates, truth):
    """Greedy nearest matching between two lists of ``{x, y, z, strength}`` records.

    The closest remaining (estimate, truth) pair is matched first.
    """
    est = np.array([[e["x"], e["y"], e["z"]] for e in estimates], dtype=float).reshape(-1, 3)
    tru = np.array([[t["x"], t["y"], t["z"]] for t in truth], dtype=float).reshape(-1, 3)
    pairs = []
    if len(est) and len(tru):
        dist = np.linalg.norm(est[:, None, :] - tru[None, :, :], axis=2)
        free_e = set(range(len(est)))
        free_t = set(range(len(tru)))
        order = np.argsort(dist, axis=None, kind="stable")
        for flat in order:
            i, j = np.unravel_index(flat, dist.shape)
            if i in free_e and j in free_t:
                pairs.append((int(i), int(j), float(dist[i, j])))
                free_e.discard(i)
                free_t.discard(j)
            if not free_e or not free_t:
                break
    return pairs


def evaluate(estimates, truth):
    pairs = match_sources(estimates, truth)
    matched = []
    for i, j, d in pairs:
        ts = truth[j]["strength"]
        matched.append({
            "estimate": i,
            "truth": j,
            "position_error_m": d,
            "strength_ratio": estimates[i]["strength"] / ts if ts else float("inf"),
        })
    matched.sort(key=lambda r: r["truth"])
    errors = [m["position_error_m"] for m in matched]
    return {
        "pairs": matched,
        "detected_sources": len(estimates),
        "true_sources": len(truth),
        "unmatched_estimates": len(estimates) - len(pairs),
        "unmatched_truths": len(truth) - len(pairs),
        "max_position_error_m": max(errors) if errors else None,
    }
