"""Brute-force optimum of a small model: enumerate binaries, complete the rest by LP."""
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from vnf_balancer.optim.model import ModelInstance

CHUNK = 1 << 13
TOLERANCE = 1e-9
MAX_BINARIES = 22


def feasible_binary_points(model: ModelInstance) -> np.ndarray:
    """All 0/1 points of the binary variables satisfying the rows that only involve binaries."""
    a, lo, hi = model.matrix()
    dense = a.toarray()
    mask = model.binary_mask
    binaries = np.flatnonzero(mask)
    if binaries.size > MAX_BINARIES:
        raise ValueError(f"{binaries.size} binaries is too many to enumerate")
    pure = ~np.any(dense[:, ~mask] != 0.0, axis=1)
    a_b, lo_b, hi_b = dense[pure][:, binaries], lo[pure], hi[pure]
    bits = np.arange(binaries.size)
    found = []
    for start in range(0, 1 << binaries.size, CHUNK):
        idx = np.arange(start, min(start + CHUNK, 1 << binaries.size))
        points = ((idx[:, None] >> bits) & 1).astype(float)
        activity = points @ a_b.T
        ok = np.all((activity >= lo_b - TOLERANCE) & (activity <= hi_b + TOLERANCE), axis=1)
        found.append(points[ok])
    return np.vstack(found) if found else np.zeros((0, binaries.size))


def brute_force_optimum(model: ModelInstance) -> Optional[float]:
    """Smallest objective over every binary point, or None when the model is infeasible."""
    a, lo, hi = model.matrix()
    dense = a.toarray()
    mask = model.binary_mask
    binaries, continuous = np.flatnonzero(mask), np.flatnonzero(~mask)
    cost = model.cost_vector
    mixed = np.any(dense[:, continuous] != 0.0, axis=1)
    a_c, a_x = dense[mixed][:, continuous], dense[mixed][:, binaries]
    lo_m, hi_m = lo[mixed], hi[mixed]
    eq = lo_m == hi_m
    below = ~eq & np.isfinite(hi_m)
    above = ~eq & np.isfinite(lo_m)
    lower, upper = model.lower_bounds[continuous], model.upper_bounds[continuous]
    bounds = [(l, None if np.isinf(u) else u) for l, u in zip(lower, upper)]

    best = None
    for point in feasible_binary_points(model):
        shift = a_x @ point
        a_ub = np.vstack([a_c[below], -a_c[above]])
        b_ub = np.concatenate([hi_m[below] - shift[below], -(lo_m[above] - shift[above])])
        result = linprog(
            cost[continuous],
            A_ub=a_ub if a_ub.size else None,
            b_ub=b_ub if a_ub.size else None,
            A_eq=a_c[eq] if eq.any() else None,
            b_eq=(lo_m[eq] - shift[eq]) if eq.any() else None,
            bounds=bounds,
            method="highs",
        )
        if result.status != 0:
            continue
        value = float(cost[binaries] @ point) + float(result.fun) + model.objective_constant
        if best is None or value < best:
            best = value
    return best
