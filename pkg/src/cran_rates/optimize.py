"""Bounded scalar search, projected subgradient ascent, time-share search.

These serve the rate evaluators: objectives are minima over relay subsets of
smooth log-det pieces, so they are concave but nonsmooth.  Gradients are
central finite differences; the projected ascent therefore follows the
active-piece subgradient, with a coordinate golden-section refinement pass
when progress stalls.  Everything is deterministic under a fixed seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

DEFAULT_SEED = 0x5EED
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass
class OptResult:
    argmax: Any
    value: float
    iterations: int
    feasibility_residual: float = 0.0
    restarts_used: int = 1
    kkt_residual: float = float("nan")


def _as_finite(v: float, where: str) -> float:
    if isinstance(v, float) and math.isnan(v):
        raise ValueError(f"objective returned NaN at {where}")
    return float(v)


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-9,
    maximize: bool = True,
) -> OptResult:
    """Golden-section search on [lo, hi]; exact for unimodal objectives.

    Returns once the bracketing interval is narrower than ``tol``.  The
    objective may return -inf (a saturated bound); NaN is rejected.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    sign = 1.0 if maximize else -1.0
    g = lambda x: sign * _as_finite(f(x), f"x={x}")

    a, b = float(lo), float(hi)
    h = b - a
    c = a + _INV_PHI2 * h
    d = a + _INV_PHI * h
    yc, yd = g(c), g(d)
    it = 2
    while h > tol:
        if yc >= yd:
            b, d, yd = d, c, yc
            h = b - a
            c = a + _INV_PHI2 * h
            yc = g(c)
        else:
            a, c, yc = c, d, yd
            h = b - a
            d = a + _INV_PHI * h
            yd = g(d)
        it += 1
    # Evaluate the endpoints too: optima of monotone objectives sit there.
    cands = [(yc, c), (yd, d), (g(a), a), (g(b), b)]
    it += 2
    best_y, best_x = max(cands, key=lambda p: p[0])
    return OptResult(argmax=best_x, value=sign * best_y, iterations=it)


def _fd_gradient(f, x, h_rel):
    g = np.zeros_like(x)
    for i in range(x.size):
        h = h_rel * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _coordinate_polish(f, x, project, span, tol):
    """One golden-section pass per coordinate, holding the others fixed."""
    x = x.copy()
    fx = f(x)
    for i in range(x.size):
        def slice_obj(v, i=i):
            xi = x.copy()
            xi[i] = v
            return f(project(xi))

        res = golden_section(slice_obj, x[i] - span, x[i] + span, tol=tol)
        if res.value > fx:
            x[i] = res.argmax
            x = project(x)
            fx = f(x)
    return x, fx


def projected_gradient_box(
    f: Callable[[np.ndarray], float],
    dim: int,
    restarts: int = 5,
    step_rule: float = 0.25,
    lo: float = 0.0,
    hi: float = 1.0,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
    x0_list: Sequence[np.ndarray] | None = None,
    max_iter: int = 200,
    fd_h: float = 1e-5,
    tol: float = 1e-9,
    stall_limit: int = 50,
    seed: int = DEFAULT_SEED,
) -> OptResult:
    """Maximize f over a box (or a projected feasible set) by ascent.

    ``project`` replaces plain clipping when the feasible set is not a box,
    e.g. eigenvalue clipping for whitened quantizers.  Restarts are seeded
    and deterministic; the best restart wins.  A coordinate golden-section
    polish runs after the ascent, which also covers stalls at kinks of
    min-over-subsets objectives.
    """
    if project is None:
        project = lambda x: np.clip(x, lo, hi)
    rng = np.random.default_rng(seed)

    starts = [project(np.asarray(x, dtype=float).copy()) for x in (x0_list or [])]
    starts.append(project(np.full(dim, 0.5 * (lo + hi))))
    while len(starts) < max(restarts, len(starts)):
        starts.append(project(rng.uniform(lo, hi, size=dim)))

    best_x, best_v = None, -np.inf
    total_it = 0
    for x0 in starts:
        x = x0.copy()
        fx = _as_finite(f(x), "start")
        step = step_rule
        stall = 0
        recent_gain = np.inf
        for it in range(max_iter):
            total_it += 1
            g = _fd_gradient(f, x, fd_h)
            gnorm = float(np.linalg.norm(g))
            if gnorm < 1e-14:
                break
            improved = False
            s = step
            for _ in range(12):
                x_new = project(x + s * g / max(gnorm, 1e-12))
                f_new = f(x_new)
                if f_new > fx + 1e-15:
                    recent_gain = f_new - fx
                    x, fx = x_new, f_new
                    step = min(s * 2.0, 1e3)
                    improved = True
                    break
                s *= 0.5
            if not improved:
                stall += 1
                step = max(step * 0.25, 1e-11)
                if stall >= stall_limit or step <= 1e-11:
                    break
            else:
                stall = 0
                if recent_gain < 1e-12:
                    break
        span = 0.25 * (hi - lo)
        for _ in range(2):
            x, fx = _coordinate_polish(f, x, project, span, tol=max(tol, 1e-10))
            span *= 0.1
        if fx > best_v:
            best_x, best_v = x, fx

    g = _fd_gradient(f, best_x, fd_h)
    kkt = float(np.linalg.norm(project(best_x + 1e-3 * g) - best_x) / 1e-3)
    feas = float(np.linalg.norm(best_x - project(best_x)))
    return OptResult(
        argmax=best_x,
        value=best_v,
        iterations=total_it,
        feasibility_residual=feas,
        restarts_used=len(starts),
        kkt_residual=kkt,
    )


def grid_search(
    f: Callable[[np.ndarray], float],
    bounds: Sequence[tuple],
    points: int = 11,
    refine: int = 2,
    max_cells: int = 200_000,
) -> OptResult:
    """Dense grid maximization with shrinking refinement passes.

    Suited to low-dimensional searches where the objective is cheap and
    gradients are useless, e.g. tuning finite-alphabet test-channel
    parameters.  Each refinement pass re-grids around the incumbent with a
    halved span.  Deterministic.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if np.any(lo >= hi):
        raise ValueError("grid bounds must satisfy lo < hi per dimension")
    dim = lo.size
    if points**dim > max_cells:
        raise ValueError(f"grid of {points}**{dim} cells exceeds cap {max_cells}")

    best_x, best_v = None, -np.inf
    evals = 0
    span = hi - lo
    center = 0.5 * (lo + hi)
    for _ in range(refine + 1):
        axes = [
            np.linspace(
                max(lo[i], center[i] - 0.5 * span[i]),
                min(hi[i], center[i] + 0.5 * span[i]),
                points,
            )
            for i in range(dim)
        ]
        for idx in np.ndindex(*(points,) * dim):
            x = np.array([axes[i][idx[i]] for i in range(dim)])
            v = _as_finite(f(x), f"x={x}")
            evals += 1
            if v > best_v:
                best_x, best_v = x, v
        center = best_x
        span = span / float(points - 1) * 2.0
    return OptResult(argmax=best_x, value=best_v, iterations=evals)


def _simplex_grid(q: int, resolution: float):
    """Weight vectors on the q-simplex with the given grid resolution."""
    steps = int(round(1.0 / resolution))
    if q == 1:
        yield (1.0,)
        return

    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining / steps,)
            return
        for v in range(remaining + 1):
            yield from rec(prefix + (v / steps,), remaining - v, slots - 1)

    for w in rec((), steps, q):
        if min(w) > 0.0:
            yield w


def timeshare_search(
    inner: Callable[[Sequence[float], Sequence[float]], OptResult],
    q_card: int,
    weight_resolution: float = 0.05,
    scale_points: int = 9,
) -> OptResult:
    """Search over time-share weights and per-phase power scalings.

    ``inner(weights, scales)`` must optimize the remaining per-phase
    parameters (quantizers) and return an OptResult; phase q runs at input
    covariance scales[q] * cap, and the scales are enumerated on the surface
    sum_q weights[q] * scales[q] = 1, which meets the coupled power
    constraint with full power use.  q_card = 1 reduces to a single inner
    call with the cap itself.
    """
    if q_card < 1 or q_card > 3:
        raise ValueError("q_card must be in {1, 2, 3}")
    best = None
    total_it = 0
    for weights in _simplex_grid(q_card, weight_resolution):
        for scales in _scale_grid(weights, scale_points):
            res = inner(weights, scales)
            total_it += res.iterations
            if best is None or res.value > best.value:
                best = OptResult(
                    argmax={"weights": weights, "scales": scales, "inner": res.argmax},
                    value=res.value,
                    iterations=total_it,
                    feasibility_residual=res.feasibility_residual,
                    restarts_used=res.restarts_used,
                    kkt_residual=res.kkt_residual,
                )
    best.iterations = total_it
    return best


def _scale_grid(weights, scale_points):
    q = len(weights)
    if q == 1:
        yield (1.0,)
        return
    if q == 2:
        a1, a2 = weights
        for frac in np.linspace(0.0, 1.0, scale_points):
            # fraction of the power budget spent in phase 1
            yield (frac / a1, (1.0 - frac) / a2)
        return
    a = np.asarray(weights)
    pts = max(3, int(round(scale_points ** 0.5)))
    for f1 in np.linspace(0.0, 1.0, pts):
        for f2 in np.linspace(0.0, 1.0 - f1, pts):
            f3 = 1.0 - f1 - f2
            yield (f1 / a[0], f2 / a[1], f3 / a[2])
