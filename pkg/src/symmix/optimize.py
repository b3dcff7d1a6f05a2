"""Box-constrained quasi-Newton minimization with multi-start.

Projected BFGS: coordinates pinned at a bound with an outward-pointing
gradient form the active set; the quasi-Newton model lives on the free
subspace and is reset whenever the active set changes.  Steps are chosen by
a strong-Wolfe line search with cubic interpolation, capped at the largest
feasible step.  The objective protocol is ``f(x: ndarray) -> (value, grad)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .empirical import Sample
from .operators import ParamSpace

__all__ = [
    "OptimConfig",
    "OptimResult",
    "minimize_1d",
    "minimize_box",
    "default_starts",
]


@dataclass(frozen=True)
class OptimConfig:
    """Optimizer settings (see module docstring for semantics)."""

    grad_tol: float = 1e-7
    step_tol: float = 1e-10
    max_iters: int = 500
    n_starts: int = 8
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    ls_max_trials: int = 30

    def __post_init__(self):
        if not (0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0):
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.max_iters < 1 or self.n_starts < 1 or self.ls_max_trials < 1:
            raise ValueError("max_iters, n_starts and ls_max_trials must be >= 1")
        if not (np.isfinite(self.grad_tol) and self.grad_tol > 0):
            raise ValueError("grad_tol must be positive and finite")
        if not (np.isfinite(self.step_tol) and self.step_tol > 0):
            raise ValueError("step_tol must be positive and finite")


@dataclass(frozen=True)
class OptimResult:
    """Outcome of a minimization run.

    ``active_bounds`` holds identifiers like ``"0:lo"`` / ``"2:hi"`` for
    coordinates pinned at a box face at the solution.  For multi-start runs,
    ``n_evals`` counts objective evaluations across all starts while
    ``n_iters`` and ``converged`` describe the winning start.
    """

    x_opt: np.ndarray
    f_opt: float
    n_iters: int
    n_evals: int
    converged: bool
    active_bounds: frozenset[str]


class _CountedObjective:
    def __init__(self, f):
        self._f = f
        self.n_evals = 0

    def __call__(self, x):
        self.n_evals += 1
        value, grad = self._f(x)
        return float(value), np.asarray(grad, dtype=float).ravel()


def _cubic_min(a0, f0, g0, a1, f1, g1):
    """Minimizer of the cubic matching values/slopes at a0, a1 (nan on
    degeneracy); exact for quadratic objectives."""
    d1 = g0 + g1 - 3.0 * (f0 - f1) / (a0 - a1)
    rad = d1 * d1 - g0 * g1
    if rad < 0.0:
        return math.nan
    d2 = math.copysign(math.sqrt(rad), a1 - a0)
    denom = g1 - g0 + 2.0 * d2
    if denom == 0.0:
        return math.nan
    return a1 - (a1 - a0) * (g1 + d2 - d1) / denom


class _Budget:
    def __init__(self, n):
        self.left = n

    def take(self):
        self.left -= 1
        return self.left >= 0


def _zoom(F, x, d, f0, dphi0, alo, flo, dlo, ahi, fhi, dhi, cfg, budget):
    c1, c2 = cfg.wolfe_c1, cfg.wolfe_c2
    while budget.take():
        a = _cubic_min(alo, flo, dlo, ahi, fhi, dhi)
        span_lo, span_hi = min(alo, ahi), max(alo, ahi)
        guard = 0.1 * (span_hi - span_lo)
        if not (span_lo + guard <= a <= span_hi - guard) or math.isnan(a):
            a = 0.5 * (span_lo + span_hi)
        f_a, g_a = F(x + a * d)
        dphi = float(g_a @ d)
        if f_a > f0 + c1 * a * dphi0 or f_a >= flo:
            ahi, fhi, dhi = a, f_a, dphi
        else:
            if abs(dphi) <= -c2 * dphi0:
                return a, f_a, g_a, True
            if dphi * (ahi - alo) >= 0.0:
                ahi, fhi, dhi = alo, flo, dlo
            alo, flo, dlo = a, f_a, dphi
        if abs(ahi - alo) < 1e-16:
            break
    # Budget exhausted: the lo side always satisfies sufficient decrease.
    if flo < f0:
        f_a, g_a = F(x + alo * d)
        return alo, f_a, g_a, True
    return 0.0, f0, None, False


def _line_search(F, x, d, f0, g0, amax, cfg):
    """Strong-Wolfe search for phi(a) = f(x + a d) on (0, amax]."""
    c1, c2 = cfg.wolfe_c1, cfg.wolfe_c2
    dphi0 = float(g0 @ d)
    budget = _Budget(cfg.ls_max_trials)
    a_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    a = min(1.0, amax)
    first = True
    while budget.take():
        f_a, g_a = F(x + a * d)
        dphi = float(g_a @ d)
        if f_a > f0 + c1 * a * dphi0 or (not first and f_a >= f_prev):
            return _zoom(
                F, x, d, f0, dphi0, a_prev, f_prev, dphi_prev, a, f_a, dphi, cfg, budget
            )
        if abs(dphi) <= -c2 * dphi0:
            return a, f_a, g_a, True
        if dphi >= 0.0:
            return _zoom(
                F, x, d, f0, dphi0, a, f_a, dphi, a_prev, f_prev, dphi_prev, cfg, budget
            )
        if a >= amax * (1.0 - 1e-12):
            # Feasible cap reached while still descending: accept the cap.
            return a, f_a, g_a, True
        a_prev, f_prev, dphi_prev = a, f_a, dphi
        a = min(2.0 * a, amax)
        first = False
    return 0.0, f0, None, False


def _active_mask(x, g, lower, upper, snap):
    at_lo = x <= lower + snap
    at_hi = x >= upper - snap
    return (at_lo & (g > 0.0)) | (at_hi & (g < 0.0))


def _bound_ids(x, lower, upper, snap):
    ids = []
    for i in range(x.size):
        if x[i] <= lower[i] + snap[i]:
            ids.append(f"{i}:lo")
        elif x[i] >= upper[i] - snap[i]:
            ids.append(f"{i}:hi")
    return frozenset(ids)


def _max_feasible_step(x, d, lower, upper):
    amax = math.inf
    for i in range(x.size):
        if d[i] > 0.0:
            amax = min(amax, (upper[i] - x[i]) / d[i])
        elif d[i] < 0.0:
            amax = min(amax, (lower[i] - x[i]) / d[i])
    return amax


def _bfgs_from(F, x0, lower, upper, cfg):
    dim = x0.size
    snap = 1e-12 * (1.0 + np.maximum(np.abs(lower), np.abs(upper)))
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)

    def feval(z):
        # amax arithmetic can overshoot the box by an ulp; evaluate inside.
        return F(np.clip(z, lower, upper))

    f, g = feval(x)
    h = np.eye(dim)
    active_prev = None
    converged = False
    stalls = 0
    n_iters = 0
    for _ in range(cfg.max_iters):
        active = _active_mask(x, g, lower, upper, snap)
        pg = np.where(active, 0.0, g)
        if float(np.max(np.abs(pg), initial=0.0)) <= cfg.grad_tol:
            converged = True
            break
        n_iters += 1
        if active_prev is None or not np.array_equal(active, active_prev):
            h = np.eye(dim)
        active_prev = active
        free = ~active
        d = np.zeros(dim)
        d[free] = -(h[np.ix_(free, free)] @ g[free])
        steepest = False
        if float(d @ g) >= 0.0:
            h = np.eye(dim)
            d = -pg
            steepest = True
        amax = _max_feasible_step(x, d, lower, upper)
        if not amax > 1e-16:
            if steepest:
                break
            h = np.eye(dim)
            d = -pg
            steepest = True
            amax = _max_feasible_step(x, d, lower, upper)
            if not amax > 1e-16:
                break
        a, f_new, g_new, ok = _line_search(feval, x, d, f, g, amax, cfg)
        if not ok:
            if steepest:
                break
            h = np.eye(dim)
            d = -pg
            amax = _max_feasible_step(x, d, lower, upper)
            if not amax > 1e-16:
                break
            a, f_new, g_new, ok = _line_search(feval, x, d, f, g, amax, cfg)
            if not ok:
                break
        x_new = np.clip(x + a * d, lower, upper)
        x_new = np.where(x_new <= lower + snap, lower, x_new)
        x_new = np.where(x_new >= upper - snap, upper, x_new)
        s = x_new - x
        step_small = float(np.linalg.norm(s)) <= cfg.step_tol * (
            1.0 + float(np.linalg.norm(x))
        )
        y = g_new - g
        s_p = np.where(free, s, 0.0)
        y_p = np.where(free, y, 0.0)
        sy = float(s_p @ y_p)
        if sy > 1e-10 * float(np.linalg.norm(s_p)) * float(np.linalg.norm(y_p)):
            rho = 1.0 / sy
            v = np.eye(dim) - rho * np.outer(s_p, y_p)
            h = v @ h @ v.T + rho * np.outer(s_p, s_p)
        x, f, g = x_new, f_new, g_new
        if step_small:
            stalls += 1
            if stalls >= 2:
                active = _active_mask(x, g, lower, upper, snap)
                pg = np.where(active, 0.0, g)
                converged = float(np.max(np.abs(pg), initial=0.0)) <= cfg.grad_tol
                break
        else:
            stalls = 0
    else:
        active = _active_mask(x, g, lower, upper, snap)
        pg = np.where(active, 0.0, g)
        converged = float(np.max(np.abs(pg), initial=0.0)) <= cfg.grad_tol
    return OptimResult(
        x_opt=x,
        f_opt=f,
        n_iters=n_iters,
        n_evals=0,  # filled by the caller (shared counter across starts)
        converged=converged,
        active_bounds=_bound_ids(x, lower, upper, snap),
    )


def minimize_box(f_with_grad, lower, upper, starts, cfg: OptimConfig | None = None):
    """Projected-BFGS minimization over a box from multiple starts.

    Runs an independent descent from every start (in the given, fixed order)
    and returns the best feasible result; deterministic for identical inputs.
    """
    if cfg is None:
        cfg = OptimConfig()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("lower and upper must be 1-D arrays of equal length")
    if np.any(lower >= upper):
        raise ValueError("need lower < upper componentwise")
    if not starts:
        raise ValueError("need at least one start")
    F = _CountedObjective(f_with_grad)
    best = None
    for x0 in starts:
        res = _bfgs_from(F, np.asarray(x0, dtype=float), lower, upper, cfg)
        if best is None or res.f_opt < best.f_opt:
            best = res
    return OptimResult(
        x_opt=best.x_opt,
        f_opt=best.f_opt,
        n_iters=best.n_iters,
        n_evals=F.n_evals,
        converged=best.converged,
        active_bounds=best.active_bounds,
    )


def minimize_1d(f_with_grad, lo, hi, x0, cfg: OptimConfig | None = None):
    """One-dimensional wrapper around :func:`minimize_box`.

    The objective still receives a length-1 array.
    """
    return minimize_box(
        f_with_grad, np.array([lo]), np.array([hi]), [np.array([float(x0)])], cfg
    )


def _halton(i: int, base: int) -> float:
    f, r = 1.0, 0.0
    while i > 0:
        f /= base
        r += f * (i % base)
        i //= base
    return r


def default_starts(space: ParamSpace, sample: Sample, n_starts: int = 8):
    """Feasible starting points for the three-parameter fit.

    The first is moment-style: locations at the sample quartiles (clipped
    into their boxes) and the weight from the first-moment identity
    ``E X = lam*mu1 + (1-lam)*mu2``.  The rest fill the box with a Halton
    (2, 3, 5) low-discrepancy sequence.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    q25, q75 = np.quantile(sample.values, [0.25, 0.75])
    m1 = float(np.clip(q25, space.mu1_lo, space.mu1_hi))
    m2 = float(np.clip(q75, space.mu2_lo, space.mu2_hi))
    lam0 = float(
        np.clip((m2 - sample.values.mean()) / (m2 - m1), 0.0, space.lam_hi)
    )
    starts = [np.array([lam0, m1, m2])]
    for i in range(1, n_starts):
        u = np.array([_halton(i, 2), _halton(i, 3), _halton(i, 5)])
        starts.append(
            np.array(
                [
                    u[0] * space.lam_hi,
                    space.mu1_lo + u[1] * (space.mu1_hi - space.mu1_lo),
                    space.mu2_lo + u[2] * (space.mu2_hi - space.mu2_lo),
                ]
            )
        )
    return starts
