"""User-facing estimators.

Weight-only fit (both locations known), full three-parameter fit, the
moment estimator of the weight, the component CDF/density estimators with
symmetrization, projection and renormalization, and jackknife standard
errors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .contrast import P1Objective, P2Objective
from .empirical import Bandwidth, Sample, default_bandwidth, ecdf, kde
from .operators import (
    Curve,
    MixtureParams,
    ParamSpace,
    SeriesTruncation,
    apply_unmixing,
)
from .optimize import OptimConfig, OptimResult, default_starts, minimize_1d, minimize_box

__all__ = [
    "FitResult",
    "DensityEstimate",
    "default_space",
    "fit_lambda",
    "moment_lambda",
    "fit_theta",
    "estimate_component_cdf",
    "estimate_component_density",
    "jackknife_se",
    "symmetric_grid",
    "default_grid",
]


@dataclass(frozen=True)
class FitResult:
    """A fitted parameter set with optimizer diagnostics.

    ``theta`` is a :class:`MixtureParams` when the estimate satisfies the
    strict model invariants; EM can legitimately return degenerate triples
    (equal locations, weight exactly 1/2), stored as a plain tuple.
    ``objective`` is the contrast at the optimum for problems P1/P2 (always
    >= 0) and the mean negative log-likelihood for EM.
    """

    theta: MixtureParams | tuple
    objective: float
    diagnostics: OptimResult
    problem: str
    se: np.ndarray | None = None
    sigma: float | None = None
    loglik_trace: np.ndarray | None = None

    def as_triple(self) -> tuple[float, float, float]:
        if isinstance(self.theta, MixtureParams):
            return (self.theta.lam, self.theta.mu1, self.theta.mu2)
        return tuple(float(v) for v in self.theta)


@dataclass(frozen=True)
class DensityEstimate:
    """Projected, renormalized component density on a symmetric grid.

    ``curve`` holds the final density (nonnegative, trapezoid integral 1);
    ``raw_ordinates`` the pre-projection values; ``normalization`` the mass
    of the projected positive part.
    """

    curve: Curve
    normalization: float
    projected: bool
    raw_ordinates: np.ndarray


def default_space(
    sample: Sample, d: float = 0.05, min_separation: float = 0.2
) -> ParamSpace:
    """Data-driven feasible box: locations split at the 0.4 sample quantile
    with disjoint boxes, weight in [0, 1/2 - d].

    The split sits below the median because the second component always
    carries the majority of the mass (weight at most 1/2): in population the
    0.4 quantile lies strictly between the two locations for any feasible
    weight, with a margin on both sides.
    """
    split = float(np.quantile(sample.values, 0.4))
    half = 0.5 * min_separation
    mu1_hi = split - half
    mu2_lo = split + half
    # Rounding can leave the gap an ulp short of min_separation; bump up.
    while mu2_lo - mu1_hi < min_separation:
        mu2_lo = float(np.nextafter(mu2_lo, np.inf))
    return ParamSpace(
        d=d,
        mu1_lo=min(float(sample.values[0]), split - min_separation),
        mu1_hi=mu1_hi,
        mu2_lo=mu2_lo,
        mu2_hi=max(float(sample.values[-1]), split + min_separation),
        min_separation=min_separation,
    )


def moment_lambda(sample: Sample, mu1: float, mu2: float, space: ParamSpace) -> float:
    """Weight from the first-moment identity ``E X = lam*mu1 + (1-lam)*mu2``,
    clipped into [0, 1/2 - d]."""
    if mu1 == mu2:
        raise ValueError("mu1 and mu2 must differ")
    raw = (mu2 - float(sample.values.mean())) / (mu2 - mu1)
    return float(np.clip(raw, 0.0, space.lam_hi))


def fit_lambda(
    sample: Sample,
    mu1: float,
    mu2: float,
    space: ParamSpace,
    cfg: OptimConfig | None = None,
) -> FitResult:
    """Estimate the mixing weight with both locations known (problem P1)."""
    if cfg is None:
        cfg = OptimConfig()
    objective = P1Objective(sample, mu1, mu2)
    x0 = moment_lambda(sample, mu1, mu2, space)
    res = minimize_1d(objective, 0.0, space.lam_hi, x0, cfg)
    lam = float(res.x_opt[0])
    return FitResult(
        theta=MixtureParams(min(lam, space.lam_hi), mu1, mu2),
        objective=res.f_opt,
        diagnostics=res,
        problem="P1",
    )


def fit_theta(
    sample: Sample,
    space: ParamSpace,
    b: Bandwidth | None = None,
    cfg: OptimConfig | None = None,
    starts: list[np.ndarray] | None = None,
) -> FitResult:
    """Estimate (lam, mu1, mu2) jointly (problem P2) by multi-start
    projected BFGS on the smoothed contrast.

    ``starts`` overrides the default starting points (the moment-style
    point plus a low-discrepancy grid over the box).
    """
    if cfg is None:
        cfg = OptimConfig()
    if b is None:
        b = default_bandwidth(sample.n)
    objective = P2Objective(sample, b)
    if starts is None:
        starts = default_starts(space, sample, cfg.n_starts)
    res = minimize_box(objective, space.lower(), space.upper(), starts, cfg)
    lam, mu1, mu2 = (float(v) for v in res.x_opt)
    return FitResult(
        theta=MixtureParams(min(lam, space.lam_hi), mu1, mu2),
        objective=res.f_opt,
        diagnostics=res,
        problem="P2",
    )


def symmetric_grid(half_width: float, n_points: int) -> np.ndarray:
    """Strictly increasing grid, exactly symmetric under negation.

    Built by mirroring the positive half, so ``grid == -grid[::-1]``
    bitwise; contains 0 when ``n_points`` is odd.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    m = n_points // 2
    pos = np.linspace(0.0, half_width, m + 1)[1:]
    if n_points % 2:
        return np.concatenate([-pos[::-1], [0.0], pos])
    return np.concatenate([-pos[::-1], pos])


def default_grid(
    sample: Sample, params: MixtureParams | tuple, b: Bandwidth, n_points: int = 512
) -> np.ndarray:
    """Symmetric evaluation grid covering the centered data and kernel
    support under both location shifts."""
    lam, mu1, mu2 = (
        params.as_array() if isinstance(params, MixtureParams) else np.asarray(params)
    )
    reach = max(
        float(np.max(np.abs(sample.values - mu1))),
        float(np.max(np.abs(sample.values - mu2))),
    )
    return symmetric_grid(reach + 3.0 * b.value, n_points)


def estimate_component_cdf(
    sample: Sample,
    params: MixtureParams,
    grid,
    trunc: SeriesTruncation | None = None,
) -> Curve:
    """Component CDF estimate: symmetrized unmixing of the ECDF.

    The symmetrization is exact in floating point: ``F(x) + F(-x) == 1``
    bitwise at paired points (negative abscissae are computed as the exact
    complement of their mirror), and ``F(0) == 0.5``.  The ordinates are a
    valid CDF: nondecreasing along the grid and inside [0, 1].
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    ax = np.abs(grid)

    def g_hat(y):
        return ecdf(sample, y)

    u_pos = apply_unmixing(params, g_hat, ax, trunc)
    u_neg = apply_unmixing(params, g_hat, -ax, trunc)
    # A symmetric CDF satisfies F(x) >= 1/2 for x >= 0, so the raw
    # symmetrized ordinates are clipped into [1/2, 1] and made
    # nondecreasing in |x|; neither step can increase the sup-norm error
    # against a symmetric CDF.  For p in [1/2, 1] the float complement
    # 1 - p is exact, so the pairing identity holds bitwise.
    f_pos = np.clip(
        0.5 + 0.5 * (np.atleast_1d(u_pos) - np.atleast_1d(u_neg)), 0.5, 1.0
    )
    order = np.argsort(ax, kind="stable")
    f_pos[order] = np.maximum.accumulate(f_pos[order])
    y = np.where(grid >= 0.0, f_pos, 1.0 - f_pos)
    return Curve(grid, y)


def estimate_component_density(
    sample: Sample,
    params: MixtureParams,
    b: Bandwidth,
    grid,
    trunc: SeriesTruncation | None = None,
) -> DensityEstimate:
    """Component density estimate: symmetrized unmixing of the KDE,
    projected to the positive part and renormalized to unit mass.

    The grid must be exactly symmetric under negation (see
    :func:`symmetric_grid`); the result is exactly even.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-D array with at least 2 points")
    if not np.array_equal(grid, -grid[::-1]):
        raise ValueError("grid must be symmetric about 0 (see symmetric_grid)")
    ax = np.abs(grid)

    def g_density(y):
        return kde(sample, b, y)

    u_pos = np.atleast_1d(apply_unmixing(params, g_density, ax, trunc))
    u_neg = np.atleast_1d(apply_unmixing(params, g_density, -ax, trunc))
    raw = 0.5 * (u_pos + u_neg)  # even in x by construction (|x| only)
    f_star = np.maximum(raw, 0.0)
    mass = float(np.trapezoid(f_star, grid))
    if mass <= 0.0:
        raise ValueError("degenerate projection: nonpositive mass")
    return DensityEstimate(
        curve=Curve(grid, f_star / mass),
        normalization=mass,
        projected=True,
        raw_ordinates=raw,
    )


def jackknife_se(sample: Sample, fit_fn) -> np.ndarray:
    """Leave-one-out jackknife standard errors of a deterministic estimator.

    ``fit_fn`` maps a Sample to a parameter vector.  Failed leave-one-out
    fits are dropped (with a warning when more than 1% fail); the SE is
    sqrt(((m-1)/m) * sum_i (theta_i - mean)**2) over the m successes.
    """
    if sample.n < 3:
        raise ValueError("jackknife needs n >= 3")
    estimates = []
    failures = 0
    for i in range(sample.n):
        loo = Sample(np.delete(sample.values, i))
        try:
            estimates.append(np.atleast_1d(np.asarray(fit_fn(loo), dtype=float)))
        except Exception:  # noqa: BLE001 - any fit failure is recorded
            failures += 1
    if failures:
        warnings.warn(
            f"jackknife: {failures}/{sample.n} leave-one-out fits failed",
            stacklevel=2,
        )
    if len(estimates) < 2:
        raise ValueError("jackknife: fewer than 2 successful leave-one-out fits")
    mat = np.vstack(estimates)
    m = mat.shape[0]
    dev = mat - mat.mean(axis=0)
    return np.sqrt((m - 1) / m * np.sum(dev**2, axis=0))
