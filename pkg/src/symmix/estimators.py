"""scikit-learn style estimator wrappers around the functional API."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .em import EmConfig, em_fit
from .empirical import Bandwidth, Sample, default_bandwidth
from .estimate import (
    default_grid,
    default_space,
    estimate_component_cdf,
    estimate_component_density,
    fit_lambda,
    fit_theta,
    jackknife_se,
)
from .operators import MixtureParams
from .optimize import OptimConfig, default_starts
from .simulate import gaussian_mixture_pdf

__all__ = [
    "ShiftedSymmetricMixture",
    "KnownLocationsMixture",
    "GaussianMixtureMLE",
]


def _as_points(X) -> np.ndarray:
    """Validated 1-D float array of query points (any length >= 1)."""
    if isinstance(X, Sample):
        return X.values
    arr = check_array(
        X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True
    )
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError("expected a single column of observations")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError("expected a 1-D array of observations")
    return arr


def _as_sample(X) -> Sample:
    return Sample.from_values(_as_points(X))


class _SymmetricComponentMixin:
    """Shared accessors for estimators exposing a fitted symmetric
    component density and CDF on a grid."""

    def component_cdf(self, x) -> np.ndarray:
        """Estimated CDF of the centered symmetric component."""
        check_is_fitted(self, "lambda_")
        c = self.cdf_curve_
        return np.interp(np.asarray(x, dtype=float), c.x, c.y, left=0.0, right=1.0)

    def component_density(self, x) -> np.ndarray:
        """Estimated density of the centered symmetric component."""
        check_is_fitted(self, "lambda_")
        c = self.density_.curve
        return np.interp(np.asarray(x, dtype=float), c.x, c.y, left=0.0, right=0.0)

    def mixture_density(self, x) -> np.ndarray:
        """Plug-in mixture density at the fitted parameters."""
        x = np.asarray(x, dtype=float)
        return self.lambda_ * self.component_density(
            x - self.mu1_
        ) + (1.0 - self.lambda_) * self.component_density(x - self.mu2_)

    def score_samples(self, X) -> np.ndarray:
        """Log of the plug-in mixture density."""
        check_is_fitted(self, "lambda_")
        x = _as_points(X)
        with np.errstate(divide="ignore"):
            return np.log(self.mixture_density(x))

    def score(self, X, y=None) -> float:
        """Mean log-density of the data under the fitted mixture."""
        return float(np.mean(self.score_samples(X)))

    def predict_proba(self, X) -> np.ndarray:
        """Posterior component responsibilities, columns (first, second).

        Points outside the estimated support get the prior weights.
        """
        check_is_fitted(self, "lambda_")
        x = _as_points(X)
        a = self.lambda_ * self.component_density(x - self.mu1_)
        mix = a + (1.0 - self.lambda_) * self.component_density(x - self.mu2_)
        p1 = np.where(mix > 0.0, a / np.where(mix > 0.0, mix, 1.0), self.lambda_)
        return np.column_stack([p1, 1.0 - p1])

    def predict(self, X) -> np.ndarray:
        """Most likely component label (0 for the first, 1 for the second)."""
        return (self.predict_proba(X)[:, 0] < 0.5).astype(int)


class ShiftedSymmetricMixture(_SymmetricComponentMixin, DensityMixin, BaseEstimator):
    """Two-component location mixture of an unknown symmetric density.

    Fits the weight and both shifts by minimizing a smoothed symmetry
    defect, then recovers the component CDF and density nonparametrically.

    Parameters
    ----------
    d : float, default=0.05
        Margin keeping the weight away from 1/2; the weight is searched in
        [0, 1/2 - d].
    min_separation : float, default=0.2
        Minimal allowed gap between the two shifts.
    bandwidth : float or None, default=None
        Kernel bandwidth; None selects n**(-1/4).
    n_starts : int, default=8
        Multi-start count for the optimizer.
    grid_points : int, default=512
        Size of the symmetric grid carrying the component estimates.
    jackknife : bool, default=False
        Whether to compute leave-one-out standard errors (slow).
    max_iters, grad_tol : optimizer controls.

    Attributes
    ----------
    lambda_, mu1_, mu2_ : fitted parameters (weight <= 1/2 - d).
    contrast_ : contrast value at the optimum.
    converged_ : whether the winning local search converged.
    cdf_curve_ : Curve with the component CDF estimate.
    density_ : DensityEstimate with the projected component density.
    se_ : jackknife standard errors, or None.
    """

    def __init__(
        self,
        d: float = 0.05,
        min_separation: float = 0.2,
        bandwidth: float | None = None,
        n_starts: int = 8,
        grid_points: int = 512,
        jackknife: bool = False,
        max_iters: int = 500,
        grad_tol: float = 1e-7,
    ):
        self.d = d
        self.min_separation = min_separation
        self.bandwidth = bandwidth
        self.n_starts = n_starts
        self.grid_points = grid_points
        self.jackknife = jackknife
        self.max_iters = max_iters
        self.grad_tol = grad_tol

    def _cfg(self) -> OptimConfig:
        return OptimConfig(
            grad_tol=self.grad_tol,
            max_iters=self.max_iters,
            n_starts=self.n_starts,
        )

    def fit(self, X, y=None):
        sample = _as_sample(X)
        space = default_space(sample, self.d, self.min_separation)
        b = (
            default_bandwidth(sample.n)
            if self.bandwidth is None
            else Bandwidth(float(self.bandwidth), rule="fixed")
        )
        res = fit_theta(sample, space, b, self._cfg())
        self.lambda_, self.mu1_, self.mu2_ = res.as_triple()
        self.contrast_ = res.objective
        self.converged_ = res.diagnostics.converged
        self.n_iter_ = res.diagnostics.n_iters
        theta = MixtureParams(self.lambda_, self.mu1_, self.mu2_)
        grid = default_grid(sample, theta, b, self.grid_points)
        self.cdf_curve_ = estimate_component_cdf(sample, theta, grid)
        self.density_ = estimate_component_density(sample, theta, b, grid)
        self.bandwidth_ = b.value
        self.se_ = None
        if self.jackknife:
            cfg = self._cfg()

            def refit(s: Sample) -> np.ndarray:
                bs = (
                    default_bandwidth(s.n)
                    if self.bandwidth is None
                    else Bandwidth(float(self.bandwidth), rule="fixed")
                )
                r = fit_theta(s, default_space(s, self.d, self.min_separation), bs, cfg)
                return np.asarray(r.as_triple())

            self.se_ = jackknife_se(sample, refit)
        return self


class KnownLocationsMixture(_SymmetricComponentMixin, DensityMixin, BaseEstimator):
    """Mixture weight estimator when both location shifts are known.

    Minimizes the symmetry defect of the unmixed empirical CDF over the
    weight alone; the component density shown by the accessors uses a
    kernel estimate with the same unmixing.

    Parameters
    ----------
    mu1, mu2 : the two known shifts (mu1 != mu2).
    d, bandwidth, grid_points, jackknife, max_iters, grad_tol : as in
        :class:`ShiftedSymmetricMixture`.

    Attributes
    ----------
    lambda_ : fitted weight.
    moment_lambda_ : first-moment plug-in weight used as the start.
    contrast_, converged_, cdf_curve_, density_, se_ : as in
        :class:`ShiftedSymmetricMixture`.
    """

    def __init__(
        self,
        mu1: float,
        mu2: float,
        d: float = 0.05,
        bandwidth: float | None = None,
        grid_points: int = 512,
        jackknife: bool = False,
        max_iters: int = 500,
        grad_tol: float = 1e-7,
    ):
        self.mu1 = mu1
        self.mu2 = mu2
        self.d = d
        self.bandwidth = bandwidth
        self.grid_points = grid_points
        self.jackknife = jackknife
        self.max_iters = max_iters
        self.grad_tol = grad_tol

    def fit(self, X, y=None):
        from .estimate import moment_lambda

        sample = _as_sample(X)
        space = default_space(sample, self.d)
        cfg = OptimConfig(grad_tol=self.grad_tol, max_iters=self.max_iters, n_starts=1)
        res = fit_lambda(sample, float(self.mu1), float(self.mu2), space, cfg)
        self.lambda_, self.mu1_, self.mu2_ = res.as_triple()
        self.moment_lambda_ = moment_lambda(
            sample, float(self.mu1), float(self.mu2), space
        )
        self.contrast_ = res.objective
        self.converged_ = res.diagnostics.converged
        self.n_iter_ = res.diagnostics.n_iters
        b = (
            default_bandwidth(sample.n)
            if self.bandwidth is None
            else Bandwidth(float(self.bandwidth), rule="fixed")
        )
        theta = MixtureParams(self.lambda_, self.mu1_, self.mu2_)
        grid = default_grid(sample, theta, b, self.grid_points)
        self.cdf_curve_ = estimate_component_cdf(sample, theta, grid)
        self.density_ = estimate_component_density(sample, theta, b, grid)
        self.bandwidth_ = b.value
        self.se_ = None
        if self.jackknife:

            def refit(s: Sample) -> np.ndarray:
                r = fit_lambda(s, float(self.mu1), float(self.mu2), default_space(s, self.d), cfg)
                return np.asarray([r.as_triple()[0]])

            self.se_ = jackknife_se(sample, refit)
        return self


class GaussianMixtureMLE(DensityMixin, BaseEstimator):
    """Two-component Gaussian mixture fitted by EM (parametric baseline).

    Parameters
    ----------
    sigma : float, default=1.0
        Common component scale.
    estimate_sigma : bool, default=False
        Jointly estimate the scale.
    tol_loglik : float, default=1e-9
        Stop when the log-likelihood gain drops below this.
    max_iters : int, default=2000

    Attributes
    ----------
    lambda_, mu1_, mu2_, sigma_ : fitted parameters (weight <= 1/2 after
        label canonicalization).
    loglik_ : final log-likelihood.
    loglik_trace_ : log-likelihood at every iterate (nondecreasing).
    converged_, n_iter_ : stopping diagnostics.
    """

    def __init__(
        self,
        sigma: float = 1.0,
        estimate_sigma: bool = False,
        tol_loglik: float = 1e-9,
        max_iters: int = 2000,
    ):
        self.sigma = sigma
        self.estimate_sigma = estimate_sigma
        self.tol_loglik = tol_loglik
        self.max_iters = max_iters

    def fit(self, X, y=None):
        sample = _as_sample(X)
        cfg = EmConfig(
            sigma=self.sigma,
            estimate_sigma=self.estimate_sigma,
            tol_loglik=self.tol_loglik,
            max_iters=self.max_iters,
        )
        init = default_starts(default_space(sample), sample, 1)[0]
        res = em_fit(sample, init, cfg)
        self.lambda_, self.mu1_, self.mu2_ = res.as_triple()
        self.sigma_ = res.sigma
        self.loglik_ = float(res.loglik_trace[-1])
        self.loglik_trace_ = res.loglik_trace
        self.converged_ = res.diagnostics.converged
        self.n_iter_ = res.diagnostics.n_iters
        return self

    def _params(self) -> tuple[float, float, float, float]:
        check_is_fitted(self, "lambda_")
        return self.lambda_, self.mu1_, self.mu2_, self.sigma_

    def score_samples(self, X) -> np.ndarray:
        """Log-density of the fitted Gaussian mixture."""
        lam, m1, m2, sg = self._params()
        x = _as_points(X)
        z1 = (x - m1) / sg
        z2 = (x - m2) / sg
        base = -0.5 * np.log(2.0 * np.pi) - np.log(sg)
        with np.errstate(divide="ignore"):
            return np.logaddexp(
                np.log(lam) + base - 0.5 * z1 * z1,
                np.log1p(-lam) + base - 0.5 * z2 * z2,
            )

    def score(self, X, y=None) -> float:
        return float(np.mean(self.score_samples(X)))

    def predict_proba(self, X) -> np.ndarray:
        """Exact Gaussian responsibilities, columns (first, second)."""
        from scipy.special import expit

        lam, m1, m2, sg = self._params()
        x = _as_points(X)
        z1 = (x - m1) / sg
        z2 = (x - m2) / sg
        with np.errstate(divide="ignore"):
            la = np.log(lam) - 0.5 * z1 * z1
            lb = np.log1p(-lam) - 0.5 * z2 * z2
        p1 = expit(la - lb)
        return np.column_stack([p1, 1.0 - p1])

    def predict(self, X) -> np.ndarray:
        """Most likely component label (0 for the first, 1 for the second)."""
        return (self.predict_proba(X)[:, 0] < 0.5).astype(int)

    def sample_density(self, x) -> np.ndarray:
        """Fitted mixture density at arbitrary points."""
        lam, m1, m2, sg = self._params()
        try:
            theta = MixtureParams(lam, m1, m2)
        except ValueError:
            x = np.asarray(x, dtype=float)
            c = 1.0 / (sg * np.sqrt(2.0 * np.pi))
            z1 = (x - m1) / sg
            z2 = (x - m2) / sg
            return c * (lam * np.exp(-0.5 * z1 * z1) + (1 - lam) * np.exp(-0.5 * z2 * z2))
        return gaussian_mixture_pdf(theta, sg, x)
