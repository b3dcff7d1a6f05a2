"""Maximum-likelihood baseline: EM for a two-component Gaussian mixture
with a common known (or jointly estimated) scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .empirical import Sample
from .estimate import FitResult
from .operators import MixtureParams
from .optimize import OptimResult

__all__ = ["EmConfig", "loglik", "em_fit"]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class EmConfig:
    """EM controls: common scale (fixed or estimated), stopping rule."""

    sigma: float = 1.0
    estimate_sigma: bool = False
    tol_loglik: float = 1e-9
    max_iters: int = 2000

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive and finite")
        if not (np.isfinite(self.tol_loglik) and self.tol_loglik > 0):
            raise ValueError("tol_loglik must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


def _log_terms(x, lam, mu1, mu2, sigma):
    """Per-observation log of each weighted component density."""
    z1 = (x - mu1) / sigma
    z2 = (x - mu2) / sigma
    base = -0.5 * _LOG_2PI - np.log(sigma)
    with np.errstate(divide="ignore"):
        la = np.log(lam) + base - 0.5 * z1 * z1
        lb = np.log1p(-lam) + base - 0.5 * z2 * z2
    return la, lb


def loglik(sample: Sample, theta: MixtureParams | tuple, sigma: float) -> float:
    """Gaussian-mixture log-likelihood, stable for extreme weights.

    ``theta`` may be a plain (lam, mu1, mu2) triple, so label-swapped
    parameterizations (weight above 1/2) are evaluable too.
    """
    if isinstance(theta, MixtureParams):
        lam, mu1, mu2 = theta.lam, theta.mu1, theta.mu2
    else:
        lam, mu1, mu2 = (float(v) for v in theta)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    la, lb = _log_terms(sample.values, lam, mu1, mu2, sigma)
    return float(np.logaddexp(la, lb).sum())


def _canonical(lam, mu1, mu2):
    """Resolve the label swap: weight at most 1/2, ties by location order."""
    if lam > 0.5 or (lam == 0.5 and mu1 > mu2):
        return 1.0 - lam, mu2, mu1
    return lam, mu1, mu2


def em_fit(
    sample: Sample,
    init: MixtureParams | tuple,
    cfg: EmConfig | None = None,
) -> FitResult:
    """Fit the Gaussian mixture by EM from a given start.

    Stops when the log-likelihood gain drops below ``tol_loglik``.  A
    collapsed E-step (one component receiving ~zero total responsibility)
    triggers up to 3 deterministic perturbed restarts; if all collapse, the
    last iterate is returned flagged as not converged.  The returned weight
    is canonicalized to at most 1/2; ``theta`` falls back to a plain tuple
    when the iterate violates the strict model invariants (equal locations
    or weight exactly 1/2).  ``objective`` is the mean negative
    log-likelihood and ``loglik_trace`` records the log-likelihood at every
    parameter iterate, so it is nondecreasing within each restart.
    """
    if cfg is None:
        cfg = EmConfig()
    x = sample.values
    n = sample.n
    if isinstance(init, MixtureParams):
        lam0, m10, m20 = init.lam, init.mu1, init.mu2
    else:
        lam0, m10, m20 = (float(v) for v in init)
    spread = float(x.std()) or 1.0

    lam, m1, m2, sigma = lam0, m10, m20, cfg.sigma
    trace: list[float] = []
    converged = False
    collapsed = False
    total_iters = 0
    for attempt in range(4):
        if attempt:
            # Deterministic perturbation away from the collapsed start.
            lam = float(np.clip(lam0, 0.1, 0.4))
            m1 = m10 - 0.5 * attempt * spread
            m2 = m20 + 0.5 * attempt * spread
            sigma = cfg.sigma
        trace = []
        collapsed = False
        ll_prev = -np.inf
        for _ in range(cfg.max_iters):
            la, lb = _log_terms(x, lam, m1, m2, sigma)
            ll = float(np.logaddexp(la, lb).sum())
            trace.append(ll)
            total_iters += 1
            if ll - ll_prev < cfg.tol_loglik:
                converged = True
                break
            ll_prev = ll
            r = expit(la - lb)
            s1 = float(r.sum())
            s2 = n - s1
            if s1 < 1e-8 or s2 < 1e-8:
                collapsed = True
                break
            lam = s1 / n
            m1 = float(r @ x) / s1
            m2 = float((1.0 - r) @ x) / s2
            if cfg.estimate_sigma:
                var = (float(r @ (x - m1) ** 2) + float((1.0 - r) @ (x - m2) ** 2)) / n
                sigma = float(np.sqrt(max(var, 1e-300)))
        if not collapsed:
            break

    lam, m1, m2 = _canonical(lam, m1, m2)
    converged = converged and not collapsed
    try:
        theta: MixtureParams | tuple = MixtureParams(lam, m1, m2)
    except ValueError:
        theta = (lam, m1, m2)
    diag = OptimResult(
        x_opt=np.array([lam, m1, m2]),
        f_opt=-trace[-1] / n,
        n_iters=len(trace),
        n_evals=total_iters,
        converged=converged,
        active_bounds=frozenset(),
    )
    return FitResult(
        theta=theta,
        objective=-trace[-1] / n,
        diagnostics=diag,
        problem="EM",
        sigma=sigma,
        loglik_trace=np.asarray(trace),
    )
