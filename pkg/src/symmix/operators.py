"""Mixing and symmetry operators for two-component shifted mixtures.

The model is ``G(x) = lam * F(x - mu1) + (1 - lam) * F(x - mu2)`` with F an
unknown CDF, symmetric about zero, and mixing weight ``lam < 1/2``.  The
mixing operator sends a component CDF to the mixture CDF; its inverse is a
geometric operator series.  Composing inverse, reflection and forward mixing
yields the symmetrized mixture ``x -> apply_mixing(reflect_cdf(apply_unmixing
(G)))`` whose fixed points characterise the true parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MixtureParams",
    "ParamSpace",
    "Curve",
    "SeriesTruncation",
    "apply_mixing",
    "apply_unmixing",
    "reflect_cdf",
    "reflect_density",
    "symmetrized_mixture_cdf",
]


@dataclass(frozen=True)
class MixtureParams:
    """Parameters of the two-component shifted mixture.

    Parameters
    ----------
    lam : float
        Mixing weight of the component at ``mu1``; must satisfy
        ``0 <= lam < 1/2`` for the inverse operator series to converge.
    mu1, mu2 : float
        Location shifts of the two components; ``mu1 != mu2``.
    """

    lam: float
    mu1: float
    mu2: float

    def __post_init__(self):
        if not (0.0 <= self.lam < 0.5):
            raise ValueError(f"lam must be in [0, 1/2), got {self.lam}")
        if self.mu1 == self.mu2:
            raise ValueError("mu1 and mu2 must differ")
        for name in ("lam", "mu1", "mu2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def eta(self) -> float:
        """Location gap ``mu2 - mu1`` (nonzero by construction)."""
        return self.mu2 - self.mu1

    def as_array(self) -> np.ndarray:
        return np.array([self.lam, self.mu1, self.mu2], dtype=float)


@dataclass(frozen=True)
class ParamSpace:
    """Feasible box for (lam, mu1, mu2).

    The weight lives in ``[0, 1/2 - d]``; the two location boxes are kept
    disjoint by at least ``min_separation`` so every feasible point has
    ``mu2 - mu1 >= min_separation`` (separation by box construction, no
    nonlinear constraint).
    """

    d: float
    mu1_lo: float
    mu1_hi: float
    mu2_lo: float
    mu2_hi: float
    min_separation: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.d < 0.5):
            raise ValueError(f"d must be in (0, 1/2), got {self.d}")
        if self.min_separation <= 0.0:
            raise ValueError("min_separation must be positive")
        if not (self.mu1_lo <= self.mu1_hi and self.mu2_lo <= self.mu2_hi):
            raise ValueError("location bounds must be ordered")
        if self.mu2_lo - self.mu1_hi < self.min_separation:
            raise ValueError(
                "location boxes must be disjoint: mu2_lo - mu1_hi >= min_separation"
            )

    @property
    def lam_hi(self) -> float:
        """Upper bound ``1/2 - d`` on the mixing weight."""
        return 0.5 - self.d

    def contains(self, params: MixtureParams) -> bool:
        return (
            0.0 <= params.lam <= self.lam_hi
            and self.mu1_lo <= params.mu1 <= self.mu1_hi
            and self.mu2_lo <= params.mu2 <= self.mu2_hi
        )

    def lower(self) -> np.ndarray:
        return np.array([0.0, self.mu1_lo, self.mu2_lo])

    def upper(self) -> np.ndarray:
        return np.array([self.lam_hi, self.mu1_hi, self.mu2_hi])


@dataclass(frozen=True)
class Curve:
    """A function sampled on a strictly increasing grid."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if x.size >= 2 and not np.all(np.diff(x) > 0):
            raise ValueError("x must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


@dataclass(frozen=True)
class SeriesTruncation:
    """Truncation policy for the inverse-operator geometric series.

    The series ratio is ``lam/(1-lam) < 1``; the partial sum keeps K terms
    with ``(lam/(1-lam))**K <= tol``, capped at ``max_terms``.
    """

    tol: float = 1e-12
    max_terms: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.tol < 1.0):
            raise ValueError("tol must be in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def n_terms(self, lam: float) -> int:
        """Number of series terms used for mixing weight ``lam``."""
        if lam <= 0.0:
            return 1
        ratio = lam / (1.0 - lam)
        k = math.ceil(math.log(self.tol) / math.log(ratio))
        return min(self.max_terms, max(1, k))


def _eval_shape(x):
    """Coerce x to a float array, remembering whether it was scalar."""
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def apply_mixing(params: MixtureParams, h, x):
    """Apply the mixing operator: ``lam*h(x-mu1) + (1-lam)*h(x-mu2)``.

    Parameters
    ----------
    params : MixtureParams
    h : callable
        Evaluatable on float arrays.
    x : float or ndarray

    Returns
    -------
    float or ndarray, matching the shape of ``x``.
    """
    arr, scalar = _eval_shape(x)
    out = params.lam * np.asarray(h(arr - params.mu1), dtype=float) + (
        1.0 - params.lam
    ) * np.asarray(h(arr - params.mu2), dtype=float)
    return float(out) if scalar else out


def apply_unmixing(params: MixtureParams, h, x, trunc: SeriesTruncation | None = None):
    """Apply the inverse mixing operator by truncated geometric series.

    Computes ``(1/(1-lam)) * sum_k (-lam/(1-lam))**k h(x + mu2 + k*eta)`` for
    ``k = 0..K-1`` with K chosen by ``trunc``.  The absolute truncation error
    is at most ``sup|h| * tol * (1 + 1/(1-2*lam))``.

    Requires ``lam < 1/2`` (enforced by MixtureParams).
    """
    if trunc is None:
        trunc = SeriesTruncation()
    arr, scalar = _eval_shape(x)
    lam = params.lam
    k = trunc.n_terms(lam)
    coef = (-lam / (1.0 - lam)) ** np.arange(k) / (1.0 - lam)
    # One h call on a (K, ...) block of shifted points, then contract over K.
    pts = arr[np.newaxis, ...] + (params.mu2 + np.arange(k) * params.eta).reshape(
        (k,) + (1,) * arr.ndim
    )
    vals = np.asarray(h(pts), dtype=float)
    out = np.tensordot(coef, vals, axes=(0, 0))
    return float(out) if scalar else out


def reflect_cdf(h, x):
    """Reflect a CDF about zero: ``1 - h(-x)``.

    Fixes CDFs that are symmetric about zero; an involution.
    """
    arr, scalar = _eval_shape(x)
    out = 1.0 - np.asarray(h(-arr), dtype=float)
    return float(out) if scalar else out


def reflect_density(h, x):
    """Reflect a density about zero: ``h(-x)``.

    Fixes even functions; an involution.
    """
    arr, scalar = _eval_shape(x)
    out = np.asarray(h(-arr), dtype=float)
    return float(out) if scalar else out


def symmetrized_mixture_cdf(
    params: MixtureParams, cdf, x, trunc: SeriesTruncation | None = None
):
    """Mixture CDF rebuilt after reflecting the implied component CDF.

    Unmixes ``cdf`` under ``params``, reflects the result about zero, and
    mixes it back:  the output equals ``cdf`` (up to truncation error) exactly
    when ``params`` are the true parameters of a mixture with a symmetric
    component.  This is the reference ("series oracle") evaluation that the
    closed forms in :mod:`symmix.contrast` must reproduce.
    """
    if trunc is None:
        trunc = SeriesTruncation()

    def reflected(y):
        return reflect_cdf(lambda z: apply_unmixing(params, cdf, z, trunc), y)

    return apply_mixing(params, reflected, x)
