"""Data containers and nonparametric building blocks.

Empirical CDF, the triangular kernel pair (density and antiderivative),
kernel-smoothed CDF, kernel density estimate, and the bandwidth policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Sample",
    "KernelSpec",
    "TRIANGULAR_KERNEL",
    "Bandwidth",
    "ecdf",
    "triangular_kernel",
    "triangular_kernel_cdf",
    "smoothed_cdf",
    "kde",
    "default_bandwidth",
]


@dataclass(frozen=True)
class Sample:
    """An i.i.d. sample stored sorted ascending.

    Use :meth:`from_values` to build from unsorted data.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("sample must be a 1-D array with n >= 2")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        if np.any(np.diff(v) < 0):
            raise ValueError("sample values must be sorted ascending")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values) -> "Sample":
        v = np.sort(np.asarray(values, dtype=float))
        return cls(v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class KernelSpec:
    """Identification of the smoothing kernel (fixed: triangular)."""

    name: str = "triangular"
    support_halfwidth: float = 1.0


TRIANGULAR_KERNEL = KernelSpec()


@dataclass(frozen=True)
class Bandwidth:
    """A positive smoothing bandwidth and the rule that produced it."""

    value: float
    rule: str = "fixed"

    def __post_init__(self):
        if not (self.value > 0.0 and math.isfinite(self.value)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.value}")
        if self.rule not in ("fixed", "n_pow_neg_quarter"):
            raise ValueError(f"unknown bandwidth rule {self.rule!r}")


def default_bandwidth(n: int) -> Bandwidth:
    """Default bandwidth ``n**(-1/4)`` for a sample of size n."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return Bandwidth(float(n) ** -0.25, rule="n_pow_neg_quarter")


def ecdf(sample: Sample, x):
    """Empirical CDF: fraction of sample values <= x (right-continuous)."""
    arr = np.asarray(x, dtype=float)
    out = np.searchsorted(sample.values, arr, side="right") / sample.n
    return float(out) if arr.ndim == 0 else out


def triangular_kernel(x):
    """Triangular kernel ``(1 - |x|)`` on [-1, 1], else 0."""
    arr = np.asarray(x, dtype=float)
    out = np.maximum(0.0, 1.0 - np.abs(arr))
    return float(out) if arr.ndim == 0 else out


def triangular_kernel_cdf(x):
    """Antiderivative of the triangular kernel.

    Piecewise: 0 below -1, ``(x+1)**2/2`` on [-1, 0], ``1-(1-x)**2/2`` on
    [0, 1], and 1 above.  Satisfies ``Q(x) + Q(-x) = 1``.
    """
    arr = np.asarray(x, dtype=float)
    z = np.clip(arr, -1.0, 1.0)
    out = np.where(z <= 0.0, 0.5 * (z + 1.0) ** 2, 1.0 - 0.5 * (1.0 - z) ** 2)
    return float(out) if arr.ndim == 0 else out


def smoothed_cdf(sample: Sample, b: Bandwidth, x):
    """Kernel-smoothed CDF: ``(1/n) sum_k Q((x - X_k)/b)``."""
    arr = np.asarray(x, dtype=float)
    z = (arr[..., np.newaxis] - sample.values) / b.value
    out = triangular_kernel_cdf(z).mean(axis=-1)
    return float(out) if arr.ndim == 0 else out


def kde(sample: Sample, b: Bandwidth, x):
    """Kernel density estimate: ``(1/(n b)) sum_k q((x - X_k)/b)``."""
    arr = np.asarray(x, dtype=float)
    z = (arr[..., np.newaxis] - sample.values) / b.value
    out = triangular_kernel(z).mean(axis=-1) / b.value
    return float(out) if arr.ndim == 0 else out
