"""Data containers shared across the library.

Model and state objects validate on construction and are immutable
afterwards; the arrays they hold are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, NotSPDError
from .matfun import as_spd, spd_inv, spd_sqrt


def _frozen(a: ArrayLike, ndim: int, name: str) -> NDArray:
    a = np.array(a, dtype=float)
    if ndim == 2 and a.ndim == 0:
        a = a.reshape(1, 1)
    if ndim == 1 and a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != ndim:
        raise DimensionError(f"{name} must have {ndim} dimensions, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """A point ``N(mean, cov)`` on the Gaussian manifold; also the filter state."""

    mean: NDArray
    cov: NDArray

    def __post_init__(self):
        mean = _frozen(self.mean, 1, "mean")
        cov = np.array(as_spd(self.cov, "cov"))
        if cov.shape != (mean.size, mean.size):
            raise DimensionError(f"cov shape {cov.shape} does not match mean of length {mean.size}")
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class LinearGaussianModel:
    """Linear Gaussian process/measurement pair

        dx = A x dt + sqrt(2) B dw,     dz = C x dt + dv,

    with ``w`` a standard Wiener process and ``E[dv dv^T] = R dt``.
    """

    A: NDArray
    B: NDArray
    C: NDArray
    R: NDArray

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        B = _frozen(self.B, 2, "B")
        C = _frozen(self.C, 2, "C")
        try:
            R = np.array(as_spd(self.R, "R"))
        except NotSPDError as exc:
            raise NotSPDError(f"measurement noise intensity: {exc}") from exc
        R.setflags(write=False)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise DimensionError(f"C must have {n} columns, got {C.shape}")
        if R.shape != (C.shape[0], C.shape[0]):
            raise DimensionError(f"R must be {C.shape[0]}x{C.shape[0]}, got {R.shape}")
        for name, val in zip("ABCR", (A, B, C, R)):
            object.__setattr__(self, name, val)
        R_inv = spd_inv(R)
        S = C.T @ R_inv @ C
        derived = {
            "R_inv": R_inv,
            "R_sqrt": spd_sqrt(R),
            "S": 0.5 * (S + S.T),
            "BBt2": 2.0 * B @ B.T,
        }
        for k, v in derived.items():
            v.setflags(write=False)
            object.__setattr__(self, k, v)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class Trajectory:
    """Samples of a simulated state path and its measurement increments.

    ``increments[k]`` is the measurement increment over ``[times[k], times[k+1]]``,
    so there is one fewer increment than state sample.
    """

    h: float
    seed: int
    times: NDArray
    states: NDArray
    increments: NDArray
    stream: int = 0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if self.states.ndim != 2 or self.increments.ndim != 2:
            raise DimensionError("states and increments must be 2-D (time, dim)")
        if self.states.shape[0] != self.increments.shape[0] + 1:
            raise DimensionError("need exactly one more state sample than increments")
        if self.times.shape != (self.states.shape[0],):
            raise DimensionError("times must match the number of state samples")
        if self.times.size > 1 and not np.allclose(np.diff(self.times), self.h, rtol=1e-9, atol=0):
            raise ValueError("times must be uniformly spaced by h")

    @property
    def steps(self) -> int:
        return self.increments.shape[0]


@dataclass(frozen=True)
class FilterRun:
    """Posterior means/covariances at ``times`` produced by ``method``."""

    times: NDArray
    means: NDArray
    covs: NDArray
    model: LinearGaussianModel = field(repr=False)
    method: str

    def __post_init__(self):
        if self.means.shape[0] != self.times.size or self.covs.shape[0] != self.times.size:
            raise DimensionError("means and covariances must align with times")
        if np.linalg.eigvalsh(self.covs).min() <= 0:
            raise NotSPDError(f"{self.method}: a posterior covariance is not positive definite")

    @property
    def terminal(self) -> GaussianState:
        return GaussianState(self.means[-1], self.covs[-1])
