"""Fisher-Rao geometry on densities.

Two views are supported:

* nonparametric: densities sampled on a uniform 1-D or 2-D grid
  (:class:`GridDensity`).  The square-root map sends them to the unit
  sphere of L2, where geodesics are great circles;
* parametric: the Fisher information matrix of a family ``rho(x | theta)``
  computed by quadrature, and the Gaussian manifold with its closed-form
  special cases, geodesic equations and the gradient of the squared
  covariance distance.

Grid quadrature is the midpoint rule: grid points are cell centres and
every cell carries the same weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceError, DimensionError, GridMismatchError, NotSPDError
from .matfun import (
    as_spd,
    as_sym,
    loginv_integral,
    spd_inv,
    spd_inv_sqrt,
    spd_log,
    spd_pow,
    spd_sqrt,
    symmetrize,
)
from .models import GaussianState

__all__ = [
    "GaussGeodesicPath",
    "GridDensity",
    "ParametricFamily",
    "cov_distance_eig",
    "fisher_info_hessian",
    "fisher_info_matrix",
    "fr_distance_gauss_cov",
    "fr_distance_gauss_mean",
    "fr_distance_grid",
    "fr_geodesic_grid",
    "gauss_bhattacharyya_angle",
    "gauss_cov_geodesic",
    "gauss_geodesic_shoot",
    "gauss_metric_ds2",
    "gaussian_family_1d",
    "gaussian_to_grid",
    "grad_fr2_cov",
    "location_family",
    "mixture_to_grid",
]


# ---------------------------------------------------------------------------
# Nonparametric densities on grids
# ---------------------------------------------------------------------------


def _as_tuple(v, ndim: int | None = None, cast=float) -> tuple:
    if np.ndim(v) == 0:
        v = [v] * (ndim or 1)
    return tuple(cast(x) for x in v)


@dataclass(frozen=True)
class GridDensity:
    """A probability density sampled at the cell centres of a uniform grid.

    ``values`` has one axis per spatial dimension (1 or 2).  Values are
    rescaled on construction so that ``values.sum() * cell == 1``.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    values: NDArray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2):
            raise DimensionError("only 1-D and 2-D grids are supported")
        lower = _as_tuple(self.lower, values.ndim)
        upper = _as_tuple(self.upper, values.ndim)
        if len(lower) != values.ndim or len(upper) != values.ndim:
            raise DimensionError("bounds must have one entry per grid axis")
        if any(hi <= lo for lo, hi in zip(lower, upper)):
            raise ValueError("upper bounds must exceed lower bounds")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        cell = float(np.prod([(hi - lo) / n for lo, hi, n in zip(lower, upper, values.shape)]))
        mass = values.sum() * cell
        if mass <= 0:
            raise ValueError("density has zero mass on the grid")
        values = values / mass
        values.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, f: Callable[..., NDArray], lower, upper, points) -> "GridDensity":
        """Sample ``f`` (vectorised over coordinate arrays) at the cell centres."""
        ndim = 1 if np.ndim(points) == 0 else len(points)
        lower, upper = _as_tuple(lower, ndim), _as_tuple(upper, ndim)
        points = _as_tuple(points, ndim, int)
        axes = [_centres(lo, hi, n) for lo, hi, n in zip(lower, upper, points)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(lower, upper, f(*mesh))

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def points(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for lo, hi, n in zip(self.lower, self.upper, self.points))

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[NDArray]:
        return [_centres(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.points)]

    def mesh(self) -> list[NDArray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def same_grid(self, other: "GridDensity") -> bool:
        return (
            self.points == other.points
            and np.allclose(self.lower, other.lower, rtol=1e-12, atol=1e-14)
            and np.allclose(self.upper, other.upper, rtol=1e-12, atol=1e-14)
        )

    def mean(self) -> NDArray:
        return np.array([np.sum(x * self.values) * self.cell for x in self.mesh()])

    def covariance(self) -> NDArray:
        mu = self.mean()
        d = [x - m for x, m in zip(self.mesh(), mu)]
        return np.array([[np.sum(a * b * self.values) * self.cell for b in d] for a in d])


def _centres(lo: float, hi: float, n: int) -> NDArray:
    if n < 1:
        raise ValueError("a grid axis needs at least one point")
    dx = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * dx


def _check_same_grid(rho1: GridDensity, rho2: GridDensity) -> None:
    if not rho1.same_grid(rho2):
        raise GridMismatchError(
            f"grids differ: {rho1.lower}..{rho1.upper} x {rho1.points} vs "
            f"{rho2.lower}..{rho2.upper} x {rho2.points}"
        )


def _affinity(rho1: GridDensity, rho2: GridDensity) -> float:
    _check_same_grid(rho1, rho2)
    bc = float(np.sum(np.sqrt(rho1.values * rho2.values)) * rho1.cell)
    # round-off can push the inner product of two unit vectors past 1
    return min(1.0, max(-1.0, bc))


def fr_distance_grid(rho1: GridDensity, rho2: GridDensity) -> float:
    """Great-circle distance ``arccos <sqrt rho1, sqrt rho2>`` between gridded densities."""
    return float(np.arccos(_affinity(rho1, rho2)))


def fr_geodesic_grid(rho1: GridDensity, rho2: GridDensity, t: float) -> GridDensity:
    """Point at parameter ``t`` on the minimal Fisher-Rao geodesic from ``rho1`` to ``rho2``.

    The chord ``(1-t) sqrt(rho1) + t sqrt(rho2)`` is projected back onto the
    unit sphere and squared.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    bc = _affinity(rho1, rho2)
    if t == 0.0:
        return rho1
    if t == 1.0:
        return rho2
    chord = (1.0 - t) * np.sqrt(rho1.values) + t * np.sqrt(rho2.values)
    norm2 = (1.0 - t) ** 2 + t**2 + 2.0 * t * (1.0 - t) * bc
    return GridDensity(rho1.lower, rho1.upper, chord**2 / norm2)


def _gauss_tail_mass(mean: NDArray, cov: NDArray, lower, upper) -> float:
    # union bound over the axis-wise marginal tails
    out = 0.0
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        s = math.sqrt(cov[i, i])
        out += 0.5 * math.erfc((mean[i] - lo) / (s * math.sqrt(2.0)))
        out += 0.5 * math.erfc((hi - mean[i]) / (s * math.sqrt(2.0)))
    return out


def gaussian_to_grid(g: GaussianState, lower, upper, points, mass_tol: float = 1e-6) -> GridDensity:
    """Discretise ``N(g.mean, g.cov)`` on a 1-D or 2-D grid.

    Raises
    ------
    ValueError
        If more than ``mass_tol`` of the Gaussian mass lies outside the box,
        or the grid is too coarse to integrate the density to within
        ``mass_tol``.
    """
    n = g.dim
    if n not in (1, 2):
        raise DimensionError("grids are 1-D or 2-D")
    lower, upper = _as_tuple(lower, n), _as_tuple(upper, n)
    points = _as_tuple(points, n, int)
    if len(lower) != n or len(upper) != n or len(points) != n:
        raise DimensionError("grid specification does not match the state dimension")
    tail = _gauss_tail_mass(g.mean, g.cov, lower, upper)
    if tail > mass_tol:
        raise ValueError(f"grid too narrow: {tail:.2e} of the Gaussian mass lies outside it")
    axes = [_centres(lo, hi, k) for lo, hi, k in zip(lower, upper, points)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    d = mesh - g.mean
    Pinv = spd_inv(g.cov)
    quad = np.einsum("...i,ij,...j->...", d, Pinv, d)
    dens = np.exp(-0.5 * quad) / math.sqrt((2 * math.pi) ** n * np.linalg.det(g.cov))
    cell = float(np.prod([(hi - lo) / k for lo, hi, k in zip(lower, upper, points)]))
    raw_mass = dens.sum() * cell
    if abs(raw_mass - 1.0) > mass_tol + tail:
        raise ValueError(
            f"grid too coarse: quadrature of the density gives mass {raw_mass:.6f} "
            f"with {points} points"
        )
    return GridDensity(lower, upper, dens)


def mixture_to_grid(
    weights: Sequence[float],
    means: Sequence[float],
    variances: Sequence[float],
    lower: float,
    upper: float,
    points: int,
) -> GridDensity:
    """A 1-D Gaussian mixture sampled on a grid."""
    x = _centres(float(lower), float(upper), int(points))
    dens = np.zeros_like(x)
    for w, m, v in zip(weights, means, variances):
        dens += w * np.exp(-0.5 * (x - m) ** 2 / v) / math.sqrt(2 * math.pi * v)
    return GridDensity((lower,), (upper,), dens)


# ---------------------------------------------------------------------------
# Parametric families and the Fisher information matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParametricFamily:
    """A parametric family of 1-D densities ``rho(x | theta)`` with a quadrature grid.

    ``log_density(x, theta)`` must be vectorised over the grid array ``x``.
    """

    dim: int
    log_density: Callable[[NDArray, NDArray], NDArray]
    lower: float
    upper: float
    points: int

    def grid(self) -> NDArray:
        return _centres(self.lower, self.upper, self.points)

    @property
    def cell(self) -> float:
        return (self.upper - self.lower) / self.points

    def density(self, x: ArrayLike, theta: ArrayLike) -> NDArray:
        return np.exp(self.log_density(np.asarray(x, dtype=float), np.asarray(theta, dtype=float)))

    def total_mass(self, theta: ArrayLike) -> float:
        return float(self.density(self.grid(), theta).sum() * self.cell)


def gaussian_family_1d(lower: float = -12.0, upper: float = 12.0, points: int = 4000) -> ParametricFamily:
    """``N(mu, sigma^2)`` parameterised by ``theta = (mu, sigma)``."""

    def logpdf(x, theta):
        mu, sigma = theta
        return -0.5 * ((x - mu) / sigma) ** 2 - np.log(sigma) - 0.5 * np.log(2 * np.pi)

    return ParametricFamily(2, logpdf, lower, upper, points)


def location_family(
    base_logpdf: Callable[[NDArray], NDArray],
    lower: float = -12.0,
    upper: float = 12.0,
    points: int = 4000,
) -> ParametricFamily:
    """Location family ``rho(x - theta)`` generated by a base log-density."""
    return ParametricFamily(1, lambda x, theta: base_logpdf(x - theta[0]), lower, upper, points)


def _nonfinite_region(x: NDArray, bad: NDArray) -> str:
    xs = x[bad]
    return f"x in [{xs.min():.4g}, {xs.max():.4g}] ({bad.sum()} of {x.size} grid points)"


def _scores(family: ParametricFamily, theta: NDArray, fd_step: float) -> tuple[NDArray, NDArray]:
    x = family.grid()
    logp = family.log_density(x, theta)
    scores = np.empty((family.dim, x.size))
    for i in range(family.dim):
        e = np.zeros_like(theta)
        e[i] = fd_step
        scores[i] = (family.log_density(x, theta + e) - family.log_density(x, theta - e)) / (2 * fd_step)
    bad = ~np.isfinite(logp) | ~np.all(np.isfinite(scores), axis=0)
    if bad.any():
        raise ValueError(f"non-finite log-density or score at {_nonfinite_region(x, bad)}")
    return np.exp(logp), scores


def fisher_info_matrix(family: ParametricFamily, theta: ArrayLike, fd_step: float = 1e-5) -> NDArray:
    """Fisher information ``E[d_i log rho * d_j log rho]`` by grid quadrature.

    Scores are central finite differences of the log-density in ``theta``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != family.dim:
        raise DimensionError(f"theta has {theta.size} entries, family expects {family.dim}")
    rho, s = _scores(family, theta, fd_step)
    g = (s * rho) @ s.T * family.cell
    return as_spd(symmetrize(g), "Fisher information")


def fisher_info_hessian(family: ParametricFamily, theta: ArrayLike, step: float = 1e-4) -> NDArray:
    """Fisher information in the negative expected Hessian form, as a cross-check.

    Second derivatives use central differences with ``step``; a larger step
    than the score difference keeps round-off in check.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != family.dim:
        raise DimensionError(f"theta has {theta.size} entries, family expects {family.dim}")
    x = family.grid()
    r = family.dim
    logp = family.log_density(x, theta)
    rho = np.exp(logp)

    def f(di, dj, i, j):
        t = theta.copy()
        t[i] += di
        t[j] += dj
        return family.log_density(x, t)

    g = np.empty((r, r))
    for i in range(r):
        for j in range(i, r):
            if i == j:
                e = np.zeros(r)
                e[i] = step
                d2 = (family.log_density(x, theta + e) - 2 * logp + family.log_density(x, theta - e)) / step**2
            else:
                d2 = (f(step, step, i, j) - f(step, -step, i, j) - f(-step, step, i, j) + f(-step, -step, i, j)) / (
                    4 * step**2
                )
            bad = ~np.isfinite(d2)
            if bad.any():
                raise ValueError(f"non-finite Hessian of the log-density at {_nonfinite_region(x, bad)}")
            g[i, j] = g[j, i] = -np.sum(d2 * rho) * family.cell
    return g


# ---------------------------------------------------------------------------
# Gaussian manifold
# ---------------------------------------------------------------------------


def fr_distance_gauss_mean(mu1: ArrayLike, mu2: ArrayLike, P: ArrayLike) -> float:
    """Mahalanobis distance ``sqrt((mu1-mu2)^T P^-1 (mu1-mu2))`` between
    Gaussians sharing the covariance ``P``.

    This is the closed form for a shared covariance; whether it equals the
    length of the geodesic of the full Gaussian manifold is not asserted.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    P = as_spd(P, "P")
    if mu1.shape != mu2.shape or P.shape != (mu1.size, mu1.size):
        raise DimensionError(f"incompatible shapes {mu1.shape}, {mu2.shape}, {P.shape}")
    d = mu1 - mu2
    return float(np.sqrt(max(0.0, d @ np.linalg.solve(P, d))))


def _check_pair(P1, P2) -> tuple[NDArray, NDArray]:
    P1 = as_spd(P1, "P1")
    P2 = as_spd(P2, "P2")
    if P1.shape != P2.shape:
        raise DimensionError(f"covariances differ in shape: {P1.shape} vs {P2.shape}")
    return P1, P2


def fr_distance_gauss_cov(P1: ArrayLike, P2: ArrayLike) -> float:
    """Fisher-Rao distance between ``N(mu, P1)`` and ``N(mu, P2)``:
    ``|| log(P1^-1/2 P2 P1^-1/2) ||_F / sqrt(2)``.

    :func:`cov_distance_eig` evaluates the same quantity from the
    eigenvalues of ``P1^-1 P2``.
    """
    P1, P2 = _check_pair(P1, P2)
    W = spd_inv_sqrt(P1)
    return float(np.linalg.norm(spd_log(symmetrize(W @ P2 @ W))) / math.sqrt(2.0))


def cov_distance_eig(P1: ArrayLike, P2: ArrayLike) -> float:
    """``sqrt(0.5 * sum(log(lambda_i)^2))`` over the eigenvalues of ``P1^-1 P2``."""
    P1, P2 = _check_pair(P1, P2)
    lam = scipy.linalg.eigh(P2, P1, eigvals_only=True)
    return float(math.sqrt(0.5 * np.sum(np.log(lam) ** 2)))


def gauss_bhattacharyya_angle(a: GaussianState, b: GaussianState) -> float:
    """Closed form of ``arccos`` of the Bhattacharyya affinity of two Gaussians,
    i.e. what :func:`fr_distance_grid` approximates for gridded Gaussians."""
    Pm = 0.5 * (a.cov + b.cov)
    d = a.mean - b.mean
    _, ld1 = np.linalg.slogdet(a.cov)
    _, ld2 = np.linalg.slogdet(b.cov)
    _, ldm = np.linalg.slogdet(Pm)
    log_bc = 0.25 * (ld1 + ld2) - 0.5 * ldm - 0.125 * d @ np.linalg.solve(Pm, d)
    return float(np.arccos(min(1.0, math.exp(log_bc))))


def gauss_metric_ds2(P: ArrayLike, dmu: ArrayLike, dP: ArrayLike) -> float:
    """Squared Fisher-Rao line element ``dmu^T P^-1 dmu + 0.5 tr((P^-1 dP)^2)``.

    The covariance part uses ``P^-1 dP``; this is the form whose geodesic
    distance reproduces the eigenvalue formula of :func:`fr_distance_gauss_cov`.
    """
    P = as_spd(P, "P")
    dmu = np.atleast_1d(np.asarray(dmu, dtype=float))
    dP = as_sym(dP, "dP")
    n = P.shape[0]
    if dmu.shape != (n,) or dP.shape != (n, n):
        raise DimensionError(f"tangent vector shapes {dmu.shape}, {dP.shape} do not match P {P.shape}")
    G = np.linalg.solve(P, dP)
    return float(dmu @ np.linalg.solve(P, dmu) + 0.5 * np.trace(G @ G))


def gauss_cov_geodesic(P1: ArrayLike, P2: ArrayLike, t: float) -> NDArray:
    """Closed-form covariance geodesic ``P1^1/2 (P1^-1/2 P2 P1^-1/2)^t P1^1/2``."""
    P1, P2 = _check_pair(P1, P2)
    R = spd_sqrt(P1)
    W = spd_inv_sqrt(P1)
    return symmetrize(R @ spd_pow(symmetrize(W @ P2 @ W), t) @ R)


def grad_fr2_cov(P: ArrayLike, P0: ArrayLike) -> NDArray:
    """Gradient of ``P -> fr_distance_gauss_cov(P, P0)**2`` on the SPD cone.

    With ``H = P0^-1/2 P P0^-1/2`` the gradient is
    ``P0^-1/2 H^-1 log(H) P0^-1/2``, which equals ``P^-1 log(P P0^-1)``.
    """
    P, P0 = _check_pair(P, P0)
    W = spd_inv_sqrt(P0)
    H = symmetrize(W @ P @ W)
    return symmetrize(W @ loginv_integral(H) @ W)


@dataclass(frozen=True)
class GaussGeodesicPath:
    """Numerically computed geodesic on the Gaussian manifold.

    ``length`` integrates the line element along the path and is the
    Fisher-Rao distance between the endpoints as found by the solver; no
    closed form exists when both mean and covariance differ.
    """

    times: NDArray
    means: NDArray
    covs: NDArray
    mean_velocities: NDArray = field(repr=False)
    cov_velocities: NDArray = field(repr=False)
    length: float
    mismatch: float
    iterations: int

    @property
    def samples(self) -> int:
        return self.times.size


class _LeftCone(Exception):
    pass


def _geodesic_rhs(mu, P, dmu, dP):
    Pinv_dmu = np.linalg.solve(P, dmu)
    Pinv_dP = np.linalg.solve(P, dP)
    ddmu = dP @ Pinv_dmu
    ddP = dP @ Pinv_dP - np.outer(dmu, dmu)
    return dmu, dP, ddmu, symmetrize(ddP)


def _integrate_geodesic(mu0, P0, v0, V0, steps, keep=False):
    dt = 1.0 / steps
    y = (mu0.copy(), P0.copy(), v0.copy(), V0.copy())
    traj = [y] if keep else None

    def add(y, k, c):
        return tuple(a + c * b for a, b in zip(y, k))

    for _ in range(steps):
        k1 = _geodesic_rhs(*y)
        k2 = _geodesic_rhs(*add(y, k1, dt / 2))
        k3 = _geodesic_rhs(*add(y, k2, dt / 2))
        k4 = _geodesic_rhs(*add(y, k3, dt))
        y = tuple(a + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
        y = (y[0], symmetrize(y[1]), y[2], symmetrize(y[3]))
        if not np.all(np.isfinite(y[1])):
            raise _LeftCone
        try:
            np.linalg.cholesky(y[1])
        except np.linalg.LinAlgError:
            raise _LeftCone from None
        if keep:
            traj.append(y)
    return traj if keep else y


def _unpack(x, n):
    v = x[:n]
    V = np.zeros((n, n))
    iu = np.triu_indices(n)
    V[iu] = x[n:]
    V = V + np.triu(V, 1).T
    return v, V


def _pack_mismatch(mu, P, b: GaussianState):
    n = mu.size
    iu = np.triu_indices(n)
    D = P - b.cov
    # off-diagonal entries weighted so the Euclidean norm matches Frobenius
    w = np.where(iu[0] == iu[1], 1.0, math.sqrt(2.0))
    return np.concatenate([mu - b.mean, w * D[iu]])


def _mismatch_norm(mu, P, b: GaussianState) -> float:
    return float(np.linalg.norm(mu - b.mean) + np.linalg.norm(P - b.cov))


def gauss_geodesic_shoot(
    a: GaussianState,
    b: GaussianState,
    steps: int = 64,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> GaussGeodesicPath:
    """Solve the Gaussian geodesic boundary value problem by shooting.

    The geodesic equations

        mu'' = P' P^-1 mu',        P'' = P' P^-1 P' - mu' mu'^T

    are integrated over ``t in [0, 1]`` with fixed-step RK4.  The initial
    velocity is found by Newton iteration on the terminal mismatch with a
    finite-difference Jacobian; a step is halved while it leaves the SPD
    cone or fails to reduce the mismatch.  The initial guess is the
    mean difference together with the affine-invariant logarithm map of
    ``b.cov`` at ``a.cov``, which is exact when the means agree.

    Raises
    ------
    ConvergenceError
        If the mismatch (Euclidean mean norm + Frobenius covariance norm)
        is still above ``tol`` after ``max_iter`` Newton iterations.
    """
    if steps < 8:
        raise ValueError("steps must be at least 8")
    if a.dim != b.dim:
        raise DimensionError("endpoint dimensions differ")
    n = a.dim
    mu0 = np.array(a.mean)
    P0 = np.array(a.cov)
    R = spd_sqrt(P0)
    W = spd_inv_sqrt(P0)
    V0 = symmetrize(R @ spd_log(symmetrize(W @ b.cov @ W)) @ R)
    x = np.concatenate([b.mean - a.mean, V0[np.triu_indices(n)]])

    def shoot(x):
        v, V = _unpack(x, n)
        mu, P, _, _ = _integrate_geodesic(mu0, P0, v, V, steps)
        return mu, P

    mu, P = shoot(x)
    F = _pack_mismatch(mu, P, b)
    err = _mismatch_norm(mu, P, b)
    it = 0
    while err > tol:
        if it >= max_iter:
            raise ConvergenceError(f"geodesic shooting did not converge; final mismatch {err:.3e}", err)
        it += 1
        J = np.empty((F.size, x.size))
        for j in range(x.size):
            eps = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += eps
            xm = x.copy()
            xm[j] -= eps
            try:
                Fp = _pack_mismatch(*shoot(xp), b)
                Fm = _pack_mismatch(*shoot(xm), b)
            except _LeftCone:
                raise ConvergenceError(
                    f"geodesic shooting left the SPD cone while differencing; mismatch {err:.3e}", err
                ) from None
            J[:, j] = (Fp - Fm) / (2 * eps)
        dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        alpha = 1.0
        while True:
            try:
                mu_n, P_n = shoot(x + alpha * dx)
                err_n = _mismatch_norm(mu_n, P_n, b)
                if err_n < err or alpha < 1e-3:
                    break
            except _LeftCone:
                pass
            alpha *= 0.5
            if alpha < 1e-6:
                raise ConvergenceError(f"geodesic shooting stalled; mismatch {err:.3e}", err)
        x = x + alpha * dx
        mu, P, err = mu_n, P_n, err_n
        F = _pack_mismatch(mu, P, b)

    v, V = _unpack(x, n)
    traj = _integrate_geodesic(mu0, P0, v, V, steps, keep=True)
    means = np.array([y[0] for y in traj])
    covs = np.array([y[1] for y in traj])
    dmeans = np.array([y[2] for y in traj])
    dcovs = np.array([y[3] for y in traj])
    speed = np.sqrt([max(0.0, gauss_metric_ds2(Pk, vk, Vk)) for Pk, vk, Vk in zip(covs, dmeans, dcovs)])
    times = np.linspace(0.0, 1.0, steps + 1)
    length = float(trapezoid(speed, times))
    for Pk in covs:
        if np.linalg.eigvalsh(Pk)[0] <= 0:  # pragma: no cover - guarded during integration
            raise NotSPDError("geodesic left the SPD cone")
    return GaussGeodesicPath(times, means, covs, dmeans, dcovs, length, err, it)
