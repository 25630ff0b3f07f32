"""Fisher-Rao proximal measurement update and the propagation recursion.

One filter step maps the posterior at ``t_{k-1}`` to the posterior at
``t_k``:

1. propagate the mean and covariance by an Euler step of the mean and
   Lyapunov ODEs;
2. update the mean by minimising, over Gaussians with the prior
   covariance, half the squared Mahalanobis distance to the prior plus
   ``h`` times the expected quadratic surprise;
3. update the covariance by the same minimisation over Gaussians with the
   prior mean, using the squared covariance distance.  The stationarity
   condition ``P+ (P-)^-1 = exp(-h P+ S)``, ``S = C^T R^-1 C``, is solved
   either exactly (fixed-point iteration) or to first order in ``h``
   (``P+ = (I + h P- S)^-1 P-``).

The measurement enters only through the increment ``dz`` over the step;
the scaled measurement ``y = dz / h`` is formed internally.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceError, DimensionError, NotSPDError
from .frgeom import grad_fr2_cov
from .matfun import as_spd, is_spd, spd_exp, spd_inv_sqrt, spd_sqrt, symmetrize
from .models import FilterRun, GaussianState, LinearGaussianModel, Trajectory

CovMode = Literal["exact", "truncated"]

__all__ = [
    "exact_cov_residual",
    "filter_step",
    "phi_surprise",
    "propagate",
    "prox_cov_update_exact",
    "prox_cov_update_truncated",
    "prox_mean_update",
    "run_proximal_filter",
    "stationarity_residual_cov",
]


def _vector(v: ArrayLike, size: int, name: str) -> NDArray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (size,):
        raise DimensionError(f"{name} must have length {size}, got shape {v.shape}")
    return v


def _check_h(h: float) -> None:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")


def phi_surprise(y: ArrayLike, model: LinearGaussianModel, g: GaussianState) -> float:
    """Expected quadratic surprise ``0.5 E[(y - Cx)^T R^-1 (y - Cx)]`` under ``g``.

    Closed form: ``0.5 [(y - C mu)^T R^-1 (y - C mu) + tr(C^T R^-1 C P)]``.
    """
    y = _vector(y, model.m, "y")
    if g.dim != model.n:
        raise DimensionError(f"state has dimension {g.dim}, model expects {model.n}")
    r = y - model.C @ g.mean
    return float(0.5 * (r @ model.R_inv @ r + np.trace(model.S @ g.cov)))


def prox_mean_update(
    mu_prior: ArrayLike, P_prior: ArrayLike, y: ArrayLike, h: float, model: LinearGaussianModel
) -> NDArray:
    """Solve ``mu+ = mu- + h P- C^T R^-1 (y - C mu+)`` for ``mu+``.

    The implicit equation is linear: ``(I + h P- S) mu+ = mu- + h P- C^T R^-1 y``.
    """
    _check_h(h)
    mu_prior = _vector(mu_prior, model.n, "mu_prior")
    P_prior = as_spd(P_prior, "P_prior")
    y = _vector(y, model.m, "y")
    G = P_prior @ model.C.T @ model.R_inv
    M = np.eye(model.n) + h * P_prior @ model.S
    # M is similar to I + h P^1/2 S P^1/2, so it is never singular
    return np.linalg.solve(M, mu_prior + h * G @ y)


def prox_cov_update_truncated(P_prior: ArrayLike, h: float, model: LinearGaussianModel) -> NDArray:
    """First-order covariance update ``(I + h P- S)^-1 P-``.

    The result is congruent to ``(P-^-1 + h S)^-1`` and therefore SPD for
    every ``h > 0``; the check guards against round-off only.
    """
    _check_h(h)
    P_prior = as_spd(P_prior, "P_prior")
    P = symmetrize(np.linalg.solve(np.eye(model.n) + h * P_prior @ model.S, P_prior))
    if not is_spd(P):
        raise NotSPDError(f"truncated covariance update lost definiteness at h={h}")
    return P


def _exp_neg_hPS(P: NDArray, h: float, S: NDArray) -> NDArray:
    # exp(-h P S) = P^1/2 exp(-h P^1/2 S P^1/2) P^-1/2 keeps the work in symmetric kernels
    R = spd_sqrt(P)
    return R @ spd_exp(symmetrize(-h * R @ S @ R)) @ spd_inv_sqrt(P)


def exact_cov_residual(P_post: NDArray, P_prior: NDArray, h: float, model: LinearGaussianModel) -> float:
    """Frobenius norm of ``P+ (P-)^-1 - exp(-h P+ S)``."""
    return float(np.linalg.norm(P_post @ np.linalg.inv(P_prior) - _exp_neg_hPS(P_post, h, model.S)))


def prox_cov_update_exact(
    P_prior: ArrayLike,
    h: float,
    model: LinearGaussianModel,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> NDArray:
    """Solve ``P+ (P-)^-1 = exp(-h P+ S)`` by fixed-point iteration.

    Iterates ``P <- P + w (sym(exp(-h P S) P-) - P)`` from the truncated
    update.  The relaxation ``w`` starts at 1 and is halved whenever the
    fixed-point gap grows, which happens once ``h ||P S||`` exceeds about
    one.  A step that would leave the SPD cone is halved as well.

    Raises
    ------
    ConvergenceError
        If the gap ``||sym(exp(-h P S) P-) - P||_F`` is still above ``tol``
        after ``max_iter`` iterations, or the iteration keeps leaving the
        cone.
    """
    P_prior = as_spd(P_prior, "P_prior")
    P = prox_cov_update_truncated(P_prior, h, model)
    if not np.any(model.S):
        return P_prior.copy()
    step = np.inf
    omega = 1.0
    for _ in range(max_iter):
        target = symmetrize(_exp_neg_hPS(P, h, model.S) @ P_prior)
        gap = float(np.linalg.norm(target - P))
        if gap <= tol:
            return target if is_spd(target) else P
        # the plain map stops contracting once h ||P S|| is large; relax it
        if gap > step:
            omega = max(0.5 * omega, 1.0 / 64)
        step = gap
        alpha = omega
        while True:
            P_new = symmetrize(P + alpha * (target - P))
            if is_spd(P_new):
                break
            alpha *= 0.5
            if alpha < 1e-8:
                raise ConvergenceError("covariance fixed-point iteration keeps leaving the SPD cone")
        P = P_new
    residual = exact_cov_residual(P, P_prior, h, model)
    raise ConvergenceError(
        f"covariance fixed-point iteration did not converge in {max_iter} iterations "
        f"(last step {step:.3e}, residual {residual:.3e})",
        residual,
    )


def stationarity_residual_cov(P_post: ArrayLike, P_prior: ArrayLike, h: float, model: LinearGaussianModel) -> NDArray:
    """Left-hand side of ``0.5 P+^-1 log(P+ P-^-1) + (h/2) C^T R^-1 C = 0``.

    ``P+^-1 log(P+ P-^-1)`` is evaluated through the similarity
    ``P-^1/2 log(P-^-1/2 P+ P-^-1/2) P-^-1/2``.
    """
    return 0.5 * grad_fr2_cov(P_post, P_prior) + 0.5 * h * model.S


def propagate(g: GaussianState, h: float, model: LinearGaussianModel) -> GaussianState:
    """Euler step of the mean and Lyapunov ODEs:
    ``mu <- (I + hA) mu``, ``P <- P + h (A P + P A^T + 2 B B^T)``.
    """
    _check_h(h)
    if g.dim != model.n:
        raise DimensionError(f"state has dimension {g.dim}, model expects {model.n}")
    A = model.A
    mu = g.mean + h * A @ g.mean
    P = symmetrize(g.cov + h * (A @ g.cov + g.cov @ A.T + model.BBt2))
    try:
        return GaussianState(mu, P)
    except NotSPDError as exc:
        raise NotSPDError(f"propagated covariance lost definiteness at h={h}; step too large") from exc


def filter_step(
    g: GaussianState,
    dz: ArrayLike,
    h: float,
    model: LinearGaussianModel,
    mode: CovMode = "truncated",
    tol: float = 1e-12,
    max_iter: int = 200,
) -> GaussianState:
    """One propagate-then-update step driven by the measurement increment ``dz``."""
    dz = _vector(dz, model.m, "dz")
    prior = propagate(g, h, model)
    y = dz / h
    mu = prox_mean_update(prior.mean, prior.cov, y, h, model)
    if mode == "truncated":
        P = prox_cov_update_truncated(prior.cov, h, model)
    elif mode == "exact":
        P = prox_cov_update_exact(prior.cov, h, model, tol=tol, max_iter=max_iter)
    else:
        raise ValueError(f"unknown covariance mode {mode!r}")
    return GaussianState(mu, P)


def run_proximal_filter(
    traj: Trajectory,
    model: LinearGaussianModel,
    mu0: ArrayLike,
    P0: ArrayLike,
    mode: CovMode = "truncated",
) -> FilterRun:
    """Fold :func:`filter_step` over the increments of ``traj``."""
    g = GaussianState(mu0, P0)
    means = [g.mean]
    covs = [g.cov]
    for dz in traj.increments:
        g = filter_step(g, dz, traj.h, model, mode)
        means.append(g.mean)
        covs.append(g.cov)
    return FilterRun(traj.times, np.array(means), np.array(covs), model, f"fisher-rao-prox/{mode}")
