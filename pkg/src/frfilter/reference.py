"""Ground truth for the convergence studies.

* :func:`simulate_sde` draws a state path and measurement increments of the
  linear Gaussian model by Euler-Maruyama;
* :func:`kalman_bucy_run` integrates the Kalman-Bucy mean SDE and
  covariance Riccati ODE with Euler steps at the trajectory's own step;
* :func:`kalman_bucy_oracle` sub-steps a coarse trajectory to a fine step
  first, so that filters run at different ``h`` are compared against the
  continuous filter on the same measurement record;
* :func:`riccati_stationary` integrates the Riccati ODE to its fixed point.

Random numbers come from Philox, a counter-based generator, keyed by
``(seed, stream)``.  Trajectories therefore do not depend on the order in
which a Monte-Carlo driver schedules them.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceError, DimensionError, NotSPDError
from .matfun import as_spd, spd_inv_sqrt, symmetrize
from .models import FilterRun, LinearGaussianModel, Trajectory

SplitMode = Literal["linear", "bridge"]

_PROCESS, _MEASUREMENT, _BRIDGE = 0, 1, 2

__all__ = [
    "H_REF",
    "kalman_bucy_oracle",
    "kalman_bucy_run",
    "make_rng",
    "refine_trajectory",
    "riccati_residual",
    "riccati_stationary",
    "simulate_sde",
]

H_REF = 1e-4


def make_rng(seed: int, stream: int, purpose: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, stream, purpose)``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))


def _int_ratio(a: float, b: float, what: str) -> int:
    r = a / b
    k = int(round(r))
    if k < 1 or abs(r - k) > 1e-9 * max(1.0, r):
        raise ValueError(f"{what}: {a!r} is not a positive integer multiple of {b!r}")
    return k


def simulate_sde(
    model: LinearGaussianModel,
    x0: ArrayLike,
    h: float,
    T: float,
    seed: int,
    *,
    noise_step: float | None = None,
    stream: int = 0,
) -> Trajectory:
    """Euler-Maruyama sample of ``dx = Ax dt + sqrt(2) B dw``, ``dz = Cx dt + dv``.

    ``x[k+1] = x[k] + h A x[k] + sqrt(2h) B xi[k]`` and
    ``dz[k] = h C x[k] + sqrt(h) R^1/2 eta[k]`` with standard normal
    ``xi``, ``eta``.

    The Wiener increments are drawn at resolution ``noise_step`` (default
    ``h``) and summed up to ``h``.  Trajectories simulated with the same
    seed and ``noise_step`` at different ``h`` are therefore driven by the
    same Brownian paths, which is what pathwise convergence studies need.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    if T < h * (1 - 1e-12):
        raise ValueError("horizon T must be at least one step")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (model.n,):
        raise DimensionError(f"x0 must have length {model.n}")
    N = _int_ratio(T, h, "horizon")
    noise_step = h if noise_step is None else noise_step
    r = _int_ratio(h, noise_step, "step size")

    def increments(purpose: int, dim: int) -> NDArray:
        z = make_rng(seed, stream, purpose).standard_normal((N * r, dim))
        return z.reshape(N, r, dim).sum(axis=1) / np.sqrt(r)

    xi = increments(_PROCESS, model.q)
    eta = increments(_MEASUREMENT, model.m)

    F = np.eye(model.n) + h * model.A
    G = np.sqrt(2.0 * h) * model.B
    states = np.empty((N + 1, model.n))
    states[0] = x0
    for k in range(N):
        states[k + 1] = F @ states[k] + G @ xi[k]
    dz = h * states[:-1] @ model.C.T + np.sqrt(h) * eta @ model.R_sqrt.T
    times = np.arange(N + 1) * h
    return Trajectory(h=h, seed=seed, times=times, states=states, increments=dz, stream=stream)


def refine_trajectory(
    traj: Trajectory,
    model: LinearGaussianModel,
    h_fine: float,
    split: SplitMode = "linear",
) -> Trajectory:
    """Split every coarse step of ``traj`` into ``h / h_fine`` sub-steps.

    The state is held at its value at the start of each coarse step (the
    coarse path's own Euler convention) and the measurement increments of
    the sub-steps add up exactly to the coarse increment.

    ``split="linear"`` spreads each coarse increment evenly over its
    sub-steps, so the fine record is the piecewise-linear interpolant of
    the sampled measurement path.  ``split="bridge"`` draws the noise part
    of the sub-increments from its Brownian-bridge conditional law given
    the coarse increment.
    """
    r = _int_ratio(traj.h, h_fine, "coarse step")
    N, m = traj.increments.shape
    if split == "linear":
        sub = np.repeat(traj.increments / r, r, axis=0)
    elif split == "bridge":
        drift = traj.h * traj.states[:-1] @ model.C.T
        W = spd_inv_sqrt(model.R)
        white = (traj.increments - drift) @ W.T
        xi = make_rng(traj.seed, traj.stream, _BRIDGE).standard_normal((N, r, m)) * np.sqrt(h_fine)
        parts = xi - xi.mean(axis=1, keepdims=True) + white[:, None, :] / r
        noise = parts.reshape(N * r, m) @ model.R_sqrt.T
        sub = np.repeat(drift / r, r, axis=0) + noise
    else:
        raise ValueError(f"unknown split mode {split!r}")
    states = np.vstack([np.repeat(traj.states[:-1], r, axis=0), traj.states[-1:]])
    times = np.arange(N * r + 1) * h_fine
    return Trajectory(h=h_fine, seed=traj.seed, times=times, states=states, increments=sub, stream=traj.stream)


def kalman_bucy_run(
    traj: Trajectory,
    model: LinearGaussianModel,
    mu0: ArrayLike,
    P0: ArrayLike,
    method: str = "kalman-bucy/euler",
) -> FilterRun:
    """Euler discretisation of the Kalman-Bucy filter at step ``traj.h``.

    ``mu <- mu + h A mu + K (dz - h C mu)`` and
    ``P <- P + h (A P + P A^T + 2 B B^T - K R K^T)`` with ``K = P C^T R^-1``.

    Raises
    ------
    NotSPDError
        If the covariance loses positive definiteness (``h`` too coarse).
    """
    h = traj.h
    mu = np.atleast_1d(np.asarray(mu0, dtype=float)).copy()
    P = as_spd(P0, "P0").copy()
    if mu.shape != (model.n,) or P.shape != (model.n, model.n):
        raise DimensionError("initial mean/covariance do not match the model")
    A, C, R, Rinv, Q2 = model.A, model.C, model.R, model.R_inv, model.BBt2
    CtRinv = C.T @ Rinv
    N = traj.steps
    means = np.empty((N + 1, model.n))
    covs = np.empty((N + 1, model.n, model.n))
    means[0], covs[0] = mu, P
    for k, dz in enumerate(traj.increments):
        K = P @ CtRinv
        mu = mu + h * A @ mu + K @ (dz - h * C @ mu)
        P = P + h * (A @ P + P @ A.T + Q2 - K @ R @ K.T)
        P = 0.5 * (P + P.T)
        means[k + 1], covs[k + 1] = mu, P
    if np.linalg.eigvalsh(covs).min() <= 0:
        raise NotSPDError(f"Kalman-Bucy covariance lost definiteness at h={h}; step too coarse")
    return FilterRun(traj.times, means, covs, model, method)


def kalman_bucy_oracle(
    traj: Trajectory,
    model: LinearGaussianModel,
    mu0: ArrayLike,
    P0: ArrayLike,
    h_ref: float = H_REF,
    split: SplitMode = "linear",
) -> FilterRun:
    """Kalman-Bucy filter at ``h_ref`` on the refined record of ``traj``,
    reported at the coarse times of ``traj``."""
    fine = refine_trajectory(traj, model, h_ref, split)
    run = kalman_bucy_run(fine, model, mu0, P0, method=f"kalman-bucy/oracle-{split}")
    r = fine.steps // traj.steps
    return FilterRun(traj.times, run.means[::r], run.covs[::r], model, run.method)


def riccati_residual(P: ArrayLike, model: LinearGaussianModel) -> NDArray:
    """``A P + P A^T + 2 B B^T - P C^T R^-1 C P``."""
    P = np.asarray(P, dtype=float)
    return symmetrize(model.A @ P + P @ model.A.T + model.BBt2 - P @ model.S @ P)


def _rk4(P: NDArray, dt: float, model: LinearGaussianModel) -> NDArray:
    k1 = riccati_residual(P, model)
    k2 = riccati_residual(P + 0.5 * dt * k1, model)
    k3 = riccati_residual(P + 0.5 * dt * k2, model)
    k4 = riccati_residual(P + dt * k3, model)
    return symmetrize(P + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def riccati_stationary(
    model: LinearGaussianModel,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    P_init: ArrayLike | None = None,
) -> NDArray:
    """Stationary point of the Kalman-Bucy covariance flow.

    Integrates ``P' = A P + P A^T + 2 B B^T - P S P`` with step-doubling
    adaptive RK4 until the Frobenius norm of the right-hand side is at most
    ``tol``.  The result is positive semidefinite; it is singular when some
    mode receives no process noise (``B = 0`` gives ``0``).

    Raises
    ------
    ConvergenceError
        If the residual is not reached within ``max_iter`` accepted or
        rejected steps, which signals a violated detectability or
        stabilisability assumption.
    """
    P = np.eye(model.n) if P_init is None else as_spd(P_init, "P_init").copy()
    scale = np.linalg.norm(model.A, 2) + np.linalg.norm(model.S, 2) + np.linalg.norm(model.BBt2, 2) + 1.0
    dt = 0.1 / scale
    for _ in range(max_iter):
        res = np.linalg.norm(riccati_residual(P, model))
        if res <= tol:
            return P
        if not np.all(np.isfinite(P)) or np.linalg.norm(P) > 1e12:
            break
        full = _rk4(P, dt, model)
        half = _rk4(_rk4(P, dt / 2, model), dt / 2, model)
        err = np.linalg.norm(full - half)
        if err <= 1e-10 * np.linalg.norm(half) + 1e-300:
            P = half
            dt *= 1.5 if err < 1e-12 * np.linalg.norm(half) else 1.0
        else:
            dt *= 0.5
    res = float(np.linalg.norm(riccati_residual(P, model)))
    raise ConvergenceError(f"Riccati flow did not reach stationarity (residual {res:.3e})", res)
