"""Matrix functions on the cone of symmetric positive definite matrices.

Everything on the SPD cone is evaluated spectrally: the input is
diagonalised with a symmetric eigensolver and the scalar function is
applied to the eigenvalues.  Dimensions in this library are small
(n <= 16), so the O(n^3) eigendecomposition is the cheap and exact route,
and it makes the divided-difference formulas for Frechet derivatives
available in closed form.

Conventions
-----------
* ``vec`` stacks columns (Fortran order), so that
  ``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.
* Every function whose result is mathematically symmetric returns an
  explicitly symmetrised array.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConvergenceError, DimensionError, NotSPDError

SYM_RTOL = 1e-12
SPD_RTOL = 1e-12

__all__ = [
    "SpectralDecomp",
    "as_spd",
    "as_sym",
    "expm_general",
    "frechet_log",
    "gauss_legendre_01",
    "is_spd",
    "jacobian_square",
    "kron",
    "kron_sum",
    "log_mean_residual",
    "loginv_integral",
    "logm_general",
    "spd_exp",
    "spd_inv",
    "spd_inv_sqrt",
    "spd_log",
    "spd_pow",
    "spd_sqrt",
    "sym_eig",
    "symmetrize",
    "unvec",
    "vec",
]


class SpectralDecomp(NamedTuple):
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order."""

    eigenvalues: NDArray
    eigenvectors: NDArray

    def reconstruct(self) -> NDArray:
        V = self.eigenvectors
        return symmetrize((V * self.eigenvalues) @ V.T)


def symmetrize(X: NDArray) -> NDArray:
    return 0.5 * (X + X.T)


def _square(X: ArrayLike, name: str) -> NDArray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {X.shape}")
    return X


def as_sym(X: ArrayLike, name: str = "X", rtol: float = SYM_RTOL) -> NDArray:
    """Validate and symmetrise a matrix that should be symmetric.

    Scalars are promoted to 1x1 matrices.
    """
    X = _square(X, name)
    scale = np.linalg.norm(X)
    if np.linalg.norm(X - X.T) > rtol * max(scale, np.finfo(float).tiny):
        raise NotSPDError(f"{name} is not symmetric (relative tolerance {rtol:g})")
    return symmetrize(X)


def as_spd(X: ArrayLike, name: str = "X", rtol: float = SPD_RTOL) -> NDArray:
    """Validate that ``X`` is symmetric positive definite and return it symmetrised.

    The smallest eigenvalue must exceed ``rtol`` times the largest one.

    Raises
    ------
    NotSPDError
        If the matrix is asymmetric, has non-finite entries or is not
        (numerically) positive definite.
    """
    X = as_sym(X, name)
    if not np.all(np.isfinite(X)):
        raise NotSPDError(f"{name} has non-finite entries")
    lam = np.linalg.eigvalsh(X)
    if lam[-1] <= 0 or lam[0] <= rtol * lam[-1]:
        raise NotSPDError(
            f"{name} is not positive definite (eigenvalue range [{lam[0]:.3e}, {lam[-1]:.3e}])"
        )
    return X


def is_spd(X: ArrayLike, rtol: float = SPD_RTOL) -> bool:
    try:
        as_spd(X, rtol=rtol)
    except NotSPDError:
        return False
    return True


def sym_eig(X: ArrayLike) -> SpectralDecomp:
    """Spectral decomposition of an SPD matrix, eigenvalues descending."""
    X = as_spd(X)
    try:
        lam, V = np.linalg.eigh(X)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(
            f"symmetric eigensolver did not converge (condition estimate {np.linalg.cond(X):.3e})"
        ) from exc
    # stable ordering keeps eigh's basis for ties, so diagonal inputs give V = I
    order = np.argsort(-lam, kind="stable")
    return SpectralDecomp(lam[order], V[:, order])


def _spectral_map(X: NDArray, f) -> NDArray:
    lam, V = sym_eig(X)
    return symmetrize((V * f(lam)) @ V.T)


def spd_log(X: ArrayLike) -> NDArray:
    """Principal logarithm of an SPD matrix."""
    return _spectral_map(X, np.log)


def spd_sqrt(X: ArrayLike) -> NDArray:
    """The unique SPD square root."""
    return _spectral_map(X, np.sqrt)


def spd_inv_sqrt(X: ArrayLike) -> NDArray:
    return _spectral_map(X, lambda lam: 1.0 / np.sqrt(lam))


def spd_inv(X: ArrayLike) -> NDArray:
    return _spectral_map(X, np.reciprocal)


def spd_pow(X: ArrayLike, t: float) -> NDArray:
    """Real power ``X**t`` of an SPD matrix."""
    return _spectral_map(X, lambda lam: lam**t)


def expm_general(A: ArrayLike) -> NDArray:
    """Exponential of an arbitrary square matrix by scaling and squaring.

    The scaled matrix has 1-norm at most 1/2, where a degree-18 Taylor
    polynomial is accurate to well below double precision.
    """
    A = _square(A, "A")
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    if not np.isfinite(norm):
        raise FloatingPointError("matrix exponential of a non-finite matrix")
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    As = A / 2.0**s
    term = np.eye(n)
    E = np.eye(n)
    for k in range(1, 19):
        term = term @ As / k
        E = E + term
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise FloatingPointError(f"matrix exponential overflowed (1-norm of argument {norm:.3e})")
    return E


def spd_exp(S: ArrayLike) -> NDArray:
    """Matrix exponential.

    Symmetric input takes the spectral route and returns an SPD matrix;
    any other square input falls back to :func:`expm_general`.
    """
    S = _square(S, "S")
    if np.linalg.norm(S - S.T) <= SYM_RTOL * max(np.linalg.norm(S), np.finfo(float).tiny):
        S = symmetrize(S)
        lam, V = np.linalg.eigh(S)
        with np.errstate(over="raise"):
            try:
                e = np.exp(lam)
            except FloatingPointError as exc:
                raise FloatingPointError(
                    f"matrix exponential overflowed (largest eigenvalue {lam[-1]:.3e})"
                ) from exc
        return symmetrize((V * e) @ V.T)
    return expm_general(S)


def logm_general(A: ArrayLike, cond_max: float = 1e8) -> NDArray:
    """Principal logarithm of a real diagonalizable matrix with no eigenvalue on
    the closed negative real axis, via its (complex) eigendecomposition.

    Only what the similarity identity ``A log(B) A^-1 == log(A B A^-1)`` needs;
    defective matrices are rejected.
    """
    A = _square(A, "A")
    w, V = np.linalg.eig(A)
    if np.any((np.abs(w.imag) <= 1e-14 * np.abs(w)) & (w.real <= 0)):
        raise ValueError("principal logarithm undefined: eigenvalue on the closed negative real axis")
    if np.linalg.cond(V) > cond_max:
        raise ValueError("matrix is numerically defective; eigendecomposition route unavailable")
    L = (V * np.log(w.astype(complex))) @ np.linalg.inv(V)
    if np.linalg.norm(L.imag) > 1e-8 * max(1.0, np.linalg.norm(L.real)):
        raise ValueError("logarithm of a real matrix came out complex")
    return L.real


def vec(A: ArrayLike) -> NDArray:
    """Stack the columns of ``A`` into a 1-D vector."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"vec expects a matrix, got shape {A.shape}")
    return A.reshape(-1, order="F")


def unvec(v: ArrayLike, rows: int, cols: int | None = None) -> NDArray:
    cols = rows if cols is None else cols
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape {v.size} entries to {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def kron(A: ArrayLike, B: ArrayLike) -> NDArray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("kron expects two matrices")
    return np.kron(A, B)


def kron_sum(A: ArrayLike, B: ArrayLike) -> NDArray:
    """Kronecker sum ``A (+) B = A (x) I_n + I_m (x) B`` for square A (m x m), B (n x n)."""
    A = _square(A, "A")
    B = _square(B, "B")
    m, n = A.shape[0], B.shape[0]
    return np.kron(A, np.eye(n)) + np.kron(np.eye(m), B)


def jacobian_square(X: ArrayLike) -> NDArray:
    """Jacobian of ``X -> X @ X`` acting on ``vec(dX)``: ``X.T (+) X``."""
    X = _square(X, "X")
    return kron_sum(X.T, X)


def _log_divided_differences(lam: NDArray) -> NDArray:
    # (log a - log b)/(a - b) written as 2 atanh(z)/(a+b)/z, z = (a-b)/(a+b),
    # which stays accurate when a ~ b and tends to 1/a at a == b.
    a = lam[:, None]
    b = lam[None, :]
    z = (a - b) / (a + b)
    small = np.abs(z) < 1e-4
    z_safe = np.where(small, 0.5, z)
    ratio = np.where(small, 1.0 + z**2 / 3.0 + z**4 / 5.0, np.arctanh(z_safe) / z_safe)
    return 2.0 * ratio / (a + b)


def frechet_log(X: ArrayLike, Z: ArrayLike) -> NDArray:
    """Directional derivative of the matrix logarithm at ``X`` along ``Z``.

    Equals the integral ``int_0^inf (X + tI)^-1 Z (X + tI)^-1 dt``, evaluated
    in the eigenbasis of ``X`` where it becomes a Hadamard product with the
    first divided differences of ``log``.
    """
    lam, V = sym_eig(X)
    Z = as_sym(Z, "Z")
    if Z.shape != (lam.size, lam.size):
        raise DimensionError(f"direction has shape {Z.shape}, base point is {lam.size}x{lam.size}")
    Zt = V.T @ Z @ V
    return symmetrize(V @ (_log_divided_differences(lam) * Zt) @ V.T)


def loginv_integral(X: ArrayLike) -> NDArray:
    """``X^-1 log X`` (which commutes, so also ``(log X) X^-1``).

    This is the closed form of ``int_0^inf (X + tI)^-1 (log X) (X + tI)^-1 dt``.
    """
    return _spectral_map(X, lambda lam: np.log(lam) / lam)


def gauss_legendre_01(order: int) -> tuple[NDArray, NDArray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    if order < 1:
        raise ValueError("quadrature order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def log_mean_residual(H: ArrayLike, M: ArrayLike, quad_order: int = 32) -> NDArray:
    """Quadrature residual of the logarithmic-mean equation.

    Returns ``int_0^1 H^t M H^(1-t) dt - log H`` with the integral done by
    ``quad_order``-point Gauss-Legendre.  It vanishes for ``M = H^-1 log H``.
    """
    if quad_order < 2:
        raise ValueError("quad_order must be at least 2")
    lam, V = sym_eig(H)
    M = as_sym(M, "M")
    if M.shape != (lam.size, lam.size):
        raise DimensionError(f"M has shape {M.shape}, H is {lam.size}x{lam.size}")
    nodes, weights = gauss_legendre_01(quad_order)
    integral = np.zeros_like(M)
    for t, w in zip(nodes, weights):
        Ht = (V * lam**t) @ V.T
        Ht1 = (V * lam ** (1.0 - t)) @ V.T
        integral += w * (Ht @ M @ Ht1)
    logH = (V * np.log(lam)) @ V.T
    return symmetrize(integral - logH)
