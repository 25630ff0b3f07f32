"""Experiment drivers behind the command-line tool.

Configs are single JSON documents with a ``"schema"`` version field and
row-major nested arrays for matrices.  Validation failures raise
:class:`~frfilter.errors.ConfigError` naming the offending field.

CSV files are comma separated with LF line endings and a header row that
carries units.  Floats are written with ``repr`` and rows are sorted before
writing, so identical configs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from numpy.typing import NDArray

from . import frgeom, matfun, proxfilter, reference
from .errors import ConfigError, FRFilterError, NotSPDError
from .models import GaussianState, LinearGaussianModel

SCHEMA_VERSION = 1
RATIO_BAND = (1.5, 2.6)

CONVERGENCE_HEADER = [
    "h [time]",
    "seed",
    "mean_err_terminal [state]",
    "cov_err_terminal [state^2]",
    "mean_err_sup [state]",
    "cov_err_sup [state^2]",
]
GEOMETRY_HEADER = ["case", "quantity", "value [dimensionless]", "reference [dimensionless]", "abs_err [dimensionless]"]


# ---------------------------------------------------------------- configs


def _load(source: str | Path | dict) -> dict:
    if isinstance(source, dict):
        return dict(source)
    try:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("<file>", "top level must be a JSON object")
    return doc


def _check_schema(doc: dict) -> None:
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported schema version {schema!r}, expected {SCHEMA_VERSION}")


def _matrix(doc: dict, key: str, default=None) -> NDArray:
    if key not in doc:
        if default is None:
            raise ConfigError(key, "missing")
        return np.array(default, dtype=float)
    try:
        a = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"not numeric: {exc}") from exc
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or not np.all(np.isfinite(a)):
        raise ConfigError(key, "must be a finite matrix (row-major nested array)")
    return a


def _vector(doc: dict, key: str, n: int, default=None) -> NDArray:
    if key not in doc:
        if default is None:
            raise ConfigError(key, "missing")
        return np.array(default, dtype=float)
    a = np.atleast_1d(np.array(doc[key], dtype=float))
    if a.shape != (n,) or not np.all(np.isfinite(a)):
        raise ConfigError(key, f"must be a finite vector of length {n}")
    return a


def _number(doc: dict, key: str, default=None, positive=True) -> float:
    if key not in doc:
        if default is None:
            raise ConfigError(key, "missing")
        return float(default)
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(key, "must be a number")
    if positive and not v > 0:
        raise ConfigError(key, "must be positive")
    return float(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Convergence-study configuration.

    ``noise_step`` is the resolution at which Wiener increments are drawn;
    every step size must be an integer multiple of it (and of ``h_ref``).
    """

    A: NDArray
    B: NDArray
    C: NDArray
    R: NDArray
    x0: NDArray
    mu0: NDArray
    P0: NDArray
    T: float
    steps: tuple[float, ...]
    seeds: tuple[int, ...]
    cov_mode: str = "truncated"
    out_dir: str = "."
    h_ref: float = reference.H_REF
    noise_step: float = reference.H_REF
    split: str = "linear"

    @property
    def model(self) -> LinearGaussianModel:
        return LinearGaussianModel(self.A, self.B, self.C, self.R)

    @classmethod
    def from_dict(cls, source: str | Path | dict) -> "ExperimentConfig":
        doc = _load(source)
        _check_schema(doc)
        A, B, C = (_matrix(doc, k) for k in "ABC")
        R = _matrix(doc, "R")
        try:
            model = LinearGaussianModel(A, B, C, R)
        except NotSPDError as exc:
            raise ConfigError("R", str(exc)) from exc
        except (FRFilterError, ValueError) as exc:
            raise ConfigError("A/B/C/R", str(exc)) from exc
        n = model.n
        x0 = _vector(doc, "x0", n, default=np.zeros(n))
        mu0 = _vector(doc, "mu0", n, default=np.zeros(n))
        P0 = _matrix(doc, "P0", default=np.eye(n))
        if P0.shape != (n, n) or not matfun.is_spd(P0):
            raise ConfigError("P0", f"must be a {n}x{n} SPD matrix")
        T = _number(doc, "T")
        steps = doc.get("steps")
        if not isinstance(steps, list) or not steps:
            raise ConfigError("steps", "must be a non-empty list of step sizes")
        if any(isinstance(h, bool) or not isinstance(h, (int, float)) or not 0 < h <= T for h in steps):
            raise ConfigError("steps", "every step size must satisfy 0 < h <= T")
        seeds = doc.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
            raise ConfigError("seeds", "must be a non-empty list of integers")
        cov_mode = doc.get("cov_mode", "truncated")
        if cov_mode not in ("exact", "truncated"):
            raise ConfigError("cov_mode", "must be 'exact' or 'truncated'")
        split = doc.get("split", "linear")
        if split not in ("linear", "bridge"):
            raise ConfigError("split", "must be 'linear' or 'bridge'")
        h_ref = _number(doc, "h_ref", reference.H_REF)
        noise_step = _number(doc, "noise_step", h_ref)
        for h in steps:
            for base, name in ((h_ref, "h_ref"), (noise_step, "noise_step")):
                r = h / base
                if abs(r - round(r)) > 1e-9 * max(1.0, r) or round(r) < 1:
                    raise ConfigError("steps", f"step {h} is not an integer multiple of {name}={base}")
            r = T / h
            if abs(r - round(r)) > 1e-9 * max(1.0, r):
                raise ConfigError("steps", f"step {h} does not divide the horizon T={T}")
        out_dir = doc.get("out_dir", ".")
        if not isinstance(out_dir, str):
            raise ConfigError("out_dir", "must be a string")
        return cls(
            A, B, C, R, x0, mu0, P0, T,
            tuple(float(h) for h in steps), tuple(seeds),
            cov_mode, out_dir, h_ref, noise_step, split,
        )


@dataclass(frozen=True)
class GeometryConfig:
    """Geometry-study configuration; every field has a default."""

    seed: int = 0
    grid_lower: float = -10.0
    grid_upper: float = 11.0
    grid_points: int = 4096
    pairs: tuple[tuple[float, float, float, float], ...] = ((0.0, 1.0, 1.0, 1.0), (0.0, 1.0, 0.0, 2.0))
    shared_mean_P1: NDArray = field(default_factory=lambda: np.array([[2.0, 0.3], [0.3, 1.0]]))
    shared_mean_P2: NDArray = field(default_factory=lambda: np.array([[0.7, -0.2], [-0.2, 1.5]]))
    shoot_steps: int = 64
    random_cases: int = 5
    dim: int = 3
    out_dir: str = "."

    @classmethod
    def from_dict(cls, source: str | Path | dict) -> "GeometryConfig":
        doc = _load(source)
        _check_schema(doc)
        geo = doc.get("geometry", {})
        if not isinstance(geo, dict):
            raise ConfigError("geometry", "must be an object")
        kw: dict[str, Any] = {}
        if "seed" in geo:
            if not isinstance(geo["seed"], int):
                raise ConfigError("geometry.seed", "must be an integer")
            kw["seed"] = geo["seed"]
        grid = geo.get("grid", {})
        if grid:
            lo = _number(grid, "lower", positive=False)
            hi = _number(grid, "upper", positive=False)
            pts = grid.get("points")
            if not lo < hi:
                raise ConfigError("geometry.grid", "lower must be below upper")
            if not isinstance(pts, int) or pts < 8:
                raise ConfigError("geometry.grid.points", "must be an integer >= 8")
            kw.update(grid_lower=lo, grid_upper=hi, grid_points=pts)
        if "pairs" in geo:
            pairs = []
            for i, p in enumerate(geo["pairs"]):
                try:
                    m1, v1, m2, v2 = (float(p[k]) for k in ("mean1", "var1", "mean2", "var2"))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"geometry.pairs[{i}]", "needs numeric mean1, var1, mean2, var2") from exc
                if not (v1 > 0 and v2 > 0):
                    raise ConfigError(f"geometry.pairs[{i}]", "variances must be positive")
                pairs.append((m1, v1, m2, v2))
            kw["pairs"] = tuple(pairs)
        for key in ("shared_mean_P1", "shared_mean_P2"):
            if key in geo:
                P = _matrix(geo, key)
                if not matfun.is_spd(P):
                    raise ConfigError(f"geometry.{key}", "must be SPD")
                kw[key] = P
        if "shared_mean_P1" in kw or "shared_mean_P2" in kw:
            a = kw.get("shared_mean_P1", cls().shared_mean_P1)
            b = kw.get("shared_mean_P2", cls().shared_mean_P2)
            if a.shape != b.shape:
                raise ConfigError("geometry.shared_mean_P2", "must match the shape of shared_mean_P1")
        for key in ("shoot_steps", "random_cases", "dim"):
            if key in geo:
                v = geo[key]
                if not isinstance(v, int) or v < 1:
                    raise ConfigError(f"geometry.{key}", "must be a positive integer")
                kw[key] = v
        kw["out_dir"] = doc.get("out_dir", ".")
        return cls(**kw)


# ---------------------------------------------------------------- convergence


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    seed: int
    mean_err: float
    cov_err: float
    mean_err_sup: float
    cov_err_sup: float
    wall_time: float

    def __post_init__(self):
        errs = (self.mean_err, self.cov_err, self.mean_err_sup, self.cov_err_sup)
        if not all(np.isfinite(e) and e >= 0 for e in errs):
            raise ValueError(f"errors must be finite and nonnegative: {errs}")

    def csv_fields(self) -> list[str]:
        return [repr(self.h), str(self.seed)] + [
            repr(float(v)) for v in (self.mean_err, self.cov_err, self.mean_err_sup, self.cov_err_sup)
        ]


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    wall_time: float

    def errors(self, kind: str = "mean") -> dict[int, list[float]]:
        """Terminal errors per seed, ordered by decreasing ``h``."""
        out: dict[int, list[tuple[float, float]]] = {}
        for r in self.rows:
            out.setdefault(r.seed, []).append((r.h, r.mean_err if kind == "mean" else r.cov_err))
        return {s: [e for _, e in sorted(v, reverse=True)] for s, v in sorted(out.items())}

    def ratios(self, kind: str = "mean") -> dict[int, list[float]]:
        """Consecutive error ratios ``err(h) / err(h/2...)`` per seed."""
        return {
            s: [a / b if b > 0 else np.inf for a, b in zip(e[:-1], e[1:])]
            for s, e in self.errors(kind).items()
        }

    def seeds_in_band(self, kind: str = "mean", band=RATIO_BAND) -> int:
        lo, hi = band
        return sum(all(lo <= r <= hi for r in rs) for rs in self.ratios(kind).values())

    def summary(self) -> str:
        steps = sorted({r.h for r in self.rows}, reverse=True)
        lines = [f"steps (time units): {', '.join(repr(h) for h in steps)}"]
        for kind in ("mean", "cov"):
            lines.append(f"{kind} error ratios between consecutive steps:")
            for s, rs in self.ratios(kind).items():
                lines.append(f"  seed {s}: " + ", ".join(f"{r:.4f}" for r in rs))
            n_in = self.seeds_in_band(kind)
            lines.append(f"  seeds with all ratios in [{RATIO_BAND[0]}, {RATIO_BAND[1]}]: {n_in}/{len(self.ratios(kind))}")
        lines.append(f"wall time (s): {self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _convergence_cell(cfg: ExperimentConfig, model: LinearGaussianModel, h: float, seed: int) -> ConvergenceRow:
    t0 = time.perf_counter()
    traj = reference.simulate_sde(model, cfg.x0, h, cfg.T, seed, noise_step=cfg.noise_step)
    oracle = reference.kalman_bucy_oracle(traj, model, cfg.mu0, cfg.P0, h_ref=cfg.h_ref, split=cfg.split)
    run = proxfilter.run_proximal_filter(traj, model, cfg.mu0, cfg.P0, mode=cfg.cov_mode)
    dmu = np.linalg.norm(run.means - oracle.means, axis=1)
    dP = np.linalg.norm(run.covs - oracle.covs, axis=(1, 2))
    return ConvergenceRow(h, seed, dmu[-1], dP[-1], dmu.max(), dP.max(), time.perf_counter() - t0)


def run_convergence(cfg: ExperimentConfig, threads: int = 1, seed_offset: int = 0) -> ConvergenceResult:
    """Proximal filter vs the sub-stepped Kalman-Bucy oracle for every ``(h, seed)``."""
    model = cfg.model
    cells = [(h, s + seed_offset) for h in cfg.steps for s in cfg.seeds]
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda c: _convergence_cell(cfg, model, *c), cells))
    else:
        rows = [_convergence_cell(cfg, model, h, s) for h, s in cells]
    rows.sort(key=lambda r: (r.h, r.seed))
    return ConvergenceResult(rows, time.perf_counter() - t0)


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        w.writerows(rows)


def write_convergence(result: ConvergenceResult, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    csv_path = out / "convergence.csv"
    _write_csv(csv_path, CONVERGENCE_HEADER, [r.csv_fields() for r in result.rows])
    summary_path = out / "summary.txt"
    summary_path.write_text(result.summary(), encoding="utf-8")
    return csv_path, summary_path


# ---------------------------------------------------------------- geometry


def random_spd(rng: np.random.Generator, n: int, cond: float = 10.0) -> NDArray:
    """Random SPD matrix with condition number exactly ``cond``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.exp(np.linspace(0.0, np.log(cond), n)) if n > 1 else np.ones(1)
    lam = lam * np.exp(rng.uniform(-1, 1))
    return matfun.symmetrize((Q * lam) @ Q.T)


def grad_check_error(P: NDArray, P0: NDArray, step: float = 1e-5) -> float:
    """Relative Frobenius error of :func:`frgeom.grad_fr2_cov` against
    central differences of the squared covariance distance.

    Perturbations run over a basis of symmetric matrices; off-diagonal
    directions move both mirror entries so the finite-difference gradient
    is the symmetric one.
    """
    n = P.shape[0]
    G = np.zeros((n, n))
    f = lambda X: frgeom.fr_distance_gauss_cov(X, P0) ** 2
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            d = (f(P + step * E) - f(P - step * E)) / (2 * step)
            if i == j:
                G[i, i] = d
            else:
                G[i, j] = G[j, i] = d / 2
    A = frgeom.grad_fr2_cov(P, P0)
    return float(np.linalg.norm(A - G) / np.linalg.norm(A))


def _gauss1d(mean: float, var: float) -> GaussianState:
    return GaussianState([mean], [[var]])


def run_geometry(cfg: GeometryConfig) -> list[list[str]]:
    """Rows of ``geometry.csv``: each quantity next to its closed form."""
    rows: list[tuple[str, str, float, float]] = []
    lo, hi, N = cfg.grid_lower, cfg.grid_upper, cfg.grid_points

    for k, (m1, v1, m2, v2) in enumerate(cfg.pairs):
        a, b = _gauss1d(m1, v1), _gauss1d(m2, v2)
        exact = frgeom.gauss_bhattacharyya_angle(a, b)
        fine = frgeom.fr_distance_grid(frgeom.gaussian_to_grid(a, lo, hi, N), frgeom.gaussian_to_grid(b, lo, hi, N))
        coarse = frgeom.fr_distance_grid(
            frgeom.gaussian_to_grid(a, lo, hi, N // 2), frgeom.gaussian_to_grid(b, lo, hi, N // 2)
        )
        case = f"pair{k}"
        rows.append((case, "grid_distance", fine, exact))
        # Richardson check: halving the grid may move the estimate by at most
        # four times the fine-grid error (floored at round-off level)
        rows.append((case, "halved_grid_change", abs(coarse - fine), max(4 * abs(fine - exact), 1e-12)))
        if v1 == v2:
            rows.append((case, "mahalanobis", frgeom.fr_distance_gauss_mean([m1], [m2], [[v1]]), abs(m1 - m2) / np.sqrt(v1)))
        if m1 == m2:
            rows.append((case, "cov_distance", frgeom.fr_distance_gauss_cov([[v1]], [[v2]]), abs(np.log(v2 / v1)) / np.sqrt(2)))

    same = _gauss1d(0.3, 1.7)
    g = frgeom.gaussian_to_grid(same, lo, hi, N)
    rows.append(("identical", "grid_distance", frgeom.fr_distance_grid(g, g), 0.0))
    rows.append(("identical", "cov_distance", frgeom.fr_distance_gauss_cov(same.cov, same.cov), 0.0))
    rows.append(("identical", "mahalanobis", frgeom.fr_distance_gauss_mean(same.mean, same.mean, same.cov), 0.0))

    P1, P2 = cfg.shared_mean_P1, cfg.shared_mean_P2
    mu = np.zeros(P1.shape[0])
    path = frgeom.gauss_geodesic_shoot(GaussianState(mu, P1), GaussianState(mu, P2), steps=cfg.shoot_steps)
    rows.append(("shared_mean", "shooting_length", path.length, frgeom.fr_distance_gauss_cov(P1, P2)))
    dev = max(
        np.linalg.norm(P - frgeom.gauss_cov_geodesic(P1, P2, t)) for t, P in zip(path.times, path.covs)
    )
    rows.append(("shared_mean", "path_deviation", dev, 0.0))

    rng = np.random.default_rng(cfg.seed)
    for k in range(cfg.random_cases):
        P = random_spd(rng, cfg.dim, cond=rng.uniform(2, 50))
        P0 = random_spd(rng, cfg.dim, cond=rng.uniform(2, 50))
        rows.append((f"random{k}", "grad_check_rel_err", grad_check_error(P, P0), 0.0))
        H = random_spd(rng, cfg.dim, cond=rng.uniform(2, 100))
        res = np.linalg.norm(matfun.log_mean_residual(H, matfun.loginv_integral(H)))
        rows.append((f"random{k}", "log_mean_residual", res, 0.0))
        X = random_spd(rng, cfg.dim, cond=rng.uniform(2, 50))
        x, w = matfun.gauss_legendre_01(64)
        quad = _loginv_quadrature(X, w, x)
        rows.append((f"random{k}", "loginv_quadrature_err", float(np.linalg.norm(quad - matfun.loginv_integral(X))), 0.0))

    return [[c, q, repr(float(v)), repr(float(r)), repr(float(abs(v - r)))] for c, q, v, r in rows]


def _loginv_quadrature(X: NDArray, w: NDArray, x: NDArray) -> NDArray:
    # log X = int_0^1 (X - I) (I + s (X - I))^-1 ds, so X^-1 log X follows by
    # one more solve; independent of the spectral closed form
    n = X.shape[0]
    I = np.eye(n)
    D = X - I
    L = sum(wi * D @ np.linalg.inv(I + xi * D) for wi, xi in zip(w, x))
    return np.linalg.solve(X, L)


def write_geometry(rows: list[list[str]], out_dir: str | Path) -> Path:
    path = Path(out_dir) / "geometry.csv"
    _write_csv(path, GEOMETRY_HEADER, rows)
    return path


# ---------------------------------------------------------------- self-test


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


@dataclass
class SelftestReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def format(self) -> str:
        lines = [f"{'suite':<10} {'check':<34} {'value':>12} {'tol':>10}  result"]
        for c in self.checks:
            lines.append(f"{c.suite:<10} {c.name:<34} {c.value:12.3e} {c.tol:10.1e}  {'PASS' if c.passed else 'FAIL'}")
        n_fail = sum(not c.passed for c in self.checks)
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def _suite_matfun(rng) -> list[tuple[str, float, float]]:
    X = random_spd(rng, 4, 30.0)
    Z = matfun.symmetrize(rng.standard_normal((4, 4)))
    out = [
        ("exp(log X) = X", np.linalg.norm(matfun.spd_exp(matfun.spd_log(X)) - X) / np.linalg.norm(X), 1e-12),
        ("sqrt(X)^2 = X", np.linalg.norm(matfun.spd_sqrt(X) @ matfun.spd_sqrt(X) - X) / np.linalg.norm(X), 1e-12),
    ]
    eps = 1e-6
    fd = (matfun.spd_log(X + eps * Z) - matfun.spd_log(X - eps * Z)) / (2 * eps)
    L = matfun.frechet_log(X, Z)
    out.append(("frechet_log vs central difference", np.linalg.norm(L - fd) / np.linalg.norm(L), 1e-6))
    J = matfun.jacobian_square(X)
    out.append(("kron-sum Jacobian of X^2", np.linalg.norm(J @ matfun.vec(Z) - matfun.vec(X @ Z + Z @ X)), 1e-12 * np.linalg.norm(J)))
    return out


def _suite_frgeom(rng) -> list[tuple[str, float, float]]:
    P1, P2 = random_spd(rng, 3, 20.0), random_spd(rng, 3, 20.0)
    T = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    d = frgeom.fr_distance_gauss_cov(P1, P2)
    out = [
        ("log vs eigenvalue distance route", abs(d - frgeom.cov_distance_eig(P1, P2)), 1e-12),
        ("congruence invariance", abs(d - frgeom.fr_distance_gauss_cov(T @ P1 @ T.T, T @ P2 @ T.T)), 1e-10),
    ]
    a, b = _gauss1d(0.0, 1.0), _gauss1d(1.0, 1.0)
    r1, r2 = frgeom.gaussian_to_grid(a, -10, 11, 4096), frgeom.gaussian_to_grid(b, -10, 11, 4096)
    out.append(("grid distance vs closed form", abs(frgeom.fr_distance_grid(r1, r2) - np.arccos(np.exp(-1 / 8))), 1e-4))
    g = frgeom.fr_geodesic_grid(r1, r2, 0.5)
    out.append((
        "geodesic additivity",
        abs(frgeom.fr_distance_grid(r1, g) + frgeom.fr_distance_grid(g, r2) - frgeom.fr_distance_grid(r1, r2)),
        1e-6,
    ))
    I = frgeom.fisher_info_matrix(frgeom.gaussian_family_1d(), [0.0, 1.0])
    out.append(("Gaussian Fisher information", float(np.abs(I - np.diag([1.0, 2.0])).max()), 1e-6))
    return out


def _suite_gradcheck(rng) -> list[tuple[str, float, float]]:
    errs = [grad_check_error(random_spd(rng, 3, rng.uniform(2, 50)), random_spd(rng, 3, rng.uniform(2, 50))) for _ in range(5)]
    return [("grad_fr2_cov max relative error", max(errs), 1e-6)]


def _suite_proxfilter(rng) -> list[tuple[str, float, float]]:
    m = LinearGaussianModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    P = proxfilter.prox_cov_update_exact([[1.0]], 0.1, m)
    Pt = proxfilter.prox_cov_update_truncated([[1.0]], 0.1, m)
    out = [
        ("scalar exact update", abs(P[0, 0] - 0.9127652716), 1e-5),
        ("scalar truncated update", abs(Pt[0, 0] - 1 / 1.1), 1e-12),
        ("exact update stationarity", float(np.linalg.norm(proxfilter.stationarity_residual_cov(P, [[1.0]], 0.1, m))), 1e-8),
    ]
    mu = proxfilter.prox_mean_update([0.3], [[1.0]], [0.7], 0.1, m)
    implicit = 0.3 + 0.1 * (0.7 - mu[0])
    out.append(("implicit mean equation", abs(mu[0] - implicit), 1e-14))
    return out


def _suite_reference(rng) -> list[tuple[str, float, float]]:
    m = LinearGaussianModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    Pinf = reference.riccati_stationary(m)
    a = reference.simulate_sde(m, [0.0], 0.01, 1.0, 11)
    b = reference.simulate_sde(m, [0.0], 0.01, 1.0, 11)
    return [
        ("stationary Riccati root", abs(Pinf[0, 0] - (np.sqrt(3) - 1)), 1e-8),
        ("simulation determinism", float(np.abs(a.increments - b.increments).max() + np.abs(a.states - b.states).max()), 0.0),
    ]


SUITES: dict[str, Callable] = {
    "matfun": _suite_matfun,
    "frgeom": _suite_frgeom,
    "gradcheck": _suite_gradcheck,
    "proxfilter": _suite_proxfilter,
    "reference": _suite_reference,
}


def run_selftest(suites: list[str] | None = None, tamper: bool = False, seed: int = 2024) -> SelftestReport:
    """Run the named invariant suites (all by default) with fixed seeds.

    ``tamper`` replaces every tolerance by ``-1`` so that every check fails;
    it exists to exercise the failure path.
    """
    names = list(SUITES) if not suites else suites
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ConfigError("suite", f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    checks = []
    for name in names:
        rng = np.random.default_rng([seed, list(SUITES).index(name)])
        for check, value, tol in SUITES[name](rng):
            checks.append(Check(name, check, float(value), -1.0 if tamper else float(tol)))
    return SelftestReport(checks)
