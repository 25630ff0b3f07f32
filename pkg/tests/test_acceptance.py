"""Exit criteria for the build, each at its stated tolerance.

Every test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.  Each test also prints the measured figures.
"""

import time
import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import random_spd, random_sym
from frfilter import bench, frgeom as fg, matfun as mf, proxfilter as pf, reference as ref
from frfilter.models import GaussianState, LinearGaussianModel

pytestmark = pytest.mark.acceptance

BAND = (1.5, 2.6)
SEEDS = list(range(8))
STEPS = [0.02, 0.01, 0.005]


def convergence_config(A, B, C, R):
    n = np.shape(A)[0]
    return bench.ExperimentConfig.from_dict(
        {
            "schema": 1,
            "A": A, "B": B, "C": C, "R": R,
            "x0": [0.0] * n, "mu0": [0.0] * n, "P0": np.eye(n).tolist(),
            "T": 1.0, "steps": STEPS, "seeds": SEEDS, "cov_mode": "truncated",
        }
    )


def seeds_with_ratios_in_band(result, kind):
    ratios = {s: [round(float(r), 4) for r in rs] for s, rs in result.ratios(kind).items()}
    return sum(all(BAND[0] <= r <= BAND[1] for r in rs) for rs in ratios.values()), ratios


@pytest.mark.criterion(1, "Kalman-Bucy recovery as h -> 0")
@pytest.mark.parametrize(
    "name, matrices",
    [
        ("scalar", ([[-1.0]], [[1.0]], [[1.0]], [[1.0]])),
        ("two-state", ([[0.0, 1.0], [-2.0, -3.0]], np.eye(2).tolist(), [[1.0, 0.0]], [[1.0]])),
    ],
)
def test_kalman_bucy_recovery(name, matrices):
    cfg = convergence_config(*matrices)
    t0 = time.perf_counter()
    result = bench.run_convergence(cfg)
    elapsed = time.perf_counter() - t0
    n_mean, r_mean = seeds_with_ratios_in_band(result, "mean")
    n_cov, r_cov = seeds_with_ratios_in_band(result, "cov")
    print(f"\n[1] {name}: mean ratios {r_mean}")
    print(f"[1] {name}: cov ratios {r_cov}")
    print(f"[1] {name}: seeds in band mean {n_mean}/8, cov {n_cov}/8, runtime {elapsed:.1f} s")
    assert n_mean >= 6
    assert n_cov >= 6
    assert elapsed < 60.0


def fd_gradient(P, P0, eps=1e-5):
    n = P.shape[0]
    G = np.zeros((n, n))
    f = lambda X: fg.fr_distance_gauss_cov(X, P0) ** 2
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            d = (f(P + eps * E) - f(P - eps * E)) / (2 * eps)
            G[i, j] = G[j, i] = d if i == j else d / 2
    return G


@pytest.mark.criterion(2, "gradient of the squared covariance distance")
def test_gradient_theorem():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    errs = []
    for _ in range(20):
        P = random_spd(rng, 3, rng.uniform(1, 50))
        P0 = random_spd(rng, 3, rng.uniform(1, 50))
        G = fg.grad_fr2_cov(P, P0)
        errs.append(np.linalg.norm(G - fd_gradient(P, P0)) / np.linalg.norm(G))
    elapsed = time.perf_counter() - t0
    print(f"\n[2] max relative error {max(errs):.2e}, runtime {elapsed:.2f} s")
    assert max(errs) <= 1e-6
    assert elapsed < 5.0


@pytest.mark.criterion(3, "covariance distance: two routes and affine invariance")
def test_distance_formula_equivalence():
    rng = np.random.default_rng(3)
    route_gap, inv_gap = 0.0, 0.0
    for k in range(100):
        n = 1 + k % 6
        P1 = random_spd(rng, n, rng.uniform(1, 100))
        P2 = random_spd(rng, n, rng.uniform(1, 100))
        d = fg.fr_distance_gauss_cov(P1, P2)
        route_gap = max(route_gap, abs(d - fg.cov_distance_eig(P1, P2)))
        M = rng.standard_normal((n, n)) + 2 * np.eye(n)
        inv_gap = max(inv_gap, abs(d - fg.fr_distance_gauss_cov(M @ P1 @ M.T, M @ P2 @ M.T)))
    print(f"\n[3] route gap {route_gap:.2e}, congruence gap {inv_gap:.2e}")
    assert route_gap <= 1e-12
    assert inv_gap <= 1e-10


def random_model(rng):
    n, m = rng.integers(1, 4, size=2)
    A = rng.standard_normal((n, n)) - 1.5 * np.eye(n)
    B = 0.5 * rng.standard_normal((n, n))
    C = rng.standard_normal((m, n))
    R = random_spd(rng, m, 5.0)
    model = LinearGaussianModel(A, B, C, R)
    P = random_spd(rng, n, 10.0)
    P /= max(np.linalg.norm(P @ model.S, 2), 1e-12)
    return model, P


@pytest.mark.criterion(4, "exact vs truncated covariance update")
def test_exact_vs_truncated():
    rng = np.random.default_rng(4)
    all_ratios = []
    for _ in range(10):
        model, Pm = random_model(rng)
        d = [
            np.linalg.norm(pf.prox_cov_update_exact(Pm, h, model) - pf.prox_cov_update_truncated(Pm, h, model))
            for h in (0.1, 0.05, 0.025)
        ]
        all_ratios.append((d[0] / d[1], d[1] / d[2]))
    scalar = LinearGaussianModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    pe = pf.prox_cov_update_exact([[1.0]], 0.1, scalar)[0, 0]
    pt = pf.prox_cov_update_truncated([[1.0]], 0.1, scalar)[0, 0]
    print(f"\n[4] ratios {np.round(all_ratios, 4).tolist()}")
    print(f"[4] scalar exact {pe:.7f}, truncated {pt:.7f}")
    assert all(3.2 <= r <= 4.8 for pair in all_ratios for r in pair)
    assert abs(pe - 0.912765) <= 1e-5
    assert abs(pt - 0.909091) <= 1e-5


@pytest.mark.criterion(5, "nonparametric distance and geodesic")
def test_nonparametric_geometry():
    lo, hi, N = -10.0, 11.0, 4096
    a = fg.gaussian_to_grid(GaussianState([0.0], [[1.0]]), lo, hi, N)
    b = fg.gaussian_to_grid(GaussianState([1.0], [[1.0]]), lo, hi, N)
    d = fg.fr_distance_grid(a, b)
    closed = np.arccos(np.exp(-1 / 8))
    print(f"\n[5] grid distance {d:.9f}, arccos(exp(-1/8)) = {closed:.9f}")
    assert abs(d - closed) <= 1e-4

    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10):
        w = rng.dirichlet([1, 1, 1], size=2)
        m = rng.uniform(-3, 3, size=(2, 3))
        v = rng.uniform(0.3, 2.0, size=(2, 3))
        r1 = fg.mixture_to_grid(w[0], m[0], v[0], lo, hi, N)
        r2 = fg.mixture_to_grid(w[1], m[1], v[1], lo, hi, N)
        d12 = fg.fr_distance_grid(r1, r2)
        for t in (0.25, 0.5, 0.75):
            g = fg.fr_geodesic_grid(r1, r2, t)
            worst = max(worst, abs(fg.fr_distance_grid(r1, g) + fg.fr_distance_grid(g, r2) - d12))
    print(f"[5] worst additivity defect {worst:.2e}")
    assert worst <= 1e-6


def loginv_quadrature(X, order=64):
    s, w = mf.gauss_legendre_01(order)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        L = sla.logm(X).real
    I = np.eye(X.shape[0])
    acc = np.zeros_like(X)
    for si, wi in zip(s, w):
        Ri = np.linalg.solve(X + si / (1 - si) * I, I)
        acc += wi * Ri @ L @ Ri / (1 - si) ** 2
    return acc


@pytest.mark.criterion(6, "integral identities and Kronecker-sum Jacobian")
def test_integral_identities():
    rng = np.random.default_rng(6)
    quad_err = 0.0
    for n in (1, 2, 3, 3):
        X = random_spd(rng, n, rng.uniform(1, 50))
        quad_err = max(quad_err, np.linalg.norm(loginv_quadrature(X) - mf.loginv_integral(X)))
    lm = 0.0
    for _ in range(5):
        H = random_spd(rng, 4, rng.uniform(1, 100))
        lm = max(lm, np.linalg.norm(mf.log_mean_residual(H, mf.loginv_integral(H), quad_order=32)))
    jac = 0.0
    for _ in range(5):
        X = rng.standard_normal((3, 3))
        dX = rng.standard_normal((3, 3))
        jac = max(jac, np.abs(mf.jacobian_square(X) @ mf.vec(dX) - mf.vec(X @ dX + dX @ X)).max())
    print(f"\n[6] quadrature {quad_err:.2e}, log-mean residual {lm:.2e}, Jacobian {jac:.2e}")
    assert quad_err <= 1e-6
    assert lm <= 1e-8
    assert jac <= 1e-12


@pytest.mark.criterion(7, "moment-matched mixtures vs closed-form covariance distance")
def test_mixture_minimality_spot_check():
    lo, hi, N = -15.0, 15.0, 6000
    mu0, P0 = 0.0, 1.0
    target = fg.gaussian_to_grid(GaussianState([mu0], [[P0]]), lo, hi, N)
    worst = np.inf
    lines = []
    for P in (0.5, 0.8, 1.25, 2.0):
        d_cov = fg.fr_distance_gauss_cov([[P]], [[P0]])
        for frac in (0.02, 0.25, 0.5, 0.75, 0.95):
            # symmetric mixture 0.5 N(mu0 - a, v) + 0.5 N(mu0 + a, v), a^2 + v = P
            a = np.sqrt(frac * P)
            v = P - a * a
            mix = fg.mixture_to_grid([0.5, 0.5], [mu0 - a, mu0 + a], [v, v], lo, hi, N)
            d_mix = fg.fr_distance_grid(mix, target)
            margin = d_mix - (d_cov - 2e-3)
            worst = min(worst, margin)
            lines.append(f"P={P} frac={frac}: d_grid={d_mix:.4f} d_cov={d_cov:.4f}")
    print("\n[7] " + "\n[7] ".join(lines))
    print(f"[7] worst margin {worst:.4f}")
    assert worst >= 0


@pytest.mark.criterion(8, "stationary Riccati consistency")
def test_stationary_consistency():
    model = LinearGaussianModel([[-1.0]], [[1.0]], [[1.0]], [[1.0]])
    P = ref.riccati_stationary(model)
    err = abs(P[0, 0] - (np.sqrt(3) - 1))
    T = 1.0
    tr = ref.simulate_sde(model, [0.0], 1e-4, T, seed=0)
    run = ref.kalman_bucy_run(tr, model, [0.0], P)
    drift = np.abs(run.covs - P).max() / T
    print(f"\n[8] root error {err:.2e}, covariance drift {drift:.2e} per unit time")
    assert err <= 1e-8
    assert drift <= 1e-6


@pytest.mark.criterion(9, "geodesic shooting, shared mean")
def test_geodesic_shooting():
    P1 = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 0.6]])
    P2 = np.array([[0.8, -0.1, 0.2], [-0.1, 1.7, 0.0], [0.2, 0.0, 1.2]])
    mu = np.array([0.5, -1.0, 0.0])
    path = fg.gauss_geodesic_shoot(GaussianState(mu, P1), GaussianState(mu, P2), steps=64)
    closed = fg.fr_distance_gauss_cov(P1, P2)
    R, Ri = mf.spd_pow(P1, 0.5), mf.spd_pow(P1, -0.5)
    dev = max(np.linalg.norm(P - R @ mf.spd_pow(Ri @ P2 @ Ri, t) @ R) for t, P in zip(path.times, path.covs))
    print(f"\n[9] length {path.length:.8f} vs {closed:.8f}, path deviation {dev:.2e}")
    assert abs(path.length - closed) <= 1e-4
    assert dev <= 1e-4


@pytest.mark.criterion(10, "Fisher information by quadrature")
def test_fisher_information():
    fam = fg.gaussian_family_1d()
    I = fg.fisher_info_matrix(fam, [0.0, 1.0])
    H = fg.fisher_info_hessian(fam, [0.0, 1.0])
    err = np.abs(I - np.diag([1.0, 2.0])).max()
    gap = np.abs(I - H).max()
    print(f"\n[10] |I - diag(1,2)| = {err:.2e}, score vs Hessian {gap:.2e}")
    assert err <= 1e-6
    assert gap <= 1e-4
