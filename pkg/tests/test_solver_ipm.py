import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from freqclear.solver.cones import (ConeDims, NTScaling, cone_unit, jdiv,
                                    jprod, max_step, min_eig)
from freqclear.solver.ipm import (STATUS_DINFEAS, STATUS_OPTIMAL,
                                  STATUS_PINFEAS, solve_conelp)


def test_nt_scaling_properties():
    rng = np.random.default_rng(0)
    dims = ConeDims(l=4, q=(3, 5))
    for _ in range(25):
        s = rng.uniform(0.1, 3.0, dims.size)
        z = rng.uniform(0.1, 3.0, dims.size)
        for a, b in dims.blocks():
            s[a] = np.linalg.norm(s[a + 1:b]) + rng.uniform(0.05, 2.0)
            z[a] = np.linalg.norm(z[a + 1:b]) + rng.uniform(0.05, 2.0)
        w = NTScaling(s, z, dims)
        lam = w.lam
        assert np.allclose(w.mult_w(z), w.mult_winv(s), atol=1e-10)
        assert min_eig(lam, dims) > 0
        u = rng.normal(size=dims.size)
        assert np.allclose(w.mult_winv(w.mult_w(u)), u, atol=1e-10)
        # jdiv inverts the Jordan product
        v = rng.normal(size=dims.size)
        assert np.allclose(jprod(lam, jdiv(lam, v, dims), dims), v, atol=1e-9)


def test_max_step_against_bisection():
    rng = np.random.default_rng(1)
    dims = ConeDims(l=3, q=(4,))
    for _ in range(50):
        u = rng.uniform(0.1, 2.0, dims.size)
        for a, b in dims.blocks():
            u[a] = np.linalg.norm(u[a + 1:b]) + rng.uniform(0.05, 1.0)
        du = rng.normal(size=dims.size)
        alpha = max_step(u, du, dims)
        if math.isinf(alpha):
            assert min_eig(u + 1000.0 * du, dims) >= -1e-9
        else:
            assert min_eig(u + 0.999 * alpha * du, dims) >= -1e-9
            assert min_eig(u + 1.01 * alpha * du, dims) <= 1e-9


def _random_lp(rng, n=8, m=14, p=3):
    # bounded feasible LP with known interior structure
    x0 = rng.uniform(0.5, 1.5, n)
    G = rng.normal(size=(m, n))
    h = G @ x0 + rng.uniform(0.2, 2.0, m)
    A = rng.normal(size=(p, n))
    b = A @ x0
    c = rng.normal(size=n)
    # box to keep it bounded
    G = np.vstack([G, np.eye(n), -np.eye(n)])
    h = np.concatenate([h, np.full(n, 10.0), np.full(n, 10.0)])
    return c, G, h, A, b


def test_random_lps_match_scipy():
    rng = np.random.default_rng(7)
    for k in range(12):
        c, G, h, A, b = _random_lp(rng)
        dims = ConeDims(l=len(h))
        res = solve_conelp(c, sp.csr_matrix(G), h, dims,
                           sp.csr_matrix(A), b)
        ref = linprog(c, A_ub=G, b_ub=h, A_eq=A, b_eq=b,
                      bounds=[(None, None)] * len(c), method="highs")
        assert res.status == STATUS_OPTIMAL, (k, res.status)
        assert ref.status == 0
        assert res.pcost == pytest.approx(ref.fun, rel=1e-6, abs=1e-6)
        # dual feasibility and complementarity of the returned pair
        assert min_eig(res.z, dims) >= -1e-9
        assert abs(res.s @ res.z) <= 1e-5 * max(1.0, abs(res.pcost))


def test_lp_equality_duals_match_scipy():
    rng = np.random.default_rng(3)
    c, G, h, A, b = _random_lp(rng, n=6, m=10, p=2)
    dims = ConeDims(l=len(h))
    res = solve_conelp(c, sp.csr_matrix(G), h, dims, sp.csr_matrix(A), b)
    ref = linprog(c, A_ub=G, b_ub=h, A_eq=A, b_eq=b,
                  bounds=[(None, None)] * len(c), method="highs")
    assert res.status == STATUS_OPTIMAL
    assert np.allclose(res.y, -np.asarray(ref.eqlin.marginals),
                       atol=1e-5)


def test_simple_socp_projection():
    # min ||x - p|| via epigraph: min t s.t. (t, x - p) in SOC, x >= 0
    # projection of p onto the nonnegative orthant
    p = np.array([-1.0, 2.0, -3.0])
    n = 4  # t, x1..x3
    c = np.array([1.0, 0, 0, 0])
    # LP rows: -x <= 0 ; SOC rows: s = (t, x - p)
    G_lp = np.zeros((3, n))
    G_lp[:, 1:] = -np.eye(3)
    h_lp = np.zeros(3)
    G_soc = np.zeros((4, n))
    G_soc[0, 0] = -1.0
    G_soc[1:, 1:] = -np.eye(3)
    h_soc = np.concatenate([[0.0], -p])
    G = np.vstack([G_lp, G_soc])
    h = np.concatenate([h_lp, h_soc])
    res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=3, q=(4,)))
    assert res.status == STATUS_OPTIMAL
    x_star = np.maximum(p, 0.0)
    assert res.pcost == pytest.approx(np.linalg.norm(x_star - p), abs=1e-7)
    # the argmin is flat to first order along x2, so only sqrt(gap) accuracy
    assert np.allclose(res.x[1:], x_star, atol=1e-4)


def test_rotated_cone_geometric_mean():
    # max sqrt(x1*x2) with x1 + x2 = 2 -> x1 = x2 = 1
    # rotated cone x1*x2 >= x3^2 encoded as ||(x1 - x2, 2 x3)|| <= x1 + x2
    c = np.array([0.0, 0.0, -1.0])
    A = np.array([[1.0, 1.0, 0.0]])
    b = np.array([2.0])
    G = np.array([
        [-1.0, 1.0, 0.0],
        [0.0, 0.0, -2.0],
    ])
    G = np.vstack([np.array([[-1.0, -1.0, 0.0]]), G])
    h = np.zeros(3)
    res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=0, q=(3,)),
                       sp.csr_matrix(A), b)
    assert res.status == STATUS_OPTIMAL
    assert res.x[2] == pytest.approx(1.0, abs=1e-7)
    assert res.x[0] == pytest.approx(1.0, abs=1e-6)


def test_primal_infeasible_certified():
    # x >= 1 and x <= 0
    c = np.array([1.0])
    G = np.array([[-1.0], [1.0]])
    h = np.array([-1.0, 0.0])
    res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=2))
    assert res.status == STATUS_PINFEAS
    z = res.z
    assert z is not None and min(z) >= -1e-9
    # Farkas: z'G = 0, z'h < 0
    assert abs(z @ G[:, 0]) <= 1e-6
    assert z @ h < 0


def test_dual_infeasible_certified():
    # min -x with x >= 0 only: unbounded below
    c = np.array([-1.0])
    G = np.array([[-1.0]])
    h = np.array([0.0])
    res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=1))
    assert res.status == STATUS_DINFEAS
    ray = res.certificate
    assert ray is not None and c @ ray < 0


def test_weak_duality_every_solve():
    rng = np.random.default_rng(21)
    for _ in range(6):
        c, G, h, A, b = _random_lp(rng, n=5, m=9, p=2)
        res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=len(h)),
                           sp.csr_matrix(A), b)
        assert res.status == STATUS_OPTIMAL
        assert res.dcost <= res.pcost + 1e-6 * max(1.0, abs(res.pcost))


def test_empty_objective_returns_feasible_point():
    c = np.zeros(2)
    G = -np.eye(2)
    h = np.zeros(2)
    A = np.array([[1.0, 1.0]])
    b = np.array([1.0])
    res = solve_conelp(c, sp.csr_matrix(G), h, ConeDims(l=2),
                       sp.csr_matrix(A), b)
    assert res.status == STATUS_OPTIMAL
    assert res.pcost == pytest.approx(0.0, abs=1e-9)
    assert res.x.sum() == pytest.approx(1.0, abs=1e-7)
    assert min(res.x) >= -1e-8
