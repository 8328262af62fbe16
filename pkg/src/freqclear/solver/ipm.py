"""Primal-dual interior-point solver for mixed LP/SOC cone programs.

Solves the homogeneous self-dual embedding of

    min c'x   s.t.  A x = b,   G x + s = h,   s in K,

with K a product of a nonnegative orthant and second-order cones, using
Nesterov-Todd scaling and a Mehrotra predictor-corrector step.  Infeasible
and unbounded problems are certified through the embedding (tau -> 0).

The KKT systems are solved from a quasi-definite augmented factorization
(dense LAPACK below a size threshold, SuperLU above) with one pass of
iterative refinement, which is enough for the ~1e-8 feasibility targets
at this problem scale.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import lu_factor, lu_solve

from .cones import ConeDims, NTScaling, cone_unit, jdiv, jprod, max_step, min_eig

STATUS_OPTIMAL = "optimal"
STATUS_PINFEAS = "infeasible"
STATUS_DINFEAS = "unbounded"
STATUS_MAXITER = "max_iters"
STATUS_STALLED = "stalled"

_DENSE_LIMIT = 500  # total KKT dimension below which dense LAPACK is used


@dataclass
class ConelpResult:
    status: str
    x: np.ndarray = None
    y: np.ndarray = None
    z: np.ndarray = None
    s: np.ndarray = None
    pcost: float = math.nan
    dcost: float = math.nan
    gap: float = math.nan
    relgap: float = math.nan
    pres: float = math.nan
    dres: float = math.nan
    iterations: int = 0
    certificate: np.ndarray = None  # Farkas-type ray (y, z) or (x, s)
    log: list = field(default_factory=list)


class NumericalBreakdown(RuntimeError):
    pass


class _KKT:
    """Factorization of [[dI, A', G'], [A, -dI, 0], [G, 0, -(W^2+dI)]]."""

    def __init__(self, A, G, dims, sparse, reg=1e-10):
        self.A, self.G, self.dims, self.sparse = A, G, dims, sparse
        self.n = G.shape[1]
        self.p = A.shape[0]
        self.m = G.shape[0]
        self.reg = reg

    def factor(self, scaling: NTScaling):
        n, p, m = self.n, self.p, self.m
        diag, blocks = scaling.w_squared_blocks()
        if not (np.all(np.isfinite(diag))
                and all(np.all(np.isfinite(Q)) for _, _, Q in blocks)):
            raise NumericalBreakdown("nonfinite scaling")
        self._wsq = (diag, blocks)
        # regularization proportional to each block's magnitude keeps the
        # factorization stable when the scaling degenerates
        zreg = np.full(m, self.reg)
        zreg[:len(diag)] += 1e-12 * diag
        for a, b, Q in blocks:
            zreg[a:b] += 1e-12 * np.abs(Q).max()
        if self.sparse:
            wsq = sp.lil_matrix((m, m))
            wsq.setdiag(np.concatenate([diag, np.zeros(m - len(diag))])
                        + zreg)
            for a, b, Q in blocks:
                wsq[a:b, a:b] = Q + np.diag(zreg[a:b])
            K = sp.bmat([
                [sp.eye(n) * self.reg, self.A.T, self.G.T],
                [self.A, -sp.eye(p) * self.reg if p else None, None],
                [self.G, None, -wsq.tocsc()],
            ], format="csc")
            try:
                self._lu = spla.splu(K, permc_spec="COLAMD")
            except RuntimeError as exc:
                raise NumericalBreakdown(str(exc))
            self._solve_raw = self._lu.solve
        else:
            K = np.zeros((n + p + m, n + p + m))
            K[:n, :n] = np.eye(n) * self.reg
            if p:
                K[:n, n:n + p] = self.A.T.toarray() if sp.issparse(self.A) else self.A.T
                K[n:n + p, :n] = K[:n, n:n + p].T
                K[n:n + p, n:n + p] = -np.eye(p) * self.reg
            Gd = self.G.toarray() if sp.issparse(self.G) else self.G
            K[:n, n + p:] = Gd.T
            K[n + p:, :n] = Gd
            W2 = np.zeros((m, m))
            W2[np.arange(len(diag)), np.arange(len(diag))] = diag
            for a, b, Q in blocks:
                W2[a:b, a:b] = Q
            K[n + p:, n + p:] = -(W2 + np.diag(zreg))
            with np.errstate(all="ignore"):
                self._lu = lu_factor(K, check_finite=False)
            self._solve_raw = lambda r: lu_solve(self._lu, r,
                                                 check_finite=False)

    def _apply_exact(self, u):
        """Unregularized KKT operator, for iterative refinement."""
        n, p, m = self.n, self.p, self.m
        x, y, z = u[:n], u[n:n + p], u[n + p:]
        diag, blocks = self._wsq
        wz = np.zeros(m)
        wz[:len(diag)] = diag * z[:len(diag)]
        for a, b, Q in blocks:
            wz[a:b] = Q @ z[a:b]
        top = self.A.T @ y + self.G.T @ z
        mid = self.A @ x
        bot = self.G @ x - wz
        return np.concatenate([top, mid, bot])

    def solve(self, bx, by, bz):
        rhs = np.concatenate([bx, by, bz])
        with np.errstate(all="ignore"):
            u = self._solve_raw(rhs)
            if not np.all(np.isfinite(u)):
                raise NumericalBreakdown("singular KKT system")
            # one refinement pass against the unregularized operator
            r = rhs - self._apply_exact(u)
            if np.linalg.norm(r) > 1e-14 * max(1.0, np.linalg.norm(rhs)):
                u = u + self._solve_raw(r)
        if not np.all(np.isfinite(u)):
            raise NumericalBreakdown("nonfinite KKT solution")
        n, p = self.n, self.p
        return u[:n], u[n:n + p], u[n + p:]


def solve_conelp(c, G, h, dims: ConeDims, A=None, b=None, *,
                 feastol=1e-8, abstol=1e-8, reltol=1e-9, max_iters=100,
                 verbose=False) -> ConelpResult:
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    n, m = len(c), len(h)
    if A is None:
        A = sp.csr_matrix((0, n))
        b = np.zeros(0)
    b = np.asarray(b, dtype=float)
    p = A.shape[0]
    if sp.issparse(G):
        G = G.tocsr()
    if sp.issparse(A):
        A = A.tocsr()
    sparse = (n + p + m) > _DENSE_LIMIT
    kkt = _KKT(A, G, dims, sparse)

    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, np.linalg.norm(h))
    e = cone_unit(dims)
    deg = dims.degree

    # ---- initial point (least-norm primal/dual shifted into the cone) ----
    kkt.factor(NTScaling.identity(dims))
    x, _, zt = kkt.solve(np.zeros(n), b, h)
    s = -zt
    step = -min_eig(s, dims)
    if step >= -1e-8 * max(1.0, np.linalg.norm(s)):
        s = s + (1.0 + step) * e
    xt, y, z = kkt.solve(-c, np.zeros(p), np.zeros(m))
    step = -min_eig(z, dims)
    if step >= -1e-8 * max(1.0, np.linalg.norm(z)):
        z = z + (1.0 + step) * e
    tau, kappa = 1.0, 1.0

    log = []
    best = None
    small_steps = 0

    for it in range(max_iters):
        # residuals of the homogeneous embedding
        rx = kkt.A.T @ y + kkt.G.T @ z + c * tau          # want 0
        ry = A @ x - b * tau
        rz = G @ x + s - h * tau
        cx, by_, hz = c @ x, b @ y, h @ z
        rtau = kappa + cx + by_ + hz

        gap = s @ z
        mu = (gap + tau * kappa) / (deg + 1)

        pcost = cx / tau
        dcost = -(by_ + hz) / tau
        pres = max(np.linalg.norm(ry) / resy0, np.linalg.norm(rz) / resz0) / tau
        dres = np.linalg.norm(rx) / resx0 / tau
        agap = gap / (tau * tau)
        relgap = agap / max(1.0, abs(pcost))
        log.append((it, pcost, dcost, pres, dres, agap))
        if verbose:
            print(f"it {it:3d} pcost {pcost:+.6e} dcost {dcost:+.6e} "
                  f"pres {pres:.2e} dres {dres:.2e} gap {agap:.2e}",
                  file=sys.stderr)

        if pres <= feastol and dres <= feastol and (
                agap <= abstol or relgap <= reltol):
            return ConelpResult(STATUS_OPTIMAL, x / tau, y / tau, z / tau,
                                s / tau, pcost, dcost, agap, relgap,
                                pres, dres, it, log=log)
        # infeasibility certificates
        if hz + by_ < 0:
            denom = -(hz + by_)
            cert_res = np.linalg.norm(kkt.A.T @ y + kkt.G.T @ z) / resx0
            if cert_res / denom <= feastol * 1e1 and min_eig(z, dims) >= -1e-9:
                yy, zz = y / denom, z / denom
                return ConelpResult(STATUS_PINFEAS, None, yy, zz, None,
                                    math.nan, math.nan, math.nan, math.nan,
                                    pres, dres, it,
                                    certificate=np.concatenate([yy, zz]),
                                    log=log)
        if cx < 0:
            denom = -cx
            cert_res = max(np.linalg.norm(A @ x) / resy0,
                           np.linalg.norm(G @ x + s) / resz0)
            if cert_res / denom <= feastol * 1e1 and min_eig(s, dims) >= -1e-9:
                return ConelpResult(STATUS_DINFEAS, x / denom, None, None,
                                    s / denom, math.nan, math.nan, math.nan,
                                    math.nan, pres, dres, it,
                                    certificate=x / denom, log=log)

        best = (x, y, z, s, tau, pcost, dcost, pres, dres, agap, relgap)

        try:
            with np.errstate(all="ignore"):
                scaling = NTScaling(s, z, dims)
            lam = scaling.lam
            if not np.all(np.isfinite(lam)):
                raise NumericalBreakdown("degenerate scaling point")
            kkt.factor(scaling)
            x1, y1, z1 = kkt.solve(-c, b, h)
        except (NumericalBreakdown, ValueError):
            break
        denom_tau = (c @ x1 + b @ y1 + h @ z1) - kappa / tau

        def direction(bx, by, bz, btau, bs, bkappa):
            g = jdiv(lam, bs, dims)
            wg = scaling.mult_w(g)
            ux0, uy0, uz0 = kkt.solve(bx, by, bz - wg)
            dtau = (btau - bkappa / tau
                    - (c @ ux0 + b @ uy0 + h @ uz0)) / denom_tau
            dx = ux0 + dtau * x1
            dy = uy0 + dtau * y1
            dz = uz0 + dtau * z1
            ds = wg - scaling.mult_w(scaling.mult_w(dz))
            dkappa = (bkappa - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        def length(ds, dz, dtau, dkappa):
            alpha = min(max_step(s, ds, dims), max_step(z, dz, dims))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return min(1.0, 0.99 * alpha)

        # affine (predictor) direction
        try:
            lam_lam = jprod(lam, lam, dims)
            aff = direction(-rx, -ry, -rz, -rtau, -lam_lam, -tau * kappa)
            alpha_aff = length(aff[3], aff[2], aff[4], aff[5])
            sigma = (1.0 - alpha_aff) ** 3

            # combined (corrector) direction
            corr = jprod(scaling.mult_winv(aff[3]), scaling.mult_w(aff[2]),
                         dims)
            bs = -lam_lam - corr + sigma * mu * e
            bkappa = -tau * kappa - aff[4] * aff[5] + sigma * mu
            f = 1.0 - sigma
            dx, dy, dz, ds, dtau, dkappa = direction(
                -f * rx, -f * ry, -f * rz, -f * rtau, bs, bkappa)
        except NumericalBreakdown:
            break
        alpha = length(ds, dz, dtau, dkappa)
        if not math.isfinite(alpha):
            alpha = 1.0

        if alpha < 1e-8:
            small_steps += 1
            if small_steps >= 3:
                break
        else:
            small_steps = 0
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa
        if tau <= 0 or kappa < 0:
            break

    status = STATUS_MAXITER if small_steps < 3 else STATUS_STALLED
    if best is None:
        return ConelpResult(status, log=log)
    x, y, z, s, tau, pcost, dcost, pres, dres, agap, relgap = best
    # accept near-optimal iterates at a relaxed tolerance
    if pres <= feastol * 100 and dres <= feastol * 100 and relgap <= 1e-6:
        status = STATUS_OPTIMAL
    return ConelpResult(status, x / tau, y / tau, z / tau, s / tau,
                        pcost, dcost, agap, relgap, pres, dres,
                        len(log), log=log)
