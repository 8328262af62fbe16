"""Cone algebra for the mixed nonnegative/second-order-cone solver.

Vectors live in K = R+^l x SOC(q_1) x ... x SOC(q_k), concatenated.  The
Nesterov-Todd scaling W is symmetric, maps K onto itself, and satisfies
W z = W^{-1} s = lambda for interior (s, z); on the nonnegative part it is
diagonal, on each SOC block it is eta * Q_wbar^{1/2} with wbar the unit
scaling point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConeDims:
    l: int
    q: tuple = ()

    @property
    def size(self) -> int:
        return self.l + sum(self.q)

    @property
    def degree(self) -> int:
        return self.l + len(self.q)

    def blocks(self):
        """Yield (start, stop) of each SOC block."""
        p = self.l
        for n in self.q:
            yield p, p + n
            p += n


def cone_unit(dims: ConeDims) -> np.ndarray:
    e = np.zeros(dims.size)
    e[:dims.l] = 1.0
    for a, _ in dims.blocks():
        e[a] = 1.0
    return e


def min_eig(u: np.ndarray, dims: ConeDims) -> float:
    """Smallest spectral value; positive iff u is interior."""
    vals = list(u[:dims.l])
    for a, b in dims.blocks():
        vals.append(u[a] - np.linalg.norm(u[a + 1:b]))
    return min(vals) if vals else math.inf


def jprod(u, v, dims: ConeDims) -> np.ndarray:
    out = np.empty(dims.size)
    out[:dims.l] = u[:dims.l] * v[:dims.l]
    for a, b in dims.blocks():
        out[a] = u[a:b] @ v[a:b]
        out[a + 1:b] = u[a] * v[a + 1:b] + v[a] * u[a + 1:b]
    return out


def jdiv(lam, v, dims: ConeDims) -> np.ndarray:
    """Solve lam o w = v for w (lam interior)."""
    out = np.empty(dims.size)
    out[:dims.l] = v[:dims.l] / lam[:dims.l]
    for a, b in dims.blocks():
        l0, l1 = lam[a], lam[a + 1:b]
        v0, v1 = v[a], v[a + 1:b]
        det = l0 * l0 - l1 @ l1
        w0 = (l0 * v0 - l1 @ v1) / det
        out[a] = w0
        out[a + 1:b] = (v1 - w0 * l1) / l0
    return out


def max_step(u, du, dims: ConeDims) -> float:
    """sup { alpha >= 0 : u + alpha*du in K } for interior u (may be inf)."""
    alpha = math.inf
    l = dims.l
    neg = du[:l] < 0
    if np.any(neg):
        alpha = float(np.min(-u[:l][neg] / du[:l][neg]))
    for a, b in dims.blocks():
        u0, u1 = u[a], u[a + 1:b]
        d0, d1 = du[a], du[a + 1:b]
        # boundary of (u + t du): quadratic  c2 t^2 + 2 c1 t + c0 = 0 in the
        # Lorentz form, intersected with u0 + t d0 >= 0
        c0 = u0 * u0 - u1 @ u1
        c1 = u0 * d0 - u1 @ d1
        c2 = d0 * d0 - d1 @ d1
        cand = []
        if abs(c2) < 1e-300:
            if c1 < 0:
                cand.append(-c0 / (2 * c1))
        else:
            disc = c1 * c1 - c0 * c2
            if disc >= 0:
                r = math.sqrt(disc)
                for t in ((-c1 - r) / c2, (-c1 + r) / c2):
                    if t > 0:
                        cand.append(t)
        if d0 < 0:
            cand.append(-u0 / d0)
        feas = [t for t in cand
                if t > 0 and u0 + t * d0 >= -1e-14 * max(1.0, abs(u0))]
        if feas:
            alpha = min(alpha, min(feas))
    return alpha


class NTScaling:
    """Nesterov-Todd scaling of an interior pair (s, z)."""

    def __init__(self, s, z, dims: ConeDims):
        self.dims = dims
        l = dims.l
        self.w_lp = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.socs = []
        for a, b in dims.blocks():
            sb, zb = s[a:b], z[a:b]
            ja = sb[0] ** 2 - sb[1:] @ sb[1:]
            jb = zb[0] ** 2 - zb[1:] @ zb[1:]
            if ja <= 0 or jb <= 0:
                raise ValueError("scaling pair left the cone interior")
            anrm = math.sqrt(ja)
            bnrm = math.sqrt(jb)
            sn, zn = sb / anrm, zb / bnrm
            gamma = math.sqrt((1.0 + sn @ zn) / 2.0)
            w = sn.copy()
            w[0] += zn[0]
            w[1:] -= zn[1:]
            w /= 2.0 * gamma
            self.socs.append((math.sqrt(anrm / bnrm), w, a, b))
        self.lam = self.mult_w(z)

    @classmethod
    def identity(cls, dims: ConeDims):
        obj = cls.__new__(cls)
        obj.dims = dims
        obj.w_lp = np.ones(dims.l)
        obj.socs = []
        for a, b in dims.blocks():
            w = np.zeros(b - a)
            w[0] = 1.0
            obj.socs.append((1.0, w, a, b))
        obj.lam = None
        return obj

    def _soc_apply(self, eta, w, u, inverse):
        # V u with V = [[w0, w1'], [w1, I + w1 w1'/(1+w0)]]; V^{-1} = J V J
        w0, w1 = w[0], w[1:]
        u0, u1 = u[0], u[1:]
        if inverse:
            u1 = -u1
        r0 = w0 * u0 + w1 @ u1
        r1 = u0 * w1 + u1 + (w1 @ u1) / (1.0 + w0) * w1
        if inverse:
            r1 = -r1
            return np.concatenate([[r0], r1]) / eta
        return eta * np.concatenate([[r0], r1])

    def mult_w(self, u):
        out = np.empty(self.dims.size)
        out[:self.dims.l] = self.w_lp * u[:self.dims.l]
        for eta, w, a, b in self.socs:
            out[a:b] = self._soc_apply(eta, w, u[a:b], inverse=False)
        return out

    def mult_winv(self, u):
        out = np.empty(self.dims.size)
        out[:self.dims.l] = u[:self.dims.l] / self.w_lp
        for eta, w, a, b in self.socs:
            out[a:b] = self._soc_apply(eta, w, u[a:b], inverse=True)
        return out

    def w_squared_blocks(self):
        """Dense W^2 blocks: (lp diagonal, [(a, b, 2x2.. dense block)])."""
        diag = self.w_lp ** 2
        blocks = []
        for eta, w, a, b in self.socs:
            n = b - a
            J = -np.eye(n)
            J[0, 0] = 1.0
            Q = 2.0 * np.outer(w, w) - J
            blocks.append((a, b, eta * eta * Q))
        return diag, blocks
