"""ConicProgram <-> solver standard form, and the Solution type.

Dual orientation in `Solution.duals`:

* equality rows: reported dual = d(objective)/d(rhs) (sign-free),
* `<=` and `>=` rows: the nonnegative multiplier of the row,
* SOC blocks: the triple (mu, lambda1, lambda2) of the standard-form cone,
  satisfying ||(lambda1, lambda2)|| <= mu,
* variable bounds: nonnegative multipliers in `bound_duals` (lo, hi).

Problem data is equilibrated (Ruiz passes; SOC block rows share one scale)
before the interior-point solve and every reported quantity is mapped back
to the original units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..conic_program import BINARY, ConicProgram
from .cones import ConeDims
from .ipm import (STATUS_DINFEAS, STATUS_OPTIMAL, STATUS_PINFEAS,
                  ConelpResult, solve_conelp)


@dataclass
class Solution:
    status: str
    objective: float
    primal: np.ndarray
    duals: dict
    bound_duals: tuple
    kkt_residuals: dict
    solver_info: dict = field(default_factory=dict)
    bnb_stats: dict | None = None
    program: ConicProgram | None = None

    def value(self, role, owner=None, period=0) -> float:
        return float(self.primal[self.program.var(role, owner, period).index])

    def committed_units(self, period=0, tol=1e-6):
        out = []
        for g_id in self.program.meta["unit_ids"]:
            if self.program.has_var("y_g", g_id, period):
                if self.value("y_g", g_id, period) > 1.0 - tol:
                    out.append(g_id)
            else:  # must-run
                out.append(g_id)
        return out

    def commitment(self, unit_id, period=0) -> float:
        if self.program.has_var("y_g", unit_id, period):
            return self.value("y_g", unit_id, period)
        return 1.0


@dataclass
class StandardForm:
    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    dims: ConeDims
    eq_rows: list          # program row positions in A order
    ineq_rows: list        # (program row position, sign) in G order
    bound_rows: list       # (var index, "lo"/"hi") in G order after ineqs
    soc_order: list        # soc block positions
    row_scale_A: np.ndarray
    row_scale_G: np.ndarray
    col_scale: np.ndarray
    cost_scale: float


def to_standard_form(program: ConicProgram, equilibrate=True) -> StandardForm:
    n = len(program.vars)
    c = np.zeros(n)
    for j, v in program.objective.items():
        c[j] = v

    a_rows, b_vec, eq_rows = [], [], []
    g_rows, h_vec, ineq_rows = [], [], []
    for pos, row in enumerate(program.linear_rows):
        if row.sense == "==":
            a_rows.append(row.coeffs)
            b_vec.append(row.rhs)
            eq_rows.append(pos)
        elif row.sense == "<=":
            g_rows.append(row.coeffs)
            h_vec.append(row.rhs)
            ineq_rows.append((pos, +1.0))
        elif row.sense == ">=":
            g_rows.append({j: -v for j, v in row.coeffs.items()})
            h_vec.append(-row.rhs)
            ineq_rows.append((pos, -1.0))
        else:
            raise ValueError(f"unknown sense {row.sense!r}")

    bound_rows = []
    for v in program.vars:
        if math.isfinite(v.lo):
            g_rows.append({v.index: -1.0})
            h_vec.append(-v.lo)
            bound_rows.append((v.index, "lo"))
        if math.isfinite(v.hi):
            g_rows.append({v.index: 1.0})
            h_vec.append(v.hi)
            bound_rows.append((v.index, "hi"))

    n_lp = len(g_rows)
    soc_order = []
    for k, blk in enumerate(program.soc_blocks):
        g_rows.append({j: -v for j, v in blk.c_row.items()})
        h_vec.append(blk.c_const)
        for arow, d in zip(blk.a_rows, blk.a_consts):
            g_rows.append({j: -v for j, v in arow.items()})
            h_vec.append(d)
        soc_order.append(k)

    def to_csr(rows, ncols):
        data, indices, indptr = [], [], [0]
        for r in rows:
            for j, v in sorted(r.items()):
                indices.append(j)
                data.append(v)
            indptr.append(len(data))
        return sp.csr_matrix((data, indices, indptr),
                             shape=(len(rows), ncols))

    A = to_csr(a_rows, n)
    G = to_csr(g_rows, n)
    b = np.array(b_vec, dtype=float)
    h = np.array(h_vec, dtype=float)
    dims = ConeDims(l=n_lp, q=(3,) * len(soc_order))

    rA = np.ones(A.shape[0])
    rG = np.ones(G.shape[0])
    d = np.ones(n)
    if equilibrate:
        for _ in range(3):
            # row sweep (soc blocks share one factor)
            def row_max(M):
                M = M.tocsr()
                out = np.zeros(M.shape[0])
                for i in range(M.shape[0]):
                    sl = M.data[M.indptr[i]:M.indptr[i + 1]]
                    out[i] = np.max(np.abs(sl)) if len(sl) else 1.0
                return np.where(out > 0, out, 1.0)

            mA, mG = row_max(A), row_max(G)
            for k in range(len(soc_order)):
                a0 = n_lp + 3 * k
                m = max(mG[a0:a0 + 3].max(), 1e-300)
                mG[a0:a0 + 3] = m
            sA, sG = 1.0 / np.sqrt(mA), 1.0 / np.sqrt(mG)
            A = sp.diags(sA) @ A
            G = sp.diags(sG) @ G
            rA *= sA
            rG *= sG
            col = np.maximum(np.abs(A).max(axis=0).toarray().ravel()
                             if A.shape[0] else np.zeros(n),
                             np.abs(G).max(axis=0).toarray().ravel())
            col = np.where(col > 0, col, 1.0)
            sc = 1.0 / np.sqrt(col)
            A = A @ sp.diags(sc)
            G = G @ sp.diags(sc)
            d *= sc
        b = rA * b
        h = rG * h

    c_scaled = c * d
    cost_scale = max(1.0, np.abs(c_scaled).max()) if n else 1.0
    c_scaled = c_scaled / cost_scale

    return StandardForm(c=c_scaled, A=A.tocsr(), b=b, G=G.tocsr(), h=h,
                        dims=dims, eq_rows=eq_rows, ineq_rows=ineq_rows,
                        bound_rows=bound_rows, soc_order=soc_order,
                        row_scale_A=rA, row_scale_G=rG, col_scale=d,
                        cost_scale=cost_scale)


def extract_solution(program: ConicProgram, sf: StandardForm,
                     res: ConelpResult, kkt_fn=None) -> Solution:
    from .kkt import residual_report  # local import to avoid a cycle

    status_map = {STATUS_OPTIMAL: "optimal", STATUS_PINFEAS: "infeasible",
                  STATUS_DINFEAS: "unbounded"}
    status = status_map.get(res.status, res.status)
    if status != "optimal":
        return Solution(status=status, objective=math.nan,
                        primal=None, duals={}, bound_duals=(None, None),
                        kkt_residuals={}, program=program,
                        solver_info={"iterations": res.iterations,
                                     "certificate": res.certificate,
                                     "pres": res.pres, "dres": res.dres})

    x = sf.col_scale * res.x
    # snap values sitting a solver-tolerance away from their bounds
    for v in program.vars:
        scale = 1.0 + abs(x[v.index])
        if math.isfinite(v.lo) and abs(x[v.index] - v.lo) <= 1e-7 * scale:
            x[v.index] = v.lo
        elif math.isfinite(v.hi) and abs(x[v.index] - v.hi) <= 1e-7 * scale:
            x[v.index] = v.hi
    y = sf.row_scale_A * res.y[:len(sf.eq_rows)] * sf.cost_scale
    z = sf.row_scale_G * res.z * sf.cost_scale
    s_true = sf.h / sf.row_scale_G - (sp.diags(1.0 / sf.row_scale_G) @ sf.G
                                      @ sp.diags(1.0 / sf.col_scale)) @ x

    duals = {}
    eq_dual = {}
    for k, pos in enumerate(sf.eq_rows):
        eq_dual[pos] = -y[k]
    ineq_dual = {}
    for k, (pos, _sign) in enumerate(sf.ineq_rows):
        ineq_dual[pos] = z[k]
    for handle, (kind, pos) in program.handles.items():
        if kind == "row":
            duals[handle] = eq_dual.get(pos, ineq_dual.get(pos))
        else:
            base = sf.dims.l + 3 * sf.soc_order.index(pos)
            zb = z[base:base + 3]
            duals[handle] = (zb[0], -zb[1], -zb[2])

    n = len(program.vars)
    zlo = np.zeros(n)
    zhi = np.zeros(n)
    off = len(sf.ineq_rows)
    for k, (j, side) in enumerate(sf.bound_rows):
        if side == "lo":
            zlo[j] = z[off + k]
        else:
            zhi[j] = z[off + k]

    objective = float(np.dot([program.objective.get(j, 0.0) for j in range(n)],
                             x)) + program.objective_const

    sol = Solution(status="optimal", objective=objective, primal=x,
                   duals=duals, bound_duals=(zlo, zhi), kkt_residuals={},
                   program=program,
                   solver_info={"iterations": res.iterations,
                                "gap": res.gap, "pres": res.pres,
                                "dres": res.dres,
                                "pcost_scaled": res.pcost})
    sol.kkt_residuals = residual_report(program, sol)
    return sol


def solve_socp(program: ConicProgram, *, feastol=1e-9, abstol=1e-10,
               reltol=1e-11, max_iters=200, verbose=False) -> Solution:
    """Solve a continuous (or binary-relaxed) program to optimality."""
    if any(v.kind == BINARY for v in program.vars):
        raise ValueError("solve_socp requires a program without integrality; "
                         "relax binaries or use solve_misocp")
    bad = [d for d in program.diagnostics if d.severity == "error"]
    if bad:
        raise ValueError("program carries build-time error diagnostics: "
                         + "; ".join(str(d) for d in bad))
    sf = to_standard_form(program)
    res = solve_conelp(sf.c, sf.G, sf.h, sf.dims, sf.A, sf.b,
                       feastol=feastol, abstol=abstol, reltol=reltol,
                       max_iters=max_iters, verbose=verbose)
    return extract_solution(program, sf, res)
