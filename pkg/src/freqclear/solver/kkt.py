"""Independent KKT residual verification.

Recomputes stationarity, feasibility and complementary slackness directly
from the program rows and the reported duals, without touching any solver
bookkeeping.  Used both as the post-solve self-check and as a test oracle.
"""

from __future__ import annotations

import math

import numpy as np

from ..conic_program import ConicProgram


def _soc_values(blk, x):
    s0 = blk.c_const + sum(v * x[j] for j, v in blk.c_row.items())
    s1 = blk.a_consts[0] + sum(v * x[j] for j, v in blk.a_rows[0].items())
    s2 = blk.a_consts[1] + sum(v * x[j] for j, v in blk.a_rows[1].items())
    return s0, s1, s2


def residual_report(program: ConicProgram, solution, scale=None) -> dict:
    """Max-norm residuals: primal_feas, dual_feas, complementarity, stationarity.

    All residuals are reported relative to the natural scale of the data
    (1 + max |coefficient| per row / objective column).
    """
    x = solution.primal
    zlo, zhi = solution.bound_duals
    n = len(program.vars)
    grad = np.array([program.objective.get(j, 0.0) for j in range(n)])
    primal = 0.0
    comp = 0.0
    dual = 0.0

    for row in program.linear_rows:
        val = sum(v * x[j] for j, v in row.coeffs.items())
        lam = solution.duals.get(row.handle)
        sc = 1.0 + max(abs(row.rhs), max(abs(v) for v in row.coeffs.values()))
        if row.sense == "==":
            primal = max(primal, abs(val - row.rhs) / sc)
            for j, v in row.coeffs.items():
                grad[j] += -lam * v  # reported eq dual is d(obj)/d(rhs) = -y
        elif row.sense == "<=":
            viol = val - row.rhs
            primal = max(primal, max(0.0, viol) / sc)
            comp = max(comp, abs(lam * viol) / sc / (1.0 + abs(lam)))
            dual = min(dual, lam)
            for j, v in row.coeffs.items():
                grad[j] += lam * v
        else:  # ">="
            viol = row.rhs - val
            primal = max(primal, max(0.0, viol) / sc)
            comp = max(comp, abs(lam * viol) / sc / (1.0 + abs(lam)))
            dual = min(dual, lam)
            for j, v in row.coeffs.items():
                grad[j] -= lam * v

    for blk in program.soc_blocks:
        mu, l1, l2 = solution.duals[blk.handle]
        s0, s1, s2 = _soc_values(blk, x)
        sc = 1.0 + abs(s0)
        primal = max(primal, (math.hypot(s1, s2) - s0) / sc)
        dual = min(dual, mu - math.hypot(l1, l2))
        comp = max(comp, abs(mu * s0 - l1 * s1 - l2 * s2) / sc / (1.0 + abs(mu)))
        for j, v in blk.c_row.items():
            grad[j] -= mu * v
        for j, v in blk.a_rows[0].items():
            grad[j] += l1 * v
        for j, v in blk.a_rows[1].items():
            grad[j] += l2 * v

    for v in program.vars:
        j = v.index
        if math.isfinite(v.lo):
            primal = max(primal, (v.lo - x[j]) / (1.0 + abs(v.lo)))
            comp = max(comp, abs(zlo[j] * (x[j] - v.lo))
                       / (1.0 + abs(v.lo)) / (1.0 + abs(zlo[j])))
            dual = min(dual, zlo[j])
            grad[j] -= zlo[j]
        if math.isfinite(v.hi):
            primal = max(primal, (x[j] - v.hi) / (1.0 + abs(v.hi)))
            comp = max(comp, abs(zhi[j] * (v.hi - x[j]))
                       / (1.0 + abs(v.hi)) / (1.0 + abs(zhi[j])))
            dual = min(dual, zhi[j])
            grad[j] += zhi[j]

    obj_scale = 1.0 + max(abs(grad).max() if n else 0.0,
                          max((abs(v) for v in program.objective.values()),
                              default=0.0))
    stationarity = float(np.abs(grad).max() / obj_scale) if n else 0.0
    return {
        "primal_feas": float(primal),
        "dual_feas": float(max(0.0, -dual)),
        "complementarity": float(comp),
        "stationarity": stationarity,
    }


def verify_kkt(program: ConicProgram, solution, tol=1e-6) -> dict:
    """Residual report plus a boolean verdict at the given tolerance."""
    rep = residual_report(program, solution)
    rep["ok"] = all(rep[k] <= tol for k in
                    ("primal_feas", "dual_feas", "complementarity",
                     "stationarity"))
    return rep
