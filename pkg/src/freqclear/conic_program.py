"""Frequency-secured unit-commitment instances as conic programs.

A program is a flat list of variables, linear rows, and rotated-cone blocks
in the standard form ||A x + d|| <= c'x + e, with every frequency constraint
and the load balance reachable through a named handle so dual values can be
pulled out after a solve.

Aggregate quantities are materialized as variables with defining rows:
`H_sync`, `H_synt` (inertia), `R_G` (PFR sum) and `R_EFF` (the EFR volume
credited inside the nadir cone, clipped at the loss size so the cone stays
feasible when EFR exceeds the loss).  The actual EFR sum appears directly in
the q-s-s row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .system_model import (GFL, GFM, RESPONSE_PFR, FleetSpec, Diagnostic)

CONTINUOUS = "continuous"
BINARY = "binary"
BINARY_RELAXED = "binary_relaxed"

# variable roles (structured name tags)
P_G, R_G_ROLE, Y_G, Y_SG, Y_SD, Y_ST = "P_g", "R_g", "y_g", "y_sg", "y_sd", "y_st"
P_CURT, R_I_ROLE, H_I = "P_curt_i", "R_i", "H_i"
AGG_H_SYNC, AGG_H_SYNT, AGG_R_G, AGG_R_EFF = "H_sync", "H_synt", "R_G", "R_EFF"

SERVICE_ROLES = (R_G_ROLE, R_I_ROLE, P_CURT, AGG_R_EFF)


@dataclass(frozen=True)
class VarRef:
    index: int
    kind: str                    # continuous | binary | binary_relaxed
    lo: float
    hi: float
    name: tuple                  # (role, owner id or None, period)

    @property
    def role(self):
        return self.name[0]

    @property
    def owner(self):
        return self.name[1]

    @property
    def period(self):
        return self.name[2]


@dataclass(frozen=True)
class LinearRow:
    coeffs: dict                 # var index -> coefficient
    sense: str                   # "<=" | ">=" | "=="
    rhs: float
    handle: str


@dataclass(frozen=True)
class SocBlock:
    """||A x + d|| <= c'x + e with A given as two coefficient rows."""
    a_rows: tuple                # (dict, dict)
    a_consts: tuple              # (d1, d2)
    c_row: dict
    c_const: float
    handle: str


@dataclass
class ConicProgram:
    vars: list
    objective: dict              # var index -> GBP coefficient
    objective_const: float
    linear_rows: list
    soc_blocks: list
    handles: dict                # name -> ("row"|"soc", position)
    n_periods: int
    meta: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    # -- lookups ------------------------------------------------------------

    def var(self, role, owner=None, period=0) -> VarRef:
        return self.meta["var_index"][(role, owner, period)]

    def has_var(self, role, owner=None, period=0) -> bool:
        return (role, owner, period) in self.meta["var_index"]

    def row(self, handle) -> LinearRow:
        kind, pos = self.handles[handle]
        if kind != "row":
            raise KeyError(f"{handle} is not a linear row")
        return self.linear_rows[pos]

    def soc(self, handle) -> SocBlock:
        kind, pos = self.handles[handle]
        if kind != "soc":
            raise KeyError(f"{handle} is not an SOC block")
        return self.soc_blocks[pos]

    # -- structural counts ----------------------------------------------------

    @property
    def n_binary(self):
        return sum(v.kind == BINARY for v in self.vars)

    @property
    def n_relaxed(self):
        return sum(v.kind == BINARY_RELAXED for v in self.vars)

    @property
    def n_continuous(self):
        return sum(v.kind == CONTINUOUS for v in self.vars)

    def constraint_census(self) -> int:
        """Rows + cone blocks + finite variable-bound sides.

        Bound sides are counted because they are materialized constraints in
        the solved relaxations (binary boxes, sign restrictions, capacities).
        """
        bounds = sum((math.isfinite(v.lo)) + (math.isfinite(v.hi))
                     for v in self.vars)
        return len(self.linear_rows) + len(self.soc_blocks) + bounds

    # -- plain-text dump (documented in docs/formats.md) ----------------------

    def dump_text(self) -> str:
        out = [f"conicprogram format=1 periods={self.n_periods}",
               f"vars {len(self.vars)}"]
        for v in self.vars:
            out.append(f"v {v.index} {v.kind} {v.lo:g} {v.hi:g} "
                       f"{v.role}:{v.owner}:{v.period}")
        obj = " ".join(f"{i}:{c:.12g}" for i, c in sorted(self.objective.items()))
        out.append(f"objective const={self.objective_const:.12g} {obj}")
        out.append(f"rows {len(self.linear_rows)}")
        for r in self.linear_rows:
            terms = " ".join(f"{i}:{c:.12g}" for i, c in sorted(r.coeffs.items()))
            out.append(f"r {r.handle} {r.sense} {r.rhs:.12g} {terms}")
        out.append(f"cones {len(self.soc_blocks)}")
        for b in self.soc_blocks:
            for tag, row, const in (("a1", b.a_rows[0], b.a_consts[0]),
                                    ("a2", b.a_rows[1], b.a_consts[1]),
                                    ("c", b.c_row, b.c_const)):
                terms = " ".join(f"{i}:{c:.12g}" for i, c in sorted(row.items()))
                out.append(f"k {b.handle} {tag} const={const:.12g} {terms}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class BuildOptions:
    relax_binaries: bool = False
    alpha: float | None = None          # forecast-error override, fleet-wide
    hi_optimize: bool = False
    hi_bounds: tuple | None = None      # (h_lo, h_hi) for GFM classes
    fix_commitment: dict | None = None  # unit id -> 0/1 scalar or sequence
    availability: dict | None = None    # resource id -> per-period MW
    security_pad: float = 0.0           # MW pad on the q-s-s and nadir rows


class ProgramBuilder:
    """Single-use builder; `build()` returns an immutable ConicProgram."""

    def __init__(self, fleet: FleetSpec, options: BuildOptions | None = None):
        self.fleet = fleet
        self.options = options or BuildOptions()
        self._alpha_override = self.options.alpha
        self._hi_optimize = self.options.hi_optimize
        self._hi_bounds = self.options.hi_bounds
        self._built = False

    # spec operations -------------------------------------------------------

    def apply_forecast_error(self, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self._alpha_override = alpha
        return self

    def enable_hi_optimization(self, h_lo: float, h_hi: float):
        if not 0.0 <= h_lo <= h_hi:
            raise ValueError("need 0 <= h_lo <= h_hi")
        self._hi_optimize = True
        self._hi_bounds = (h_lo, h_hi)
        return self

    # construction ------------------------------------------------------------

    def build(self) -> ConicProgram:
        if self._built:
            raise RuntimeError("builder is single-use")
        self._built = True
        fleet, opts = self.fleet, self.options
        params = fleet.params
        T = params.n_periods
        multi = T > 1
        if multi and T != 24:
            raise ValueError("multi-period horizon is fixed to 24 periods")

        vars_, var_index = [], {}
        objective, obj_const = {}, 0.0
        rows, socs, handles = [], [], {}
        diagnostics = []

        def add_var(role, owner, period, kind=CONTINUOUS,
                    lo=-math.inf, hi=math.inf, cost=0.0):
            v = VarRef(index=len(vars_), kind=kind, lo=lo, hi=hi,
                       name=(role, owner, period))
            vars_.append(v)
            var_index[(role, owner, period)] = v
            if cost:
                objective[v.index] = objective.get(v.index, 0.0) + cost
            return v

        def add_row(coeffs, sense, rhs, handle):
            handles[handle] = ("row", len(rows))
            rows.append(LinearRow(coeffs=dict(coeffs), sense=sense,
                                  rhs=float(rhs), handle=handle))

        def avail(res, t):
            prof = (opts.availability or {}).get(res.id)
            if prof is None:
                return res.p_avail
            return float(prof[t])

        bin_kind = BINARY_RELAXED if opts.relax_binaries else BINARY
        fixing = opts.fix_commitment or {}

        def fixed_value(unit_id, t):
            v = fixing.get(unit_id)
            if v is None:
                return None
            return float(v[t]) if hasattr(v, "__len__") else float(v)

        gens = fleet.generators
        resources = fleet.inverter_resources

        # feasibility diagnostics at build time
        inertia_cap = (sum(g.inertia_mws for g in gens)
                       + sum(r.h * r.p_avail for r in resources
                             if r.control == GFM))
        if inertia_cap < params.rocof_inertia_floor:
            diagnostics.append(Diagnostic(
                "error", "rocof",
                f"maximum attainable inertia {inertia_cap:.0f} MW*s is below "
                f"the RoCoF floor {params.rocof_inertia_floor:.0f} MW*s"))
        for t in range(T):
            cap = (sum(g.p_max for g in gens)
                   + sum(avail(r, t) for r in resources))
            if cap < params.demand[t]:
                diagnostics.append(Diagnostic(
                    "error", f"demand[{t}]",
                    f"capacity {cap:.0f} MW < demand {params.demand[t]:.0f} MW"))

        # ---- per-period variables and rows -----------------------------------
        for t in range(T):
            for g in gens:
                if g.must_run:
                    add_var(P_G, g.id, t, lo=g.p_msg, hi=g.p_max, cost=g.c_m)
                else:
                    if fixed_value(g.id, t) is None:
                        ylo, yhi = 0.0, 1.0
                    else:
                        # fixing replaces the binary/box constraint entirely;
                        # the commitment equality carries the whole rent
                        ylo, yhi = -math.inf, math.inf
                    y = add_var(Y_G, g.id, t, kind=bin_kind, lo=ylo, hi=yhi,
                                cost=g.c_nl)
                    add_var(P_G, g.id, t, cost=g.c_m)
                if g.must_run:
                    obj_const += g.c_nl
                if g.response_kind == RESPONSE_PFR:
                    add_var(R_G_ROLE, g.id, t, lo=0.0)
            for r in resources:
                gfm_hi_opt = (self._hi_optimize and r.control == GFM)
                if not gfm_hi_opt:
                    add_var(P_CURT, r.id, t, lo=0.0, hi=avail(r, t))
                else:
                    lo, hi = self._hi_bounds or (r.h_lo, r.h_hi)
                    add_var(H_I, r.id, t, lo=lo, hi=hi)
                r_cap = r.r_max if r.control == GFL else 0.0
                if r.control == GFL and avail(r, t) != r.p_avail and r.p_avail > 0:
                    r_cap = r.r_max * avail(r, t) / r.p_avail
                add_var(R_I_ROLE, r.id, t, lo=0.0, hi=r_cap)
            add_var(AGG_H_SYNC, None, t, lo=0.0)
            add_var(AGG_H_SYNT, None, t, lo=0.0)
            add_var(AGG_R_G, None, t, lo=0.0)
            add_var(AGG_R_EFF, None, t, lo=0.0, hi=params.p_loss)

        sqrt_df = math.sqrt(params.delta_f_max)
        for t in range(T):
            hs = var_index[(AGG_H_SYNC, None, t)]
            ht = var_index[(AGG_H_SYNT, None, t)]
            rg = var_index[(AGG_R_G, None, t)]
            re = var_index[(AGG_R_EFF, None, t)]

            # load balance: sum P_g - sum C_i = demand - sum avail
            bal = {}
            rhs = params.demand[t]
            for g in gens:
                bal[var_index[(P_G, g.id, t)].index] = 1.0
            for r in resources:
                rhs -= avail(r, t)
                key = (P_CURT, r.id, t)
                if key in var_index:
                    bal[var_index[key].index] = -1.0
            add_row(bal, "==", rhs, f"load_balance[{t}]")

            # synchronous inertia definition
            hsd = {hs.index: 1.0}
            const = 0.0
            for g in gens:
                if g.inertia_mws == 0.0:
                    continue
                if g.must_run:
                    const += g.inertia_mws
                else:
                    hsd[var_index[(Y_G, g.id, t)].index] = -g.inertia_mws
            add_row(hsd, "==", const, f"h_sync_def[{t}]")

            # synthetic inertia definition (forecast-error aware)
            htd = {ht.index: 1.0}
            const = 0.0
            for r in resources:
                if r.control != GFM or (r.h <= 0 and not self._hi_optimize):
                    continue
                alpha = self._alpha_override if self._alpha_override is not None \
                    else r.alpha
                margin = avail(r, t) - alpha * r.p_max
                if self._hi_optimize:
                    if margin > 0:
                        htd[var_index[(H_I, r.id, t)].index] = -margin
                else:
                    if margin <= 0:
                        continue  # clamped: no usable synthetic inertia
                    const += r.h * margin
                    htd[var_index[(P_CURT, r.id, t)].index] = r.h
            add_row(htd, "==", const, f"h_synt_def[{t}]")

            # PFR aggregate definition
            rgd = {rg.index: 1.0}
            for g in gens:
                if g.response_kind == RESPONSE_PFR:
                    rgd[var_index[(R_G_ROLE, g.id, t)].index] = -1.0
            add_row(rgd, "==", 0.0, f"r_g_def[{t}]")

            # nadir-effective EFR cannot exceed the actual EFR volume
            rec = {re.index: 1.0}
            for r in resources:
                rec[var_index[(R_I_ROLE, r.id, t)].index] = -1.0
            add_row(rec, "<=", 0.0, f"r_eff_cap[{t}]")

            # RoCoF: 2(H_sync + H_synt) >= P_L f0 / RoCoF_max
            add_row({hs.index: 2.0, ht.index: 2.0}, ">=",
                    params.p_loss * params.f0 / params.rocof_max,
                    f"rocof[{t}]")

            # q-s-s: sum R_i + R_G - k_rec H_synt >= P_L
            qss = {rg.index: 1.0, ht.index: -params.k_rec}
            for r in resources:
                qss[var_index[(R_I_ROLE, r.id, t)].index] = 1.0
            add_row(qss, ">=", params.p_loss + opts.security_pad,
                    f"qss[{t}]")

            # nadir as a standard-form SOC, rows in the printed order
            inv_f0 = 1.0 / params.f0
            efr_c = -params.t_efr / (4.0 * params.delta_f_max)
            a1 = {hs.index: inv_f0, ht.index: inv_f0, re.index: efr_c,
                  rg.index: -1.0 / params.t_pfr}
            a2 = {re.index: -1.0 / sqrt_df}
            c_row = {hs.index: inv_f0, ht.index: inv_f0, re.index: efr_c,
                     rg.index: 1.0 / params.t_pfr}
            handles[f"nadir[{t}]"] = ("soc", len(socs))
            socs.append(SocBlock(
                a_rows=(a1, a2),
                a_consts=(0.0,
                          (params.p_loss + opts.security_pad) / sqrt_df),
                c_row=c_row, c_const=0.0, handle=f"nadir[{t}]"))

            # generator private rows
            for g in gens:
                p = var_index[(P_G, g.id, t)]
                if not g.must_run:
                    y = var_index[(Y_G, g.id, t)]
                    add_row({p.index: -1.0, y.index: g.p_msg}, "<=", 0.0,
                            f"p_msg[{g.id},{t}]")
                    add_row({p.index: 1.0, y.index: -g.p_max}, "<=", 0.0,
                            f"p_cap[{g.id},{t}]")
                if g.response_kind == RESPONSE_PFR:
                    rv = var_index[(R_G_ROLE, g.id, t)]
                    if g.must_run:
                        add_row({rv.index: 1.0}, "<=", g.r_max,
                                f"r_cap[{g.id},{t}]")
                        add_row({rv.index: 1.0, p.index: 1.0}, "<=", g.p_max,
                                f"r_headroom[{g.id},{t}]")
                    else:
                        y = var_index[(Y_G, g.id, t)]
                        add_row({rv.index: 1.0, y.index: -g.r_max}, "<=", 0.0,
                                f"r_cap[{g.id},{t}]")
                        # headroom against committed capacity
                        add_row({rv.index: 1.0, p.index: 1.0,
                                 y.index: -g.p_max}, "<=", 0.0,
                                f"r_headroom[{g.id},{t}]")
                val = fixed_value(g.id, t)
                if val is not None and not g.must_run:
                    y = var_index[(Y_G, g.id, t)]
                    add_row({y.index: 1.0}, "==", val, f"commit[{g.id},{t}]")

            # wind response needs matching curtailment headroom
            for r in resources:
                key = (P_CURT, r.id, t)
                if key in var_index:
                    add_row({var_index[(R_I_ROLE, r.id, t)].index: 1.0,
                             var_index[key].index: -1.0}, "<=", 0.0,
                            f"r_le_curt[{r.id},{t}]")

        # ---- multi-period linking --------------------------------------------
        if multi:
            free = params.initial_commitment == "free"
            y0 = 1.0 if params.initial_commitment == "all_online" else 0.0
            for g in gens:
                if g.must_run:
                    continue
                init_on = 1.0 if (g.initially_on or y0 == 1.0) else 0.0
                if params.initial_commitment == "free":
                    init_on = None
                for t in range(T):
                    for role in (Y_SG, Y_SD, Y_ST):
                        add_var(role, g.id, t, kind=bin_kind, lo=0.0, hi=1.0,
                                cost=g.c_st if role == Y_SG else 0.0)
                for t in range(T):
                    y = var_index[(Y_G, g.id, t)]
                    ysg = var_index[(Y_SG, g.id, t)]
                    ysd = var_index[(Y_SD, g.id, t)]
                    yst = var_index[(Y_ST, g.id, t)]
                    # commitment recursion
                    coeffs = {y.index: 1.0, ysg.index: -1.0, ysd.index: 1.0}
                    rhs = 0.0
                    if t == 0:
                        if init_on is None:
                            coeffs = None  # free initial state: unlinked
                        else:
                            rhs = init_on
                    else:
                        coeffs[var_index[(Y_G, g.id, t - 1)].index] = -1.0
                    if coeffs is not None:
                        add_row(coeffs, "==", rhs, f"commit_link[{g.id},{t}]")
                    # start-generating lag
                    lag = t - g.t_st
                    if lag >= 0:
                        add_row({ysg.index: 1.0,
                                 var_index[(Y_ST, g.id, lag)].index: -1.0},
                                "==", 0.0, f"start_lag[{g.id},{t}]")
                    elif not free:
                        add_row({ysg.index: 1.0}, "==", 0.0,
                                f"start_lag[{g.id},{t}]")
                    # start-up eligibility: offline in the previous period
                    # and no shutdown within the last T_mdt periods.  The
                    # window [t-T+1, t-1] encodes "offline at least T
                    # periods"; running it to t (as printed) would also make
                    # every shutdown of an online unit infeasible.
                    coeffs = {yst.index: 1.0}
                    rhs = 1.0
                    if t > 0:
                        coeffs[var_index[(Y_G, g.id, t - 1)].index] = 1.0
                    elif init_on is not None:
                        rhs -= init_on
                    for j in range(max(0, t - g.t_mdt + 1), t):
                        k = var_index[(Y_SD, g.id, j)].index
                        coeffs[k] = coeffs.get(k, 0.0) + 1.0
                    add_row(coeffs, "<=", rhs, f"startup_elig[{g.id},{t}]")
                    # shut-down eligibility: online in the previous period
                    # and generating for at least T_mut periods (window
                    # [t-T+1, t-1]; the printed right endpoint t would
                    # forbid the start itself)
                    coeffs = {ysd.index: 1.0}
                    rhs = 0.0
                    if t > 0:
                        coeffs[var_index[(Y_G, g.id, t - 1)].index] = -1.0
                    else:
                        # free initial state is maximally permissive
                        rhs += 1.0 if init_on is None else init_on
                    for j in range(max(0, t - g.t_mut + 1), t):
                        k = var_index[(Y_SG, g.id, j)].index
                        coeffs[k] = coeffs.get(k, 0.0) + 1.0
                    add_row(coeffs, "<=", rhs, f"shutdown_elig[{g.id},{t}]")

        groups = _symmetry_groups(gens)
        meta = {
            "var_index": var_index,
            "symmetry_groups": groups,
            "params": params,
            "fleet": fleet,
            "availability": dict(opts.availability or {}),
            "unit_ids": [g.id for g in gens],
            "resource_ids": [r.id for r in resources],
        }
        return ConicProgram(vars=vars_, objective=objective,
                            objective_const=obj_const, linear_rows=rows,
                            soc_blocks=socs, handles=handles, n_periods=T,
                            meta=meta, diagnostics=diagnostics)


def _symmetry_groups(gens):
    """Unit ids grouped by identical specification (id excluded)."""
    from dataclasses import asdict
    buckets = {}
    for g in gens:
        if g.must_run:
            continue
        d = asdict(g)
        d.pop("id")
        key = tuple(sorted(d.items()))
        buckets.setdefault(key, []).append(g.id)
    return [ids for ids in buckets.values() if len(ids) > 1]


def build_single_period(fleet: FleetSpec,
                        options: BuildOptions | None = None) -> ConicProgram:
    if fleet.params.n_periods != 1:
        raise ValueError("single-period build requires scalar demand")
    return ProgramBuilder(fleet, options).build()


def build_multi_period(fleet: FleetSpec,
                       options: BuildOptions | None = None) -> ConicProgram:
    if fleet.params.n_periods != 24:
        raise ValueError("multi-period build requires a 24-vector demand")
    return ProgramBuilder(fleet, options).build()


def relax(program: ConicProgram) -> ConicProgram:
    """Binary-relaxed copy (y in [0, 1]); structure otherwise identical."""
    new_vars = [replace(v, kind=BINARY_RELAXED) if v.kind == BINARY else v
                for v in program.vars]
    meta = dict(program.meta)
    meta["var_index"] = {v.name: v for v in new_vars}
    return ConicProgram(
        vars=new_vars, objective=dict(program.objective),
        objective_const=program.objective_const,
        linear_rows=list(program.linear_rows),
        soc_blocks=list(program.soc_blocks),
        handles=dict(program.handles), n_periods=program.n_periods,
        meta=meta, diagnostics=list(program.diagnostics))


def _quadratic_form(rows_with_consts):
    """Sum of squares sum_i (a_i x + d_i)^2 as ({(j,k): coeff}, {j: lin}, const)."""
    quad, lin, const = {}, {}, 0.0
    for coeffs, d, sign in rows_with_consts:
        items = sorted(coeffs.items())
        for j, cj in items:
            for k, ck in items:
                if k < j:
                    continue
                key = (j, k)
                val = cj * ck * (1.0 if j == k else 2.0) * sign
                quad[key] = quad.get(key, 0.0) + val
            lin[j] = lin.get(j, 0.0) + 2.0 * cj * d * sign
        const += d * d * sign
    return quad, lin, const


def soc_standard_form_check(program: ConicProgram, tol: float = 1e-9) -> bool:
    """True iff every SOC block expands to the rotated nadir inequality.

    Expands (c'x + e)^2 - ||A x + d||^2 and compares it coefficient by
    coefficient with 4*(x1*x2 - x3^2) built from the grid parameters, where
    x1 = H/f0 - R_eff*t_efr/(4 df), x2 = R_G/t_pfr and
    x3 = (P_L - R_eff)/(2 sqrt(df)).
    """
    p = program.meta["params"]
    sqrt_df = math.sqrt(p.delta_f_max)
    for t in range(program.n_periods):
        try:
            blk = program.soc(f"nadir[{t}]")
        except KeyError:
            return False
        hs = program.var(AGG_H_SYNC, None, t).index
        ht = program.var(AGG_H_SYNT, None, t).index
        rg = program.var(AGG_R_G, None, t).index
        re = program.var(AGG_R_EFF, None, t).index
        lhs = _quadratic_form([
            (blk.c_row, blk.c_const, +1.0),
            (blk.a_rows[0], blk.a_consts[0], -1.0),
            (blk.a_rows[1], blk.a_consts[1], -1.0),
        ])
        x1 = ({hs: 1.0 / p.f0, ht: 1.0 / p.f0,
               re: -p.t_efr / (4.0 * p.delta_f_max)}, 0.0)
        x2 = ({rg: 1.0 / p.t_pfr}, 0.0)
        x3 = ({re: -1.0 / (2.0 * sqrt_df)}, p.p_loss / (2.0 * sqrt_df))
        # 4*(x1*x2 - x3^2) via the polarization identity
        plus = {k: x1[0].get(k, 0.0) + x2[0].get(k, 0.0)
                for k in set(x1[0]) | set(x2[0])}
        minus = {k: x1[0].get(k, 0.0) - x2[0].get(k, 0.0)
                 for k in set(x1[0]) | set(x2[0])}
        rhs = _quadratic_form([
            (plus, x1[1] + x2[1], +1.0),
            (minus, x1[1] - x2[1], -1.0),
            (x3[0], x3[1], -4.0),
        ])
        scale = max([1.0] + [abs(v) for v in lhs[0].values()])
        for part in range(3):
            a, b = lhs[part], rhs[part]
            if part == 2:
                if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                    return False
                continue
            keys = set(a) | set(b)
            for k in keys:
                if abs(a.get(k, 0.0) - b.get(k, 0.0)) > tol * scale:
                    return False
    return True
