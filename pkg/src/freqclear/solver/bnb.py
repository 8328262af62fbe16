"""Mixed-integer SOCP solver: branch-and-bound with identical-unit reduction.

Identical generators make the commitment polytope exchangeable, so node
relaxations are solved on an exact class-level aggregation (sums of member
variables; private rows scale their right-hand side by the class size) and
branching is a dichotomy on class committed counts.  Integral aggregate
points are disaggregated back to per-unit schedules (seniority order, FIFO
start/stop assignment for multi-period trajectories) and verified row by
row against the original program before being accepted as incumbents.

Node selection is best-bound with deterministic tie-breaking, so repeated
runs produce identical trees and incumbents.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..conic_program import BINARY, ConicProgram, LinearRow, VarRef
from .ipm import STATUS_OPTIMAL, STATUS_PINFEAS, solve_conelp
from .standard_form import Solution, to_standard_form

_INT_TOL = 1e-6


class DisaggregationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass
class Aggregate:
    program: ConicProgram          # class-level program
    var_map: dict                  # original var index -> aggregate var index
    members: dict                  # aggregate var index -> [original indices]
    integer_vars: list             # (aggregate var index, upper count)
    classes: list                  # [(class owner key, [unit ids])]


def _verify_exchangeable(program, groups):
    """Drop any claimed class whose columns are not structurally identical."""
    by_owner_rows = {}
    owner_of_var = {}
    for v in program.vars:
        owner_of_var[v.index] = v.owner
    global_rows = []
    private = {}
    for pos, row in enumerate(program.linear_rows):
        owners = {owner_of_var[j] for j in row.coeffs}
        owners.discard(None)
        if len(owners) == 1:
            private.setdefault(next(iter(owners)), []).append(pos)
        else:
            global_rows.append(pos)

    def signature(unit):
        sig = []
        for pos in private.get(unit, []):
            row = program.linear_rows[pos]
            terms = tuple(sorted(
                ((program.vars[j].role, program.vars[j].period, c)
                 for j, c in row.coeffs.items())))
            sig.append((row.sense, row.rhs, terms))
        sig.sort()
        for pos in global_rows:
            row = program.linear_rows[pos]
            for j, c in row.coeffs.items():
                if owner_of_var[j] == unit:
                    sig.append((pos, program.vars[j].role,
                                program.vars[j].period, c))
        for blk in program.soc_blocks:
            for part in (blk.c_row, *blk.a_rows):
                for j, c in part.items():
                    if owner_of_var[j] == unit:
                        sig.append((blk.handle, program.vars[j].role, c))
        for v in program.vars:
            if v.owner == unit:
                sig.append(("var", v.role, v.period, v.kind, v.lo, v.hi,
                            program.objective.get(v.index, 0.0)))
        return tuple(sig)

    ok_groups = []
    for ids in groups:
        by_sig = {}
        for u in ids:
            by_sig.setdefault(signature(u), []).append(u)
        # units whose rows diverge (e.g. different fixed commitments) fall
        # into separate exchangeable sub-classes
        for sub in by_sig.values():
            if len(sub) > 1:
                ok_groups.append(sub)
    return ok_groups


def aggregate_program(program: ConicProgram) -> Aggregate:
    groups = _verify_exchangeable(program,
                                  program.meta.get("symmetry_groups", []))
    unit_class = {}
    classes = []
    for ids in groups:
        key = f"class:{ids[0]}"
        classes.append((key, ids))
        for u in ids:
            unit_class[u] = key
    class_size = {key: len(ids) for key, ids in classes}

    new_vars, new_index = [], {}
    var_map, members = {}, {}
    objective = {}
    integer_vars = []

    def new_var(kind, lo, hi, name):
        v = VarRef(index=len(new_vars), kind=kind, lo=lo, hi=hi, name=name)
        new_vars.append(v)
        new_index[name] = v
        return v

    for v in program.vars:
        cls = unit_class.get(v.owner)
        if cls is None:
            nv = new_var(v.kind, v.lo, v.hi, v.name)
            var_map[v.index] = nv.index
            members.setdefault(nv.index, []).append(v.index)
            if v.kind == BINARY:
                integer_vars.append((nv.index, 1))
            if v.index in program.objective:
                objective[nv.index] = (objective.get(nv.index, 0.0)
                                       + program.objective[v.index])
        else:
            name = (v.name[0], cls, v.name[2])
            if name in new_index:
                nv = new_index[name]
            else:
                k = class_size[cls]
                lo = v.lo * k if math.isfinite(v.lo) else v.lo
                hi = v.hi * k if math.isfinite(v.hi) else v.hi
                nv = new_var(v.kind, lo, hi, name)
                if v.kind == BINARY:
                    integer_vars.append((nv.index, k))
                if v.index in program.objective:
                    objective[nv.index] = program.objective[v.index]
            var_map[v.index] = nv.index
            members.setdefault(nv.index, []).append(v.index)

    rows, handles = [], {}
    seen_private = set()
    owner_of_var = {v.index: v.owner for v in program.vars}
    for row in program.linear_rows:
        owners = {owner_of_var[j] for j in row.coeffs}
        owners.discard(None)
        cls_owners = {unit_class.get(o) for o in owners}
        if len(owners) == 1 and None not in cls_owners:
            cls = next(iter(cls_owners))
            unit = next(iter(owners))
            pattern = (cls, row.sense, row.rhs, tuple(sorted(
                (program.vars[j].role, program.vars[j].period, c)
                for j, c in row.coeffs.items())))
            if pattern in seen_private:
                continue  # one aggregate row per class pattern
            seen_private.add(pattern)
            k = class_size[cls]
            coeffs = {var_map[j]: c for j, c in row.coeffs.items()}
            handle = f"agg[{cls}]:{row.handle}"
            handles[handle] = ("row", len(rows))
            rows.append(LinearRow(coeffs=coeffs, sense=row.sense,
                                  rhs=row.rhs * k, handle=handle))
        else:
            # members of a class carry the same verified coefficient, which
            # appears exactly once on the class-sum variable
            coeffs = {}
            for j, c in row.coeffs.items():
                nj = var_map[j]
                if nj not in coeffs:
                    coeffs[nj] = c
            handles[row.handle] = ("row", len(rows))
            rows.append(LinearRow(coeffs=coeffs, sense=row.sense,
                                  rhs=row.rhs, handle=row.handle))

    socs = []
    for blk in program.soc_blocks:
        def remap(d):
            out = {}
            for j, c in d.items():
                out[var_map[j]] = c
            return out
        handles[blk.handle] = ("soc", len(socs))
        socs.append(blk.__class__(
            a_rows=(remap(blk.a_rows[0]), remap(blk.a_rows[1])),
            a_consts=blk.a_consts, c_row=remap(blk.c_row),
            c_const=blk.c_const, handle=blk.handle))

    meta = dict(program.meta)
    meta["var_index"] = {v.name: v for v in new_vars}
    agg_prog = ConicProgram(
        vars=new_vars, objective=objective,
        objective_const=program.objective_const, linear_rows=rows,
        soc_blocks=socs, handles=handles, n_periods=program.n_periods,
        meta=meta, diagnostics=list(program.diagnostics))
    return Aggregate(program=agg_prog, var_map=var_map, members=members,
                     integer_vars=integer_vars, classes=classes)


# ---------------------------------------------------------------------------
# disaggregation
# ---------------------------------------------------------------------------

def _unit_trajectories(program, ids, counts, t_st, t_mut, t_mdt, init_on,
                       free_start=False):
    """Assign per-unit 0/1 trajectories realizing integral class counts.

    Eligibility windows mirror the built rows exactly: a shutdown at t is
    blocked by any start-generating within [t - t_mut + 1, t - 1] (or at t
    itself), and a start-up decision at t by any shutdown within
    [t - t_mdt + 1, t - 1] (or at t).
    """
    T = program.n_periods
    y = {u: [0] * T for u in ids}
    ysg = {u: [0] * T for u in ids}
    ysd = {u: [0] * T for u in ids}
    yst = {u: [0] * T for u in ids}
    on = {u: bool(init_on) for u in ids}
    last_start = {u: -10 ** 6 for u in ids}
    last_stop = {u: -10 ** 6 for u in ids}
    pending = {}  # unit -> period at which it starts generating

    def pick(cands, keyfn, n, what):
        cands = sorted(cands, key=keyfn)
        if len(cands) < n:
            raise DisaggregationError(f"not enough eligible units for {what}")
        return cands[:n]

    for t in range(T):
        n_st = counts["y_st"][t]
        n_sg = counts["y_sg"][t]
        n_sd = counts["y_sd"][t]
        # starts scheduled t_st periods ago materialize now
        due = [u for u, at in pending.items() if at == t]
        if len(due) != n_sg:
            if not (free_start and t < t_st and len(due) < n_sg):
                raise DisaggregationError(
                    f"start-lag mismatch at t={t}: {len(due)} pending vs "
                    f"{n_sg} starts")
            # free initial state: unscheduled starts allowed before the lag
            cands = [u for u in ids if not on[u] and u not in pending]
            due += pick(cands, lambda u: (last_stop[u], u),
                        n_sg - len(due), "free starts")
        for u in due[:n_sg]:
            ysg[u][t] = 1
            on[u] = True
            last_start[u] = t
            pending.pop(u, None)
        # shutdowns: longest-online first ("generating >= T_mut periods")
        cands = [u for u in ids
                 if on[u] and ysg[u][t] == 0
                 and last_start[u] <= t - t_mut]
        for u in pick(cands, lambda u: (last_start[u], u), n_sd,
                      "shutdowns"):
            ysd[u][t] = 1
            on[u] = False
            last_stop[u] = t
        # start-up decisions: longest-offline first ("offline >= T_mdt")
        cands = [u for u in ids
                 if not on[u] and u not in pending
                 and last_stop[u] <= t - t_mdt and ysd[u][t] == 0]
        for u in pick(cands, lambda u: (last_stop[u], u), n_st, "start-ups"):
            yst[u][t] = 1
            pending[u] = t + t_st
        for u in ids:
            y[u][t] = 1 if on[u] else 0
    return y, ysg, ysd, yst


def _evaluate_feasibility(program, x, tol=1e-6):
    worst = 0.0
    for row in program.linear_rows:
        val = sum(c * x[j] for j, c in row.coeffs.items())
        sc = 1.0 + abs(row.rhs)
        if row.sense == "==":
            worst = max(worst, abs(val - row.rhs) / sc)
        elif row.sense == "<=":
            worst = max(worst, (val - row.rhs) / sc)
        else:
            worst = max(worst, (row.rhs - val) / sc)
    for blk in program.soc_blocks:
        s0 = blk.c_const + sum(c * x[j] for j, c in blk.c_row.items())
        s1 = blk.a_consts[0] + sum(c * x[j] for j, c in blk.a_rows[0].items())
        s2 = blk.a_consts[1] + sum(c * x[j] for j, c in blk.a_rows[1].items())
        worst = max(worst, (math.hypot(s1, s2) - s0) / (1.0 + abs(s0)))
    for v in program.vars:
        if math.isfinite(v.lo):
            worst = max(worst, (v.lo - x[v.index]) / (1.0 + abs(v.lo)))
        if math.isfinite(v.hi):
            worst = max(worst, (x[v.index] - v.hi) / (1.0 + abs(v.hi)))
    return worst


def disaggregate(program: ConicProgram, agg: Aggregate,
                 x_agg: np.ndarray) -> np.ndarray:
    """Map an aggregate point with integral counts to a per-unit point."""
    x = np.zeros(len(program.vars))
    fleet = program.meta.get("fleet")
    fleet_units = {g.id: g for g in fleet.generators} if fleet else {}
    handled = set()
    T = program.n_periods

    for key, ids in agg.classes:
        gspec = fleet_units.get(ids[0])
        counts = {}
        for role in ("y_g", "y_sg", "y_sd", "y_st"):
            per_t = []
            for t in range(T):
                name = (role, key, t)
                v = agg.program.meta["var_index"].get(name)
                per_t.append(0 if v is None
                             else int(round(x_agg[v.index])))
            counts[role] = per_t
        if ("y_sg", key, 0) in agg.program.meta["var_index"]:
            params = program.meta.get("params")
            y, ysg, ysd, yst = _unit_trajectories(
                program, ids, counts,
                gspec.t_st if gspec else 0, gspec.t_mut if gspec else 0,
                gspec.t_mdt if gspec else 0,
                gspec.initially_on if gspec else False,
                free_start=(params is not None
                            and params.initial_commitment == "free"))
        else:
            y = {}
            for t in range(T):
                k = counts["y_g"][t]
                for i, u in enumerate(sorted(ids)):
                    y.setdefault(u, [0] * T)[t] = 1 if i < k else 0
            ysg = ysd = yst = None
        for t in range(T):
            k_on = counts["y_g"][t]
            for role, table in (("y_g", y), ("y_sg", ysg), ("y_sd", ysd),
                                ("y_st", yst)):
                if table is None:
                    continue
                for u in ids:
                    if program.has_var(role, u, t):
                        j = program.var(role, u, t).index
                        x[j] = float(table[u][t])
                        handled.add(j)
            # split continuous roles over the online units
            for role in ("P_g", "R_g"):
                name = (role, key, t)
                v = agg.program.meta["var_index"].get(name)
                if v is None:
                    continue
                total = x_agg[v.index]
                share = total / k_on if k_on else 0.0
                for u in ids:
                    if program.has_var(role, u, t):
                        j = program.var(role, u, t).index
                        x[j] = share if y[u][t] else 0.0
                        handled.add(j)

    for v in program.vars:
        if v.index in handled:
            continue
        x[v.index] = x_agg[agg.var_map[v.index]]
    return x


def _fleet_units(program):
    fleet = program.meta.get("fleet")
    if fleet is not None:
        return fleet.generators
    return []


# ---------------------------------------------------------------------------
# branch and bound
# ---------------------------------------------------------------------------

def solve_misocp(program: ConicProgram, node_cap: int = 20000,
                 gap_tol: float = 1e-6, verbose: bool = False) -> Solution:
    """Best integer-feasible solution of a program with binary marks."""
    if not any(v.kind == BINARY for v in program.vars):
        sol = _tight_socp(program)
        sol.bnb_stats = {"nodes": 0, "incumbent_updates": 0, "gap": 0.0}
        return sol
    bad = [d for d in program.diagnostics if d.severity == "error"]
    if bad:
        raise ValueError("program carries build-time error diagnostics: "
                         + "; ".join(str(d) for d in bad))

    agg = aggregate_program(program)
    sf = to_standard_form(agg.program)
    base_lo = {j: agg.program.vars[j].lo for j, _k in agg.integer_vars}
    base_hi = {j: agg.program.vars[j].hi for j, _k in agg.integer_vars}
    bound_pos = {}
    for k, (j, side) in enumerate(sf.bound_rows):
        bound_pos[(j, side)] = len(sf.ineq_rows) + k

    def solve_node(lo, hi, tight=False):
        # bound rows live in scaled data as rG * (-lo) and rG * hi
        h = sf.h.copy()
        for j, _k in agg.integer_vars:
            p_lo = bound_pos[(j, "lo")]
            p_hi = bound_pos[(j, "hi")]
            h[p_lo] = sf.row_scale_G[p_lo] * (-lo[j])
            h[p_hi] = sf.row_scale_G[p_hi] * hi[j]
        kw = (dict(feastol=1e-9, abstol=1e-10, reltol=1e-11, max_iters=200)
              if tight else
              dict(feastol=1e-8, abstol=1e-9, reltol=1e-10, max_iters=120))
        res = solve_conelp(sf.c, sf.G, h, sf.dims, sf.A, sf.b, **kw)
        return res

    def node_values(res):
        x = sf.col_scale * res.x
        obj = sum(agg.program.objective.get(j, 0.0) * x[j]
                  for j in range(len(x))) + agg.program.objective_const
        return x, obj

    lo0 = dict(base_lo)
    hi0 = dict(base_hi)
    counter = 0
    heap = []
    res0 = solve_node(lo0, hi0)
    stats = {"nodes": 1, "incumbent_updates": 0}
    incumbent = None
    incumbent_obj = math.inf
    if res0.status == STATUS_PINFEAS:
        return Solution(status="infeasible", objective=math.nan, primal=None,
                        duals={}, bound_duals=(None, None), kkt_residuals={},
                        program=program, bnb_stats=stats)
    if res0.status not in (STATUS_OPTIMAL,):
        raise RuntimeError(f"root relaxation failed: {res0.status}")
    x0, obj0 = node_values(res0)
    heapq.heappush(heap, (obj0, counter, lo0, hi0, x0))
    root_bound = obj0

    commit_vars = [j for j, _k in agg.integer_vars
                   if agg.program.vars[j].role == "y_g"]

    def try_incumbent(values):
        nonlocal incumbent, incumbent_obj
        lo_f = {j: int(round(values[j])) for j, _k in agg.integer_vars}
        res = solve_node(lo_f, lo_f, tight=True)
        if res.status != STATUS_OPTIMAL:
            return
        x_agg, obj = node_values(res)
        for j, _k in agg.integer_vars:
            x_agg[j] = lo_f[j]
        if obj >= incumbent_obj - 1e-9 * max(1.0, abs(obj)):
            return
        try:
            x_unit = disaggregate(program, agg, x_agg)
        except DisaggregationError:
            # integral aggregate point without a unit-level realization:
            # skip the candidate, the node bound remains valid
            return
        viol = _evaluate_feasibility(program, x_unit)
        if viol > 1e-5:
            raise DisaggregationError(
                f"disaggregated incumbent violates rows by {viol:.2e}")
        incumbent = (x_unit, x_agg)
        incumbent_obj = obj
        stats["incumbent_updates"] += 1

    def rounding_heuristic(x_root):
        """Round commitment counts up; derive start/stop families as the
        minimal transitions realizing the rounded sequence."""
        var_index = agg.program.meta["var_index"]
        fleet = program.meta.get("fleet")
        specs = {g.id: g for g in fleet.generators} if fleet else {}
        values = {}
        owners = {}
        for j, _k in agg.integer_vars:
            v = agg.program.vars[j]
            owners.setdefault(v.owner, {})[(v.role, v.period)] = j
        class_ids = dict(agg.classes)
        T = agg.program.n_periods
        for owner, roles in owners.items():
            members = class_ids.get(owner, [owner])
            gspec = specs.get(members[0])
            if gspec is None:
                continue
            init = len(members) if gspec.initially_on else 0
            k_seq = []
            for t in range(T):
                j = roles.get(("y_g", t))
                if j is None:
                    return
                k_seq.append(min(int(math.ceil(x_root[j] - 1e-9)),
                                 int(base_hi[j])))
                values[j] = k_seq[-1]
            prev = init
            sg = []
            for t in range(T):
                sg.append(max(0, k_seq[t] - prev))
                sd = max(0, prev - k_seq[t])
                if ("y_sg", t) in roles:
                    values[roles[("y_sg", t)]] = sg[-1]
                    values[roles[("y_sd", t)]] = sd
                prev = k_seq[t]
            for t in range(T):
                if ("y_st", t) in roles:
                    lag = t + gspec.t_st
                    values[roles[("y_st", t)]] = (sg[lag] if lag < T else 0)
        if len(values) == len(agg.integer_vars):
            try_incumbent(values)

    if len(commit_vars) < len(agg.integer_vars):
        rounding_heuristic(x0)  # multi-period: seed an incumbent early

    status = "optimal"
    lower_bound = root_bound
    while heap:
        bound, _cnt, lo, hi, x_node = heapq.heappop(heap)
        lower_bound = bound
        if incumbent is not None and bound >= incumbent_obj - gap_tol * max(
                1.0, abs(incumbent_obj)):
            lower_bound = incumbent_obj
            break
        # most fractional commitment count; start/stop counts only once the
        # commitments are settled
        frac_j, frac_val = None, 0.0
        for j in commit_vars:
            f = abs(x_node[j] - round(x_node[j]))
            if f > max(_INT_TOL, frac_val):
                frac_j, frac_val = j, f
        if frac_j is None:
            for j, _k in agg.integer_vars:
                f = abs(x_node[j] - round(x_node[j]))
                if f > max(_INT_TOL, frac_val):
                    frac_j, frac_val = j, f
        if frac_j is None:
            try_incumbent(x_node)
            continue
        if stats["nodes"] >= node_cap:
            status = "node_limit"
            break
        floor = math.floor(x_node[frac_j])
        for new_lo, new_hi in (((frac_j, floor + 1), None),
                               (None, (frac_j, floor))):
            lo2, hi2 = dict(lo), dict(hi)
            if new_lo:
                lo2[new_lo[0]] = new_lo[1]
            if new_hi:
                hi2[new_hi[0]] = new_hi[1]
            if lo2[frac_j] > hi2[frac_j]:
                continue
            res = solve_node(lo2, hi2)
            stats["nodes"] += 1
            if res.status == STATUS_PINFEAS:
                continue
            if res.status != STATUS_OPTIMAL:
                continue  # conservatively treat as open with parent bound
            x2, obj2 = node_values(res)
            if incumbent is not None and obj2 >= incumbent_obj - gap_tol * \
                    max(1.0, abs(incumbent_obj)):
                continue
            counter += 1
            heapq.heappush(heap, (obj2, counter, lo2, hi2, x2))

    if incumbent is None:
        return Solution(status="infeasible" if status == "optimal"
                        else status, objective=math.nan, primal=None,
                        duals={}, bound_duals=(None, None), kkt_residuals={},
                        program=program, bnb_stats=stats)
    if not heap and status == "optimal":
        lower_bound = incumbent_obj  # tree fully explored
    gap = max(0.0, incumbent_obj - lower_bound) / max(1.0, abs(incumbent_obj))
    stats["gap"] = gap
    if status == "node_limit" and gap > gap_tol:
        final_status = "node_limit"
    else:
        final_status = "optimal"
    x_unit, _x_agg = incumbent
    sol = Solution(status=final_status, objective=incumbent_obj,
                   primal=x_unit, duals={}, bound_duals=(None, None),
                   kkt_residuals={"primal_feas":
                                  _evaluate_feasibility(program, x_unit)},
                   program=program, bnb_stats=stats)
    return sol


def _tight_socp(program):
    from .standard_form import solve_socp
    return solve_socp(program)
