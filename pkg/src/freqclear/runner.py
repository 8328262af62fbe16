"""Batch driver: case-study presets, wind sweeps, multi-period runs, exports.

Every emitted dispatch point is cross-checked against the exact frequency
simulation; points whose solves fail are recorded with an explicit failure
marker and the sweep continues.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .conic_program import BuildOptions, ProgramBuilder
from .frequency_dynamics import DispatchPoint, check_security
from .pricing import (canonical_schedule, dispatchable_prices,
                      restricted_prices, settle)
from .solver.bnb import solve_misocp
from .system_model import FleetSpec, build_gb_reference_fleet, load_scenario

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_WIND_FRACTION = 0.6  # hourly availability as share of installed

PRESETS = {
    "no-wind-services": dict(efr=0.0, gfm=0.0, h_gfm=0.0, k_rec=0.05),
    "efr15": dict(efr=0.15, gfm=0.0, h_gfm=0.0, k_rec=0.05),
    "gfm30": dict(efr=0.0, gfm=0.30, h_gfm=5.0, k_rec=0.05),
    "gfm30-krec025": dict(efr=0.0, gfm=0.30, h_gfm=5.0, k_rec=0.025),
    "gfm30-h3": dict(efr=0.0, gfm=0.30, h_gfm=3.0, k_rec=0.05),
    "gfm30-h3-alpha13": dict(efr=0.0, gfm=0.30, h_gfm=3.0, k_rec=0.05,
                             alpha=0.13),
    "gfm30-hi-opt": dict(efr=0.0, gfm=0.30, h_gfm=3.0, k_rec=0.05,
                         alpha=0.13, hi_optimize=True, hi_bounds=(0.0, 6.0)),
    "synergy-a": dict(efr=0.60, gfm=0.30, h_gfm=5.0, k_rec=0.05),
    "synergy-b": dict(efr=0.46, gfm=0.40, h_gfm=5.0, k_rec=0.05),
}


@dataclass(frozen=True)
class SweepSpec:
    preset: str = "no-wind-services"
    wind_grid: tuple = tuple(1000.0 * g for g in range(0, 21))
    pricing_mode: str = "dispatchable"     # dispatchable | restricted | both
    alpha: float | None = None
    hi_optimize: bool = False
    hi_bounds: tuple = (0.0, 6.0)
    k_rec_override: float | None = None
    multi_period: bool = False
    c_st: float = 10_000.0
    wind_fraction: float = DEFAULT_WIND_FRACTION
    wind_profile: tuple | None = None   # 24 hourly fractions of installed
    scenario_path: str | None = None
    jobs: int = 1
    seed: int = 0
    solver_gap_tol: float = 1e-6
    solver_node_cap: int = 20_000

    @property
    def modes(self):
        if self.pricing_mode == "both":
            return ("dispatchable", "restricted")
        return (self.pricing_mode,)


@dataclass
class PointResult:
    wind_mw: float
    ok: bool
    error: str | None = None
    reports: dict = field(default_factory=dict)       # mode -> PriceReport
    settlements: dict = field(default_factory=dict)   # mode -> {unit: Settlement}
    schedule_rows: list = field(default_factory=list)
    security_rows: list = field(default_factory=list)
    solver: dict = field(default_factory=dict)


@dataclass
class SweepResult:
    spec: SweepSpec
    points: list

    @property
    def failures(self):
        return [p for p in self.points if not p.ok]


def default_demand_profile_mw():
    rows = (DATA_DIR / "gb_daily_demand_gw.csv").read_text().strip().splitlines()
    return [1000.0 * float(r.split(",")[1]) for r in rows[1:]]


def fleet_for(spec: SweepSpec, wind_mw: float) -> FleetSpec:
    if spec.scenario_path:
        return load_scenario(spec.scenario_path)
    cfg = PRESETS[spec.preset]
    k_rec = spec.k_rec_override if spec.k_rec_override is not None \
        else cfg["k_rec"]
    kwargs = {}
    if spec.multi_period:
        kwargs = dict(demand=default_demand_profile_mw(),
                      initial_commitment="all_online", c_st=spec.c_st)
    return build_gb_reference_fleet(
        wind_mw, cfg["efr"], cfg["gfm"], cfg["h_gfm"], k_rec, **kwargs)


def build_options(spec: SweepSpec, fleet: FleetSpec | None = None
                  ) -> BuildOptions:
    cfg = PRESETS.get(spec.preset, {})
    alpha = spec.alpha if spec.alpha is not None else cfg.get("alpha")
    hi = spec.hi_optimize or cfg.get("hi_optimize", False)
    bounds = cfg.get("hi_bounds", spec.hi_bounds) if hi else None
    availability = None
    if spec.wind_profile is not None and fleet is not None:
        availability = {
            r.id: tuple(r.p_max * f for f in spec.wind_profile)
            for r in fleet.inverter_resources}
    return BuildOptions(alpha=alpha, hi_optimize=hi, hi_bounds=bounds,
                        availability=availability)


def _aggregates(solution, fleet, t):
    h_sync = sum(g.inertia_mws * solution.commitment(g.id, t)
                 for g in fleet.generators)
    h_synt = solution.value("H_synt", None, t)
    r_efr = sum(solution.value("R_i", r.id, t)
                for r in fleet.inverter_resources
                if solution.program.has_var("R_i", r.id, t))
    r_pfr = sum(solution.value("R_g", g.id, t) for g in fleet.generators
                if solution.program.has_var("R_g", g.id, t))
    vals = [h_sync, h_synt, r_efr, r_pfr]
    if min(vals) < -1e-5:
        raise AssertionError(f"negative dispatch aggregate: {vals}")
    return tuple(max(0.0, v) for v in vals)


def evaluate_point(spec: SweepSpec, wind_mw: float) -> PointResult:
    out = PointResult(wind_mw=wind_mw, ok=False)
    try:
        fleet = fleet_for(spec, wind_mw)
        options = build_options(spec, fleet)
        program = ProgramBuilder(fleet, options).build()
        mip = solve_misocp(program, node_cap=spec.solver_node_cap,
                           gap_tol=spec.solver_gap_tol)
        if mip.status not in ("optimal", "node_limit"):
            out.error = f"misocp status {mip.status}"
            return out
        sched = canonical_schedule(fleet, options, mip)
        for mode in spec.modes:
            if mode == "dispatchable":
                _, _, report = dispatchable_prices(fleet, options, mip=mip)
            else:
                _, _, report = restricted_prices(fleet, options, mip=mip)
            out.reports[mode] = report
            out.settlements[mode] = settle(sched, report, fleet)
        out.solver = dict(mip.bnb_stats or {}, objective=mip.objective)
        T = program.n_periods
        for t in range(T):
            h_sync, h_synt, r_efr, r_pfr = _aggregates(sched, fleet, t)
            point = DispatchPoint(h_sync=h_sync, h_synt=h_synt,
                                  r_efr=r_efr, r_pfr=r_pfr,
                                  p_loss=fleet.params.p_loss,
                                  params=fleet.params)
            rep = check_security(point)
            out.security_rows.append({
                "period": t, "h_sync_mws": h_sync, "h_synt_mws": h_synt,
                "r_efr_mw": r_efr, "r_pfr_mw": r_pfr,
                "nadir_depth_hz": rep.nadir_depth,
                "t_nadir_s": rep.t_nadir,
                "rocof_margin_mws": rep.margins["rocof"],
                "nadir_margin_hz": rep.margins["nadir"],
                "qss_margin_mw": rep.margins["qss"],
                "all_ok": rep.all_ok,
            })
            for g in fleet.generators:
                out.schedule_rows.append({
                    "period": t, "unit": g.id,
                    "committed": int(round(sched.commitment(g.id, t))),
                    "power_mw": sched.value("P_g", g.id, t),
                    "response_mw": (sched.value("R_g", g.id, t)
                                    if sched.program.has_var("R_g", g.id, t)
                                    else 0.0),
                    "curtailment_mw": 0.0, "h_i_s": g.h,
                })
            for r in fleet.inverter_resources:
                curt = (sched.value("P_curt_i", r.id, t)
                        if sched.program.has_var("P_curt_i", r.id, t) else 0.0)
                h_i = (sched.value("H_i", r.id, t)
                       if sched.program.has_var("H_i", r.id, t) else r.h)
                out.schedule_rows.append({
                    "period": t, "unit": r.id, "committed": 1,
                    "power_mw": 0.0,
                    "response_mw": (sched.value("R_i", r.id, t)
                                    if sched.program.has_var("R_i", r.id, t)
                                    else 0.0),
                    "curtailment_mw": curt, "h_i_s": h_i,
                })
        out.ok = all(row["all_ok"] for row in out.security_rows)
        if not out.ok:
            out.error = "security cross-check failed"
    except Exception as exc:  # per-point failures must not kill the sweep
        out.error = f"{type(exc).__name__}: {exc}"
    return out


def run_sweep(spec: SweepSpec) -> SweepResult:
    grid = list(spec.wind_grid)
    if spec.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(spec.jobs) as pool:
            points = list(pool.map(evaluate_point, [spec] * len(grid), grid))
    else:
        points = [evaluate_point(spec, w) for w in grid]
    return SweepResult(spec=spec, points=points)


def run_multi_period(spec: SweepSpec, installed_mw: float = 30_000.0
                     ) -> SweepResult:
    """Single 24-hour solve; hourly wind availability defaults to a constant
    fraction of installed capacity (paper publishes no hourly trace)."""
    wind = installed_mw * spec.wind_fraction
    spec = replace(spec, multi_period=True, wind_grid=(wind,))
    return SweepResult(spec=spec, points=[evaluate_point(spec, wind)])


# ---------------------------------------------------------------------------
# output emission (schemas documented in docs/formats.md)
# ---------------------------------------------------------------------------

def _fmt(x, nd=2):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if abs(x) < 0.5 * 10.0 ** (-nd):
        x = 0.0  # avoid "-0.00" in exports
    return f"{x:.{nd}f}"


def emit_outputs(result: SweepResult, out_dir) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "plotdata").mkdir(exist_ok=True)
    files = {}

    rows = ["wind_mw,period,mode,energy_price,sync_inertia_price,"
            "synt_inertia_price,efr_price,pfr_price,"
            "binding_rocof,binding_nadir,binding_qss"]
    for pt in result.points:
        for mode, rep in sorted(pt.reports.items()):
            for t in range(rep.periods):
                flags = rep.binding[t]
                rows.append(",".join([
                    _fmt(pt.wind_mw), str(t), mode,
                    _fmt(rep.energy[t]), _fmt(rep.sync_inertia[t]),
                    _fmt(rep.synt_inertia[t]), _fmt(rep.efr[t]),
                    _fmt(rep.pfr[t]),
                    _fmt("rocof" in flags), _fmt("nadir" in flags),
                    _fmt("qss" in flags)]))
    files["prices.csv"] = "\n".join(rows) + "\n"

    rows = ["wind_mw,mode,unit,energy_revenue,response_revenue,"
            "inertia_revenue,commitment_revenue,operating_cost,make_whole"]
    for pt in result.points:
        for mode, st in sorted(pt.settlements.items()):
            for unit, s in st.items():
                rows.append(",".join([
                    _fmt(pt.wind_mw), mode, unit,
                    _fmt(s.energy_revenue), _fmt(s.response_revenue),
                    _fmt(s.inertia_revenue), _fmt(s.commitment_revenue),
                    _fmt(s.operating_cost), _fmt(s.make_whole)]))
    files["settlements.csv"] = "\n".join(rows) + "\n"

    rows = ["wind_mw,period,unit,committed,power_mw,response_mw,"
            "curtailment_mw,h_i_s"]
    for pt in result.points:
        for r in pt.schedule_rows:
            rows.append(",".join([
                _fmt(pt.wind_mw), str(r["period"]), r["unit"],
                str(r["committed"]), _fmt(r["power_mw"], 3),
                _fmt(r["response_mw"], 3), _fmt(r["curtailment_mw"], 3),
                _fmt(r["h_i_s"], 3)]))
    files["schedule.csv"] = "\n".join(rows) + "\n"

    rows = ["wind_mw,period,h_sync_mws,h_synt_mws,r_efr_mw,r_pfr_mw,"
            "nadir_depth_hz,t_nadir_s,rocof_margin_mws,nadir_margin_hz,"
            "qss_margin_mw,all_ok"]
    for pt in result.points:
        for r in pt.security_rows:
            rows.append(",".join([
                _fmt(pt.wind_mw), str(r["period"]),
                _fmt(r["h_sync_mws"], 3), _fmt(r["h_synt_mws"], 3),
                _fmt(r["r_efr_mw"], 3), _fmt(r["r_pfr_mw"], 3),
                _fmt(r["nadir_depth_hz"], 6), _fmt(r["t_nadir_s"], 6),
                _fmt(r["rocof_margin_mws"], 6),
                _fmt(r["nadir_margin_hz"], 9),
                _fmt(r["qss_margin_mw"], 6), _fmt(r["all_ok"])]))
    files["security.csv"] = "\n".join(rows) + "\n"

    for mode in result.spec.modes:
        for curve in ("energy", "sync_inertia", "synt_inertia", "efr", "pfr"):
            rows = ["wind_gw,price"]
            for pt in result.points:
                rep = pt.reports.get(mode)
                if rep is None:
                    continue
                rows.append(f"{pt.wind_mw / 1000.0:.3f},"
                            f"{getattr(rep, curve)[0]:.2f}")
            files[f"plotdata/{curve}_price_{mode}.csv"] = "\n".join(rows) + "\n"

    summary = {
        "preset": result.spec.preset,
        "pricing_mode": result.spec.pricing_mode,
        "multi_period": result.spec.multi_period,
        "points": [
            {"wind_mw": pt.wind_mw, "ok": pt.ok, "error": pt.error,
             "solver": {k: (float(v) if isinstance(v, (int, float, np.floating))
                            else v) for k, v in pt.solver.items()}}
            for pt in result.points],
        "n_failures": len(result.failures),
    }
    files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"

    for name, content in files.items():
        path = out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
    return files
