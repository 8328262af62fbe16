import math

import numpy as np
import pytest

from freqclear.conic_program import BuildOptions, ProgramBuilder
from freqclear.pricing import (canonical_schedule, chp_equivalence_check,
                               dispatchable_prices, restricted_prices,
                               settle)
from freqclear.solver.bnb import solve_misocp
from freqclear.system_model import (GeneratorSpec, build_gb_reference_fleet,
                                    make_fleet, make_system_params)


def gb(wind, efr=0.0, gfm=0.0, h=5.0, krec=0.05, **kw):
    return build_gb_reference_fleet(wind, efr, gfm, h, krec, **kw)


GAS = [f"gas-{i + 1:02d}" for i in range(50)]


def gas_sum(sol, role, t=0):
    return sum(sol.value(role, u, t) for u in GAS
               if sol.program.has_var(role, u, t))


# -- dispatchable prices against the reference tables ------------------------

def test_table2_prices():
    mip, rel, rep = dispatchable_prices(gb(0.0))
    assert rep.energy[0] == pytest.approx(50.80, rel=0.02)
    assert rep.sync_inertia[0] == pytest.approx(0.02, abs=0.01)
    assert rep.pfr[0] == pytest.approx(0.80, rel=0.05)


def test_table3_prices():
    mip, rel, rep = dispatchable_prices(gb(20_000.0))
    assert abs(rep.energy[0]) <= 1e-6
    assert rep.sync_inertia[0] == pytest.approx(2.36, rel=0.02)
    assert rep.pfr[0] == pytest.approx(59.09, rel=0.02)


def test_table4_prices():
    mip, rel, rep = dispatchable_prices(gb(20_000.0, efr=0.15))
    assert rep.efr[0] == pytest.approx(251.66, rel=0.02)
    assert rep.pfr[0] == pytest.approx(51.76, rel=0.02)
    assert rep.sync_inertia[0] == pytest.approx(2.66, rel=0.02)


def test_table5_prices():
    mip, rel, rep = dispatchable_prices(gb(20_000.0, gfm=0.30))
    assert rep.sync_inertia[0] == pytest.approx(2.05, rel=0.02)
    assert rep.synt_inertia[0] == pytest.approx(rep.sync_inertia[0], abs=1e-6)
    assert rep.efr[0] == pytest.approx(260.81, rel=0.02)
    assert rep.pfr[0] == pytest.approx(66.91, rel=0.02)


def test_zero_duals_give_zero_prices():
    # all multipliers zero -> every service price is zero (Eqs at the origin)
    from freqclear.pricing import _prices_from_duals
    fleet = gb(0.0)
    prog = ProgramBuilder(fleet).build()
    duals = {"load_balance[0]": 0.0, "rocof[0]": 0.0, "qss[0]": 0.0,
             "nadir[0]": (0.0, 0.0, 0.0)}
    rep = _prices_from_duals(fleet, prog, duals, "dispatchable")
    for arr in (rep.energy, rep.sync_inertia, rep.synt_inertia, rep.efr,
                rep.pfr):
        assert arr[0] == 0.0


def test_dual_feasibility_eq12_and_slackness():
    for wind, efr, gfm in [(0.0, 0.0, 0.0), (20_000.0, 0.15, 0.0),
                           (20_000.0, 0.0, 0.30), (30_000.0, 0.60, 0.30)]:
        mip, rel, rep = dispatchable_prices(gb(wind, efr, gfm))
        mu, l1, l2 = rep.raw["mu"][0], rep.raw["lambda1"][0], rep.raw["lambda2"][0]
        assert math.hypot(l1, l2) <= mu + 1e-8
        # slack nadir block -> zero SOC duals
        if "nadir" not in rep.binding[0]:
            assert max(abs(mu), abs(l1), abs(l2)) <= 1e-6


def test_synt_price_never_exceeds_sync():
    for wind, gfm, krec in [(20_000.0, 0.30, 0.05), (27_000.0, 0.30, 0.05),
                            (24_000.0, 0.30, 0.025)]:
        _, _, rep = dispatchable_prices(gb(wind, gfm=gfm, krec=krec))
        assert rep.synt_inertia[0] <= rep.sync_inertia[0] + 1e-9


def test_canonical_schedule_minimal_response():
    fleet = gb(0.0)
    mip, _, _ = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    assert gas_sum(sched, "R_g") == pytest.approx(3681.82, abs=0.1)
    assert gas_sum(sched, "P_g") == pytest.approx(23_200.0, abs=1e-3)
    assert sched.objective <= gas_sum(mip.primal_response
                                      if hasattr(mip, "primal_response")
                                      else mip, "R_g") + 1e-6


def test_table4_canonical_uses_full_efr():
    fleet = gb(20_000.0, efr=0.15)
    mip, _, rep = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    assert sched.value("R_i", "wind-efr", 0) == pytest.approx(900.0, abs=0.01)
    assert gas_sum(sched, "R_g") == pytest.approx(2436.8, abs=0.5)


def test_settlement_revenues_tables():
    # Table III row: gas response 265.31k, gas inertia 266.09k
    fleet = gb(20_000.0)
    mip, _, rep = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    st = settle(sched, rep, fleet)
    resp = sum(st[u].response_revenue for u in GAS)
    inertia = sum(st[u].inertia_revenue for u in GAS)
    assert resp == pytest.approx(265_310.0, rel=0.02)
    assert inertia == pytest.approx(266_090.0, rel=0.02)
    # make-whole: committed gas recovers its cost through AS + side payment
    cost = sum(st[u].operating_cost for u in GAS)
    rev = sum(st[u].total_revenue for u in GAS)
    mw = sum(st[u].make_whole for u in GAS)
    assert mw == pytest.approx(max(0.0, cost - rev), rel=1e-6, abs=1e-6)


def test_settlement_table4_wind_efr_revenue():
    fleet = gb(20_000.0, efr=0.15)
    mip, _, rep = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    st = settle(sched, rep, fleet)
    assert st["wind-efr"].response_revenue == pytest.approx(226_490.0,
                                                            rel=0.02)


def test_settlement_table5_gfm_inertia_revenue():
    fleet = gb(20_000.0, gfm=0.30)
    mip, _, rep = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    st = settle(sched, rep, fleet)
    assert st["wind-gfm"].inertia_revenue == pytest.approx(61_500.0, rel=0.02)


def test_zero_prices_mean_make_whole_covers_cost():
    from freqclear.pricing import PriceReport, Settlement, _prices_from_duals
    fleet = gb(0.0)
    mip, _, rep = dispatchable_prices(fleet)
    sched = canonical_schedule(fleet, None, mip)
    zero = _prices_from_duals(
        fleet, sched.program,
        {h: ((0.0, 0.0, 0.0) if h.startswith("nadir") else 0.0)
         for h in sched.program.handles}, "dispatchable")
    st = settle(sched, zero, fleet)
    for u in GAS:
        assert st[u].total_revenue == 0.0
        assert st[u].make_whole == pytest.approx(st[u].operating_cost)


# -- restricted pricing -------------------------------------------------------

def test_restricted_prices_gfm_case():
    fleet = gb(20_000.0, gfm=0.30)
    mip, fixed, rep = restricted_prices(fleet)
    assert abs(rep.raw["rocof"][0]) <= 1e-6
    assert abs(rep.raw["qss"][0]) <= 1e-6
    assert abs(rep.raw["mu"][0]) <= 1e-6
    comm = rep.commitment
    on = [u for u in GAS if mip.value("y_g", u, 0) > 0.5]
    for u in on:
        assert comm[u][0] == pytest.approx(13_000.0, rel=1e-6)
    # commitment revenue absorbs the dispatchable AS revenue (within 5%)
    _, _, disp = dispatchable_prices(fleet, mip=mip)
    sched = canonical_schedule(fleet, None, mip)
    st = settle(sched, disp, fleet)
    as_rev = sum(st[u].response_revenue + st[u].inertia_revenue for u in on)
    total_comm = sum(comm[u][0] for u in on)
    assert total_comm == pytest.approx(as_rev, rel=0.05)
    # GFM wind earns nothing for ancillary services in restricted mode
    st_r = settle(sched, rep, fleet)
    assert st_r["wind-gfm"].inertia_revenue == pytest.approx(0.0, abs=1e-6)
    assert st_r["wind-gfm"].response_revenue == pytest.approx(0.0, abs=1e-6)


def test_restricted_equals_dispatchable_when_commitment_unconstrained():
    # no-load costs and minimum generation at zero, spare capacity: fixing
    # the commitment binds nothing, so both modes price identically and the
    # commitment equalities carry no rent
    gens = [GeneratorSpec(id="a", p_max=400.0, p_msg=0.0, c_nl=0.0, c_m=20.0,
                          h=8.0, r_max=100.0, response_kind="PFR"),
            GeneratorSpec(id="b", p_max=400.0, p_msg=0.0, c_nl=0.0, c_m=40.0,
                          h=8.0, r_max=100.0, response_kind="PFR")]
    params = make_system_params(50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 60.0, 300.0)
    fleet = make_fleet(gens, [], params)
    mip, rel, disp = dispatchable_prices(fleet)
    mip2, fixed, restr = restricted_prices(fleet, mip=mip)
    assert disp.energy[0] == pytest.approx(restr.energy[0], abs=1e-5)
    assert disp.pfr[0] == pytest.approx(restr.pfr[0], abs=1e-5)
    for u in ("a", "b"):
        assert abs(restr.commitment[u][0]) <= 1e-5


# -- convex-hull equivalence ---------------------------------------------------

def test_chp_equivalence_gb():
    ok, rep = chp_equivalence_check(gb(20_000.0, gfm=0.30))
    assert ok and rep["structural_ok"]


def test_chp_equivalence_numeric_toy():
    gens = [GeneratorSpec(id=f"u{i}", p_max=300.0 + 50 * i, p_msg=60.0,
                          c_nl=90.0 + 10 * i, c_m=20.0 + 5 * i, h=8.0,
                          r_max=80.0, response_kind="PFR")
            for i in range(3)]
    params = make_system_params(50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 70.0, 600.0)
    fleet = make_fleet(gens, [], params)
    ok, rep = chp_equivalence_check(fleet)
    assert ok
    assert rep["numeric_ok"]
    assert rep["total_gap"] <= 1e-6 * 1e5


def test_chp_refuses_nonaffine_costs():
    fleet = gb(0.0)
    with pytest.raises(ValueError):
        chp_equivalence_check(fleet, cost_curves={"gas-01": "quadratic"})
