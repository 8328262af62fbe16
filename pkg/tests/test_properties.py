import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqclear.conic_program import BuildOptions, ProgramBuilder, relax
from freqclear.frequency_dynamics import (DispatchPoint, analytic_nadir,
                                          response_profile,
                                          simulate_post_fault)
from freqclear.solver.bnb import solve_misocp
from freqclear.solver.standard_form import solve_socp
from freqclear.system_model import (GeneratorSpec, build_gb_reference_fleet,
                                    make_fleet, make_system_params)

GB = make_system_params(50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 1800.0, 25_000.0)


def point(**kw):
    base = dict(h_sync=90_000.0, h_synt=0.0, r_efr=0.0, r_pfr=0.0,
                p_loss=1800.0, params=GB)
    base.update(kw)
    return DispatchPoint(**base)


@given(t=st.floats(0.0, 60.0), r_efr=st.floats(0.0, 5000.0),
       r_pfr=st.floats(0.0, 8000.0))
def test_response_profile_bounded_and_monotone(t, r_efr, r_pfr):
    pt = point(r_efr=r_efr, r_pfr=r_pfr)
    val = response_profile(t, pt)
    assert -1e-12 <= val <= r_efr + r_pfr + 1e-9
    assert response_profile(t + 0.5, pt) >= val - 1e-9


@given(h=st.floats(50_000.0, 200_000.0), r_efr=st.floats(0.0, 1700.0),
       r_pfr=st.floats(2000.0, 8000.0))
@settings(max_examples=60)
def test_nadir_oracle_equivalence(h, r_efr, r_pfr):
    pt = point(h_sync=h, r_efr=r_efr, r_pfr=r_pfr)
    t_n, depth = analytic_nadir(pt)
    if math.isinf(depth):
        return
    trace = simulate_post_fault(pt)
    assert abs(depth - trace.nadir_depth) <= 1e-6


@given(h=st.floats(50_000.0, 150_000.0), bump=st.floats(1.0, 50_000.0))
@settings(max_examples=40)
def test_more_inertia_never_deepens_nadir(h, bump):
    base = point(h_sync=h, r_efr=400.0, r_pfr=3000.0)
    more = point(h_sync=h + bump, r_efr=400.0, r_pfr=3000.0)
    assert (simulate_post_fault(more).nadir_depth
            <= simulate_post_fault(base).nadir_depth + 1e-12)


@given(r=st.floats(0.0, 1700.0), bump=st.floats(1.0, 100.0))
@settings(max_examples=40)
def test_more_efr_never_deepens_nadir(r, bump):
    base = point(h_sync=80_000.0, r_efr=r, r_pfr=3000.0)
    more = point(h_sync=80_000.0, r_efr=min(r + bump, 1800.0), r_pfr=3000.0)
    assert (simulate_post_fault(more).nadir_depth
            <= simulate_post_fault(base).nadir_depth + 1e-12)


# -- spec examples not covered elsewhere --------------------------------------

def test_two_generator_lp_energy_dual_is_marginal_cost():
    gens = [GeneratorSpec(id="cheap", p_max=600.0, p_msg=50.0, c_nl=0.0,
                          c_m=12.0, h=8.0, r_max=150.0, response_kind="PFR"),
            GeneratorSpec(id="dear", p_max=600.0, p_msg=50.0, c_nl=0.0,
                          c_m=31.0, h=8.0, r_max=150.0, response_kind="PFR")]
    params = make_system_params(50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 60.0, 800.0)
    fleet = make_fleet(gens, [], params)
    prog = ProgramBuilder(fleet, BuildOptions(
        relax_binaries=True, fix_commitment={"cheap": 1.0, "dear": 1.0})).build()
    sol = solve_socp(prog)
    assert sol.status == "optimal"
    # cheap at its cap, dear marginal: dispatch 600 + 200
    assert sol.value("P_g", "cheap", 0) == pytest.approx(600.0, abs=1e-5)
    assert sol.value("P_g", "dear", 0) == pytest.approx(200.0, abs=1e-5)
    assert sol.duals["load_balance[0]"] == pytest.approx(31.0, abs=1e-6)


def test_gb_zero_wind_relaxed_objective_near_mip():
    fleet = build_gb_reference_fleet(0.0, 0.0, 0.0, 5.0, 0.05)
    prog = relax(ProgramBuilder(fleet).build())
    sol = solve_socp(prog)
    assert sol.status == "optimal"
    assert abs(sol.objective - 1_203_000.0) <= 0.001 * 1_203_000.0


def test_flat_multi_period_decouples_to_single_period():
    # 3-unit toy, flat demand, zero start cost, free initial state:
    # each hour's commitment must match the single-period optimum
    def gens(c_st):
        return [GeneratorSpec(id=f"u{i}", p_max=350.0 + 60 * i,
                              p_msg=80.0 + 30 * i, c_nl=100.0 + 40 * i,
                              c_m=25.0 + 7 * i, c_st=c_st, h=8.0,
                              r_max=0.25 * (350.0 + 60 * i),
                              response_kind="PFR", t_st=0, t_mut=0, t_mdt=0)
                for i in range(3)]
    single = make_fleet(gens(0.0), [], make_system_params(
        50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 80.0, 900.0))
    sol1 = solve_misocp(ProgramBuilder(single).build())
    multi = make_fleet(gens(0.0), [], make_system_params(
        50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 80.0, [900.0] * 24,
        initial_commitment="free"))
    sol24 = solve_misocp(ProgramBuilder(multi).build())
    assert sol24.status == "optimal"
    assert sol24.objective == pytest.approx(24.0 * sol1.objective, rel=1e-6)
    pattern1 = [round(sol1.value("y_g", f"u{i}", 0)) for i in range(3)]
    for t in range(24):
        assert [round(sol24.value("y_g", f"u{i}", t))
                for i in range(3)] == pattern1
