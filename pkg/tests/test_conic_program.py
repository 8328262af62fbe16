import math

import pytest

from freqclear.conic_program import (
    BINARY, BINARY_RELAXED, BuildOptions, ProgramBuilder,
    build_multi_period, build_single_period, relax, soc_standard_form_check,
)
from freqclear.system_model import build_gb_reference_fleet


def gb(wind=0.0, efr=0.0, gfm=0.0, h=5.0, krec=0.05, **kw):
    return build_gb_reference_fleet(wind, efr, gfm, h, krec, **kw)


def test_single_period_structure():
    prog = build_single_period(gb())
    assert prog.n_binary == 50
    assert len(prog.soc_blocks) == 1
    assert prog.n_continuous == 111
    for h in ("load_balance[0]", "rocof[0]", "qss[0]", "nadir[0]"):
        assert h in prog.handles
    assert not [d for d in prog.diagnostics if d.severity == "error"]


def test_no_gfm_means_zero_h_synt_terms():
    prog = build_single_period(gb(20_000.0, 0.15, 0.0))
    row = prog.row("h_synt_def[0]")
    ht = prog.var("H_synt", None, 0)
    assert row.coeffs == {ht.index: 1.0}
    assert row.rhs == 0.0
    # q-s-s right-hand side reduces to the loss alone
    assert prog.row("qss[0]").rhs == 1800.0


def test_relax_binaries_option():
    prog = build_single_period(gb(), BuildOptions(relax_binaries=True))
    assert prog.n_binary == 0 and prog.n_relaxed == 50
    again = relax(build_single_period(gb()))
    assert [v.kind for v in again.vars] == [v.kind for v in prog.vars]


def test_forecast_error_adjusts_h_synt():
    # 30% GFM of 30 GW installed, fully available, H_i = 3, alpha = 0.13:
    # H_synt at zero curtailment = 3*(9000 - 0.13*9000) = 23,490 MW*s
    fleet = gb(30_000.0, 0.0, 0.30, h=3.0)
    builder = ProgramBuilder(fleet).apply_forecast_error(0.13)
    prog = builder.build()
    row = prog.row("h_synt_def[0]")
    assert row.rhs == pytest.approx(3.0 * (9000.0 - 0.13 * 9000.0))
    curt = prog.var("P_curt_i", "wind-gfm", 0)
    assert row.coeffs[curt.index] == pytest.approx(3.0)


def test_forecast_error_alpha_one_clamps_everything():
    fleet = gb(30_000.0, 0.0, 0.30, h=3.0)
    prog = ProgramBuilder(fleet).apply_forecast_error(1.0).build()
    row = prog.row("h_synt_def[0]")
    ht = prog.var("H_synt", None, 0)
    assert row.coeffs == {ht.index: 1.0} and row.rhs == 0.0


def test_hi_optimization_swaps_curtailment_for_hi():
    fleet = gb(20_000.0, 0.0, 0.30, h=3.0)
    builder = ProgramBuilder(fleet)
    builder.apply_forecast_error(0.13).enable_hi_optimization(0.0, 6.0)
    prog = builder.build()
    assert not prog.has_var("P_curt_i", "wind-gfm", 0)
    hi = prog.var("H_i", "wind-gfm", 0)
    assert (hi.lo, hi.hi) == (0.0, 6.0)
    row = prog.row("h_synt_def[0]")
    margin = 0.30 * 20_000.0 - 0.13 * 9_000.0
    assert row.coeffs[hi.index] == pytest.approx(-margin)
    # energy-only wind keeps its curtailment variable
    assert prog.has_var("P_curt_i", "wind-energy", 0)


def test_fixed_hi_bounds_equivalent_to_constant():
    fleet = gb(20_000.0, 0.0, 0.30, h=3.0)
    prog = ProgramBuilder(fleet).enable_hi_optimization(3.0, 3.0).build()
    hi = prog.var("H_i", "wind-gfm", 0)
    assert hi.lo == hi.hi == 3.0


def test_soc_standard_form_check_accepts_builder_output():
    assert soc_standard_form_check(build_single_period(gb(20_000.0, 0.15, 0.3)))


def test_soc_check_sign_flip_still_passes():
    prog = build_single_period(gb())
    blk = prog.soc_blocks[0]
    flipped = blk.__class__(
        a_rows=(blk.a_rows[0], {k: -v for k, v in blk.a_rows[1].items()}),
        a_consts=(blk.a_consts[0], -blk.a_consts[1]),
        c_row=blk.c_row, c_const=blk.c_const, handle=blk.handle)
    prog.soc_blocks[0] = flipped
    assert soc_standard_form_check(prog)


def test_soc_check_detects_misplaced_terms():
    prog = build_single_period(gb())
    blk = prog.soc_blocks[0]
    rg = prog.var("R_G", None, 0).index
    bad_a2 = dict(blk.a_rows[1])
    bad_a2[rg] = 1.0 / 10.0  # T_PFR entry on the wrong row
    bad_a1 = dict(blk.a_rows[0])
    bad_a1.pop(rg)
    prog.soc_blocks[0] = blk.__class__(
        a_rows=(bad_a1, bad_a2), a_consts=blk.a_consts,
        c_row=blk.c_row, c_const=blk.c_const, handle=blk.handle)
    assert not soc_standard_form_check(prog)


def test_build_determinism():
    a = build_single_period(gb(20_000.0, 0.15, 0.30))
    b = build_single_period(gb(20_000.0, 0.15, 0.30))
    assert a.dump_text() == b.dump_text()


def test_multi_period_instance_shape():
    fleet = gb(18_000.0, 0.0, 0.30, demand=[20_000.0] * 24,
               initial_commitment="all_online")
    prog = build_multi_period(fleet)
    assert prog.n_binary == 4800
    assert prog.n_continuous == 2664
    assert len(prog.soc_blocks) == 24
    census = prog.constraint_census()
    assert abs(census - 20_530) <= 0.05 * 20_530, census


def test_multi_period_zero_lag_ties_sg_to_st():
    fleet = gb(18_000.0, 0.0, 0.30, demand=[20_000.0] * 24,
               initial_commitment="all_online")
    fleet = fleet.__class__(
        tuple(g.__class__(**{**g.__dict__, "t_st": 0}) for g in fleet.generators),
        fleet.inverter_resources, fleet.params)
    prog = build_multi_period(fleet)
    row = prog.row("start_lag[gas-01,0]")
    ysg = prog.var("y_sg", "gas-01", 0).index
    yst = prog.var("y_st", "gas-01", 0).index
    assert row.coeffs == {ysg: 1.0, yst: -1.0} and row.rhs == 0.0


def test_commitment_fixing_rows():
    opts = BuildOptions(relax_binaries=True,
                        fix_commitment={"gas-01": 1.0, "gas-02": 0.0})
    prog = build_single_period(gb(), opts)
    assert prog.row("commit[gas-01,0]").rhs == 1.0
    assert prog.row("commit[gas-02,0]").rhs == 0.0
    assert "commit[gas-03,0]" not in prog.handles


def test_symmetry_groups_cover_gas_fleet():
    prog = build_single_period(gb())
    groups = prog.meta["symmetry_groups"]
    assert len(groups) == 1 and len(groups[0]) == 50


def test_infeasible_demand_reported_as_diagnostic():
    fleet = gb(0.0, 0.0, 0.0)
    params = fleet.params.__class__(**{**fleet.params.__dict__,
                                       "demand": (40_000.0,)})
    fleet = fleet.__class__(fleet.generators, fleet.inverter_resources, params)
    prog = build_single_period(fleet)
    assert any(d.severity == "error" for d in prog.diagnostics)


def test_dump_text_round_trips_structure():
    prog = build_single_period(gb(10_000.0, 0.15, 0.30))
    text = prog.dump_text()
    assert text.startswith("conicprogram format=1")
    assert f"vars {len(prog.vars)}" in text
    assert "nadir[0]" in text
