import math

import numpy as np
import pytest

from freqclear.frequency_dynamics import (
    DispatchPoint, NadirNotReachedError, analytic_nadir, check_security,
    default_t_rec, recovery_profile, response_profile, sample_secure_points,
    simulate_post_fault,
)
from freqclear.system_model import make_system_params

GB = make_system_params(50.0, 0.8, 1.0, 1.0, 10.0, 0.05, 1800.0, 25_000.0)


def point(h_sync=90_000.0, h_synt=0.0, r_efr=0.0, r_pfr=0.0, p_loss=1800.0,
          params=GB):
    return DispatchPoint(h_sync=h_sync, h_synt=h_synt, r_efr=r_efr,
                         r_pfr=r_pfr, p_loss=p_loss, params=params)


def test_response_profile_ramps():
    pt = point(r_efr=400.0, r_pfr=3000.0)
    assert response_profile(0.0, pt) == 0.0
    only_efr = point(r_efr=400.0, r_pfr=0.0)
    assert response_profile(GB.t_efr / 2, only_efr) == pytest.approx(200.0)
    assert response_profile(GB.t_pfr, pt) == pytest.approx(3400.0)
    assert response_profile(50.0, pt) == pytest.approx(3400.0)


def test_recovery_profile_step():
    pt = point(h_synt=30_000.0)
    t_rec = default_t_rec(GB)
    assert recovery_profile(t_rec, pt) == 0.0          # right-open step
    assert recovery_profile(t_rec + 1e-9, pt) == pytest.approx(1500.0)
    assert recovery_profile(3.0, pt) == 0.0
    none = point(h_synt=0.0)
    assert recovery_profile(100.0, none) == 0.0


def test_zero_response_linear_decline():
    pt = point(h_sync=90_000.0)
    trace = simulate_post_fault(pt, horizon=2.0, dt=0.1)
    # d(df)/dt = -f0 P_L / (2H) = -0.5 Hz/s exactly
    expected = -50.0 * 1800.0 * trace.times / (2 * 90_000.0)
    assert np.allclose(trace.delta_f, expected, atol=1e-12)
    assert trace.nadir_depth == pytest.approx(1.0)


def test_simulation_settles_when_qss_tight():
    # r_efr + r_pfr = p_loss + k_rec*h_synt -> flat second equilibrium
    h_synt = 20_000.0
    pt = point(h_sync=80_000.0, h_synt=h_synt, r_efr=500.0,
               r_pfr=1800.0 + 0.05 * h_synt - 500.0)
    trace = simulate_post_fault(pt, horizon=30.0, dt=0.05)
    tail = trace.delta_f[trace.times > default_t_rec(GB)]
    assert np.ptp(tail) < 1e-9
    assert trace.second_nadir_depth is not None
    assert trace.second_nadir_depth == pytest.approx(-tail[-1])


def test_nadir_time_formula():
    pt = point(h_sync=112_750.0, r_efr=0.0, r_pfr=4490.0)
    t_n, _ = analytic_nadir(pt)
    assert t_n == pytest.approx(1800.0 * 10.0 / 4490.0)
    assert t_n == pytest.approx(4.009, abs=5e-4)


def test_nadir_equality_point_hits_delta_f_max():
    # pick R_G so the closed-form nadir inequality is exactly tight
    h = 112_750.0
    r_pfr = 1800.0 ** 2 * 10.0 * 50.0 / (4 * 0.8 * h)
    pt = point(h_sync=h, r_pfr=r_pfr)
    _, depth = analytic_nadir(pt)
    assert depth == pytest.approx(0.8, abs=1e-12)
    trace = simulate_post_fault(pt)
    assert trace.nadir_depth == pytest.approx(0.8, abs=1e-6)


def test_analytic_matches_simulation_randomly():
    for i, pt in enumerate(sample_secure_points(100, GB, seed=7)):
        t_n, depth = analytic_nadir(pt)
        trace = simulate_post_fault(pt)
        assert abs(depth - trace.nadir_depth) <= 1e-6, (i, pt)
        if depth > 1e-9:
            assert abs(t_n - trace.nadir_time) <= 1e-6


def test_efr_covering_loss_dips_within_ramp():
    # r_efr = p_loss: the decline is arrested during the EFR ramp and the
    # depth is bounded by the RoCoF-limited initial slope times the dip time
    pt = point(h_sync=60_000.0, r_efr=1800.0, r_pfr=1000.0)
    t_n, depth = analytic_nadir(pt)
    assert 0 < t_n < GB.t_efr
    rocof0 = 50.0 * 1800.0 / (2 * 60_000.0)
    assert depth <= rocof0 * t_n + 1e-12
    trace = simulate_post_fault(pt)
    assert depth == pytest.approx(trace.nadir_depth, abs=1e-9)


def test_nadir_unreachable_without_pfr():
    with pytest.raises(NadirNotReachedError):
        analytic_nadir(point(h_sync=90_000.0, r_efr=900.0, r_pfr=0.0))


def test_zero_inertia_rejected():
    with pytest.raises(ValueError):
        simulate_post_fault(point(h_sync=0.0))


def test_monotonicity_in_inertia_and_efr():
    base = point(h_sync=60_000.0, r_efr=400.0, r_pfr=2500.0)
    d0 = simulate_post_fault(base).nadir_depth
    more_h = point(h_sync=90_000.0, r_efr=400.0, r_pfr=2500.0)
    assert simulate_post_fault(more_h).nadir_depth <= d0 + 1e-12
    more_efr = point(h_sync=60_000.0, r_efr=800.0, r_pfr=2500.0)
    assert simulate_post_fault(more_efr).nadir_depth <= d0 + 1e-12


def test_check_security_rocof_margin_zero():
    pt = point(h_sync=45_000.0, r_efr=0.0, r_pfr=4000.0)
    rep = check_security(pt)
    assert rep.margins["rocof"] == pytest.approx(0.0, abs=1e-9)
    assert rep.rocof_ok


def test_check_security_qss_margin_zero():
    pt = point(h_sync=120_000.0, r_efr=900.0, r_pfr=900.0)
    rep = check_security(pt)
    assert rep.margins["qss"] == pytest.approx(0.0, abs=1e-9)


def test_check_security_table_volumes():
    # 41 gas units: H = 41*5*550; response 4.49 GW (table-rounded volumes,
    # hence the loose tolerance)
    pt = point(h_sync=41 * 5 * 550.0, r_pfr=4490.0)
    rep = check_security(pt, tol=1e-3)
    assert rep.rocof_ok and rep.nadir_ok and rep.qss_ok
    assert rep.regime_ok


def test_binding_nadir_occurs_after_efr_ramp():
    # regime exhaustiveness: with t_efr < 2*delta_f_max/rocof_max and the
    # RoCoF floor met, a nadir that sits exactly at delta_f_max can only
    # occur after the EFR ramp completes.  Construct boundary points by
    # solving the closed form for r_pfr at depth = delta_f_max.
    rng = np.random.default_rng(11)
    floor = GB.p_loss * GB.f0 / (2 * GB.rocof_max)
    for _ in range(200):
        h = floor * rng.uniform(1.0, 3.0)
        r_efr = GB.p_loss * rng.uniform(0.0, 0.9)
        gap = GB.p_loss - r_efr
        x1 = h / GB.f0 - r_efr * GB.t_efr / (4 * GB.delta_f_max)
        if x1 <= 0:
            continue
        r_pfr = gap * gap * GB.t_pfr / (4 * GB.delta_f_max * x1)
        if r_pfr < gap:
            continue  # boundary point would sit beyond PFR saturation
        pt = point(h_sync=h, r_efr=r_efr, r_pfr=r_pfr)
        t_n, depth = analytic_nadir(pt)
        assert depth == pytest.approx(GB.delta_f_max, abs=1e-9)
        assert t_n > GB.t_efr


def test_trace_csv_export(tmp_path):
    pt = point(h_sync=90_000.0, r_pfr=2500.0)
    trace = simulate_post_fault(pt, horizon=5.0, dt=0.5)
    out = tmp_path / "trace.csv"
    trace.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,delta_f"
    assert len(lines) == len(trace.times) + 1
