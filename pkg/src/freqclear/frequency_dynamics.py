"""Post-contingency frequency model.

The swing equation with linear EFR/PFR ramps and a synthetic-inertia
recovery step has a piecewise-linear right-hand side, so the frequency
deviation is integrated exactly segment by segment (piecewise quadratic).
That makes this module trustworthy to machine precision as the independent
oracle against which optimizer output is cross-checked.

Sign convention: `delta_f(t)` is the signed deviation in Hz (negative while
frequency is depressed); depths are reported as positive numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .system_model import SystemParams

DEFAULT_T_REC_OFFSET = 0.5  # T_rec = t_pfr + 0.5 s unless overridden


class NadirNotReachedError(ValueError):
    """PFR volume is zero and EFR alone cannot arrest the decline."""


@dataclass(frozen=True)
class DispatchPoint:
    """Aggregate post-contingency capability of one dispatch."""
    h_sync: float   # MW*s
    h_synt: float   # MW*s
    r_efr: float    # MW, aggregate EFR headroom
    r_pfr: float    # MW, aggregate PFR headroom
    p_loss: float   # MW
    params: SystemParams

    def __post_init__(self):
        if min(self.h_sync, self.h_synt, self.r_efr, self.r_pfr,
               self.p_loss) < 0:
            raise ValueError("DispatchPoint fields must be nonnegative")

    @property
    def inertia(self) -> float:
        return self.h_sync + self.h_synt


@dataclass(frozen=True)
class FrequencyTrace:
    times: np.ndarray
    delta_f: np.ndarray
    nadir_time: float
    nadir_depth: float
    second_nadir_depth: float | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,delta_f\n")
            for t, df in zip(self.times, self.delta_f):
                fh.write(f"{t:.9g},{df:.12g}\n")


def default_t_rec(params: SystemParams) -> float:
    return params.t_pfr + DEFAULT_T_REC_OFFSET


def response_profile(t: float, point: DispatchPoint) -> float:
    """EFR(t) + PFR(t): linear ramps saturating at t_efr and t_pfr."""
    if t < 0:
        raise ValueError("t must be >= 0")
    p = point.params
    efr = point.r_efr * min(t, p.t_efr) / p.t_efr
    pfr = point.r_pfr * min(t, p.t_pfr) / p.t_pfr
    return efr + pfr


def recovery_profile(t: float, point: DispatchPoint, t_rec=None) -> float:
    """Recovery deficit: 0 up to and including t_rec, k_rec*H_synt after."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t_rec is None:
        t_rec = default_t_rec(point.params)
    if t_rec <= point.params.t_pfr:
        raise ValueError("t_rec must exceed t_pfr")
    return point.params.k_rec * point.h_synt if t > t_rec else 0.0


def _segments(point: DispatchPoint, t_rec: float, horizon: float):
    """Yield (t0, t1, a, m): net power = a + m*(t - t0) on [t0, t1]."""
    p = point.params
    brk = sorted({p.t_efr, p.t_pfr, t_rec})
    edges = [0.0] + [b for b in brk if 0.0 < b < horizon] + [horizon]
    for t0, t1 in zip(edges[:-1], edges[1:]):
        m = 0.0
        if t0 < p.t_efr:
            m += point.r_efr / p.t_efr
        if t0 < p.t_pfr:
            m += point.r_pfr / p.t_pfr
        rec = point.params.k_rec * point.h_synt if t0 >= t_rec else 0.0
        a = response_profile(t0, point) - point.p_loss - rec
        yield t0, t1, a, m


def simulate_post_fault(point: DispatchPoint, horizon: float = None,
                        dt: float = 0.01, t_rec=None) -> FrequencyTrace:
    """Integrate d(df)/dt = f0*(FR - P_L - P_rec) / (2H) exactly.

    The integration is closed-form between ramp breakpoints; `dt` only
    controls the sampling grid of the returned trace.
    """
    p = point.params
    if point.inertia <= 0:
        raise ValueError("zero-inertia dispatch cannot be simulated")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_rec is None:
        t_rec = default_t_rec(p)
    if horizon is None:
        horizon = max(p.t_pfr, t_rec) + 5.0
    c = p.f0 / (2.0 * point.inertia)

    seg = []           # (t0, t1, df0, a, m) with df(t) closed-form inside
    df0 = 0.0
    best = (0.0, 0.0)  # (delta_f, time) of the global minimum
    second = None
    for t0, t1, a, m in _segments(point, t_rec, horizon):
        seg.append((t0, t1, df0, a, m))
        span = t1 - t0
        df1 = df0 + c * (a * span + 0.5 * m * span * span)
        candidates = [(df1, t1)]
        if m > 0 and a < 0 < a + m * span:   # interior stationary minimum
            ts = -a / m
            candidates.append((df0 + c * (a * ts + 0.5 * m * ts * ts), t0 + ts))
        for val, tt in candidates:
            if val < best[0]:
                best = (val, tt)
            if t0 >= t_rec and (second is None or val < second):
                second = val
        df0 = df1

    times = np.arange(0.0, horizon + dt / 2.0, dt)
    times[-1] = min(times[-1], horizon)
    vals = np.empty_like(times)
    k = 0
    for i, t in enumerate(times):
        while k + 1 < len(seg) and t >= seg[k][1]:
            k += 1
        t0, _, d0, a, m = seg[k]
        s = t - t0
        vals[i] = d0 + c * (a * s + 0.5 * m * s * s)

    return FrequencyTrace(
        times=times, delta_f=vals,
        nadir_time=best[1], nadir_depth=max(0.0, -best[0]),
        second_nadir_depth=(max(0.0, -second)
                            if point.h_synt > 0 and second is not None else None))


def _nadir_closed_form(point: DispatchPoint):
    """(t_nadir, depth) ignoring recovery; depth is inf when the combined
    response never covers the loss."""
    p = point.params
    slope = point.r_efr / p.t_efr + point.r_pfr / p.t_pfr
    if slope > 0:
        t1 = point.p_loss / slope
        if t1 <= p.t_efr:
            # arrested while both services still ramp
            depth = p.f0 * point.p_loss * t1 / (4.0 * point.inertia)
            return t1, depth
    if point.r_pfr > 0:
        t2 = (point.p_loss - point.r_efr) * p.t_pfr / point.r_pfr
        if t2 <= p.t_pfr:
            gap = point.p_loss - point.r_efr
            depth = (p.f0 / (2.0 * point.inertia)
                     * (gap * gap * p.t_pfr / (2.0 * point.r_pfr)
                        + point.r_efr * p.t_efr / 2.0))
            return t2, depth
    return math.inf, math.inf


def analytic_nadir(point: DispatchPoint):
    """Closed-form (t_nadir, depth).

    Requires positive inertia and r_efr < p_loss.  With r_pfr = 0 the
    decline is never arrested and a distinct error is raised.
    """
    if point.inertia <= 0:
        raise ValueError("analytic nadir needs positive inertia")
    t_n, depth = _nadir_closed_form(point)
    if math.isinf(depth) and point.r_pfr == 0:
        raise NadirNotReachedError(
            "nadir not reached by PFR: r_pfr = 0 and EFR alone cannot "
            "cover the loss")
    return t_n, depth


@dataclass(frozen=True)
class SecurityReport:
    rocof_ok: bool
    nadir_ok: bool
    qss_ok: bool
    margins: dict
    nadir_depth: float
    t_nadir: float
    regime_ok: bool = True  # t_nadir <= t_pfr (closed-form regime assumption)

    @property
    def all_ok(self) -> bool:
        return self.rocof_ok and self.nadir_ok and self.qss_ok


def check_security(point: DispatchPoint, tol: float = 1e-6,
                   cross_check: bool = True) -> SecurityReport:
    """Evaluate the RoCoF, nadir and quasi-steady-state conditions.

    Margins are signed slack in native units (MW*s / Hz / MW); `tol` is
    the acceptance slack for the boolean flags.  The nadir is evaluated in
    closed form and, when `cross_check` is set, verified against the exact
    simulation.
    """
    p = point.params
    rocof_margin = point.inertia - p.rocof_inertia_floor
    qss_margin = (point.r_efr + point.r_pfr
                  - point.p_loss - p.k_rec * point.h_synt)

    if point.inertia > 0:
        t_n, depth = _nadir_closed_form(point)
    else:
        t_n, depth = 0.0, math.inf
    if cross_check and point.inertia > 0 and math.isfinite(depth):
        sim = simulate_post_fault(point)
        if abs(sim.nadir_depth - depth) > 1e-6:
            depth = max(depth, sim.nadir_depth)
    nadir_margin = p.delta_f_max - depth

    return SecurityReport(
        rocof_ok=rocof_margin >= -tol,
        nadir_ok=nadir_margin >= -tol,
        qss_ok=qss_margin >= -tol,
        margins={"rocof": rocof_margin, "nadir": nadir_margin,
                 "qss": qss_margin},
        nadir_depth=depth, t_nadir=t_n,
        regime_ok=not math.isfinite(t_n) or t_n <= p.t_pfr + tol)


def sample_secure_points(n: int, params: SystemParams, seed: int = 0):
    """Random dispatch points that satisfy all three security conditions.

    Used by the property suite; sampling is rejection-free by construction:
    inertia is drawn above the RoCoF floor, EFR below p_loss, and PFR large
    enough to cover both the q-s-s requirement and the nadir at the drawn
    inertia.
    """
    rng = np.random.default_rng(seed)
    pts = []
    floor = params.rocof_inertia_floor
    while len(pts) < n:
        h_total = floor * rng.uniform(1.0, 4.0)
        h_synt = h_total * rng.uniform(0.0, 0.5)
        r_efr = params.p_loss * rng.uniform(0.0, 0.95)
        gap = params.p_loss - r_efr
        # smallest PFR making the closed-form nadir feasible at this inertia
        x1 = h_total / params.f0 - r_efr * params.t_efr / (4 * params.delta_f_max)
        if x1 <= 0:
            continue
        r_needed = gap * gap * params.t_pfr / (4 * params.delta_f_max * x1)
        r_qss = params.p_loss + params.k_rec * h_synt - r_efr
        r_pfr = max(r_needed, r_qss, 1.0) * rng.uniform(1.0, 2.0)
        pt = DispatchPoint(h_sync=h_total - h_synt, h_synt=h_synt,
                           r_efr=r_efr, r_pfr=r_pfr,
                           p_loss=params.p_loss, params=params)
        if check_security(pt, cross_check=False).all_ok:
            pts.append(pt)
    return pts
