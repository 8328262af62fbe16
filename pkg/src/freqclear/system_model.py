"""Domain model: generators, inverter-based resources, grid parameters.

The data model is deliberately flat: a fleet is a list of thermal generator
specs plus a list of inverter-resource specs (wind modelled as sub-fleet
aggregates) and one block of system-wide constants.  Everything is immutable
after construction and safe to share between concurrent solves.

Units are MW, MW*s, seconds, hours and GBP throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib as _toml
except ImportError:  # python < 3.11
    import tomli as _toml

SCENARIO_FORMAT_VERSION = 1

GFL = "GFL"
GFM = "GFM"
ENERGY_ONLY = "energy_only"
CONTROL_KINDS = (GFL, GFM, ENERGY_ONLY)

RESPONSE_PFR = "PFR"
RESPONSE_NONE = "none"


class ScenarioError(ValueError):
    """Base class for scenario ingestion failures."""

    def __init__(self, message, field_name=None, line=None):
        self.field_name = field_name
        self.line = line
        where = ""
        if field_name:
            where = f" [field: {field_name}]"
        if line is not None:
            where += f" [line: {line}]"
        super().__init__(message + where)


class ScenarioParseError(ScenarioError):
    """The file is not syntactically valid scenario text."""


class ScenarioInvariantError(ScenarioError):
    """A parsed value violates a type invariant."""


class RegimeConditionError(ScenarioError):
    """T_EFR >= 2*delta_f_max/RoCoF_max: the closed-form nadir constraint
    would not be exhaustive for this parameter set."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    field_name: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.field_name}: {self.message}"


@dataclass(frozen=True)
class GeneratorSpec:
    id: str
    p_max: float
    p_msg: float  # minimum stable generation
    c_nl: float   # no-load cost, GBP/h
    c_m: float    # marginal cost, GBP/MWh
    c_st: float = 0.0  # start-up cost, GBP
    h: float = 0.0     # inertia constant, s
    r_max: float = 0.0  # PFR capacity, MW
    t_st: int = 0   # start-up lead time, h
    t_mut: int = 0  # minimum up time, h
    t_mdt: int = 0  # minimum down time, h
    provides_inertia: bool = True
    response_kind: str = RESPONSE_NONE
    must_run: bool = False
    initially_on: bool = False

    @property
    def inertia_mws(self) -> float:
        """Inertia contribution when committed, H_g * P^max_g (MW*s)."""
        return self.h * self.p_max if self.provides_inertia else 0.0


@dataclass(frozen=True)
class InverterResourceSpec:
    id: str
    p_max: float          # rated power, MW
    p_avail: float        # available power this period, MW
    control: str = ENERGY_ONLY
    h: float = 0.0        # synthetic inertia constant, s (GFM only)
    h_optimizable: bool = False
    h_lo: float = 0.0
    h_hi: float = 0.0
    r_max: float = 0.0    # EFR capacity, MW (GFL with droop only)
    alpha: float = 0.0    # forecast-error fraction of p_max


@dataclass(frozen=True)
class SystemParams:
    f0: float            # Hz
    delta_f_max: float   # Hz
    rocof_max: float     # Hz/s
    t_efr: float         # s
    t_pfr: float         # s
    k_rec: float         # 1/s
    p_loss: float        # MW, largest infeed
    demand: tuple        # MW; length 1 (single period) or 24
    initial_commitment: str = "all_offline"  # all_offline | all_online | free

    @property
    def n_periods(self) -> int:
        return len(self.demand)

    @property
    def rocof_inertia_floor(self) -> float:
        """Minimum total inertia (MW*s) admissible under the RoCoF limit."""
        return self.p_loss * self.f0 / (2.0 * self.rocof_max)


@dataclass(frozen=True)
class FleetSpec:
    generators: tuple
    inverter_resources: tuple
    params: SystemParams

    def generator(self, unit_id: str) -> GeneratorSpec:
        for g in self.generators:
            if g.id == unit_id:
                return g
        raise KeyError(unit_id)

    def resource(self, res_id: str) -> InverterResourceSpec:
        for r in self.inverter_resources:
            if r.id == res_id:
                return r
        raise KeyError(res_id)


def _as_demand_tuple(demand) -> tuple:
    if isinstance(demand, (int, float)):
        return (float(demand),)
    seq = tuple(float(d) for d in demand)
    if len(seq) not in (1, 24):
        raise ScenarioInvariantError(
            f"demand must be a scalar or a 24-vector, got length {len(seq)}",
            field_name="demand")
    return seq


def make_system_params(f0, delta_f_max, rocof_max, t_efr, t_pfr, k_rec,
                       p_loss, demand, initial_commitment="all_offline"):
    params = SystemParams(
        f0=float(f0), delta_f_max=float(delta_f_max),
        rocof_max=float(rocof_max), t_efr=float(t_efr), t_pfr=float(t_pfr),
        k_rec=float(k_rec), p_loss=float(p_loss),
        demand=_as_demand_tuple(demand),
        initial_commitment=initial_commitment)
    diags = _validate_params(params)
    _raise_on_errors(diags)
    return params


def _validate_params(p: SystemParams):
    diags = []
    for name in ("f0", "delta_f_max", "rocof_max", "t_efr", "t_pfr",
                 "k_rec", "p_loss"):
        if getattr(p, name) <= 0:
            diags.append(Diagnostic("error", name, "must be strictly positive"))
    if any(d < 0 for d in p.demand):
        diags.append(Diagnostic("error", "demand", "must be nonnegative"))
    if p.t_efr >= p.t_pfr:
        diags.append(Diagnostic("error", "t_efr", "t_efr must be < t_pfr"))
    if p.initial_commitment not in ("all_offline", "all_online", "free"):
        diags.append(Diagnostic("error", "initial_commitment",
                                f"unknown mode {p.initial_commitment!r}"))
    # Exhaustiveness condition for the closed-form nadir regime: an EFR
    # service slower than 2*df_max/rocof_max could place the nadir inside
    # the EFR ramp while still meeting the RoCoF limit.
    limit = 2.0 * p.delta_f_max / p.rocof_max
    if p.t_efr >= limit:
        diags.append(Diagnostic(
            "error", "t_efr",
            f"t_efr = {p.t_efr} s >= 2*delta_f_max/rocof_max = {limit} s; "
            "the nadir constraint regime is not exhaustive"))
    return diags


def validate(fleet: FleetSpec):
    """Check every type invariant; returns diagnostics, never raises."""
    diags = list(_validate_params(fleet.params))
    seen = set()
    for g in fleet.generators:
        pre = f"generator[{g.id}]"
        if g.id in seen:
            diags.append(Diagnostic("error", pre, "duplicate id"))
        seen.add(g.id)
        if not (0 <= g.p_msg <= g.p_max):
            diags.append(Diagnostic("error", pre + ".p_msg",
                                    "requires 0 <= p_msg <= p_max"))
        if g.r_max < 0 or g.h < 0:
            diags.append(Diagnostic("error", pre, "r_max and h must be >= 0"))
        if min(g.c_nl, g.c_m, g.c_st) < 0:
            diags.append(Diagnostic("error", pre, "costs must be >= 0"))
        for name in ("t_st", "t_mut", "t_mdt"):
            v = getattr(g, name)
            if v < 0 or int(v) != v:
                diags.append(Diagnostic(
                    "error", f"{pre}.{name}",
                    "must be a nonnegative whole number of periods"))
        if g.response_kind not in (RESPONSE_PFR, RESPONSE_NONE):
            diags.append(Diagnostic("error", pre + ".response_kind",
                                    f"unknown kind {g.response_kind!r}"))
        if g.response_kind == RESPONSE_NONE and g.r_max > 0:
            diags.append(Diagnostic("warning", pre + ".r_max",
                                    "response capacity ignored without a response kind"))
    for r in fleet.inverter_resources:
        pre = f"inverter_resource[{r.id}]"
        if r.id in seen:
            diags.append(Diagnostic("error", pre, "duplicate id"))
        seen.add(r.id)
        if not (0 <= r.p_avail <= r.p_max) and r.p_max > 0:
            diags.append(Diagnostic("error", pre + ".p_avail",
                                    "requires 0 <= p_avail <= p_max"))
        if r.p_max == 0 and r.p_avail != 0:
            diags.append(Diagnostic("error", pre + ".p_avail",
                                    "zero-capacity resource with availability"))
        if r.r_max < 0:
            diags.append(Diagnostic("error", pre + ".r_max", "must be >= 0"))
        if not (0 <= r.alpha <= 1):
            diags.append(Diagnostic("error", pre + ".alpha", "must lie in [0, 1]"))
        if r.control not in CONTROL_KINDS:
            diags.append(Diagnostic("error", pre + ".control",
                                    f"unknown control {r.control!r}"))
        if r.control == GFL and r.h != 0:
            diags.append(Diagnostic("error", pre + ".h",
                                    "GFL cannot carry synthetic inertia constant"))
        if r.control == ENERGY_ONLY and (r.h != 0 or r.r_max != 0):
            diags.append(Diagnostic("error", pre,
                                    "energy-only resources must have h = 0 and r_max = 0"))
        if r.h < 0 or r.h_lo < 0 or r.h_hi < r.h_lo:
            diags.append(Diagnostic("error", pre + ".h",
                                    "requires h >= 0 and 0 <= h_lo <= h_hi"))
    cap = (sum(g.p_max for g in fleet.generators)
           + sum(r.p_avail for r in fleet.inverter_resources))
    if cap < max(fleet.params.demand):
        diags.append(Diagnostic(
            "error", "demand",
            f"aggregate capacity {cap:.0f} MW cannot meet peak demand "
            f"{max(fleet.params.demand):.0f} MW"))
    return diags


def _raise_on_errors(diags):
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        first = errors[0]
        cls = ScenarioInvariantError
        if "nadir constraint regime" in first.message:
            cls = RegimeConditionError
        raise cls("; ".join(str(d) for d in errors), field_name=first.field_name)


def make_fleet(generators, inverter_resources, params) -> FleetSpec:
    fleet = FleetSpec(generators=tuple(generators),
                      inverter_resources=tuple(inverter_resources),
                      params=params)
    _raise_on_errors(validate(fleet))
    return fleet


# ---------------------------------------------------------------------------
# Great Britain reference fleet
# ---------------------------------------------------------------------------

GB_WIND_INSTALLED = 30_000.0   # MW
GB_N_GAS = 50
GB_GAS_P_MAX = 550.0
GB_GAS_P_MSG = 250.0
GB_GAS_C_NL = 500.0
GB_GAS_C_M = 50.0
GB_GAS_H = 5.0
GB_GAS_RESP_FRACTION = 0.20
GB_WIND_EFR_FRACTION_OF_AVAIL = 0.30
GB_DEMAND = 25_000.0
GB_P_LOSS = 1_800.0


def build_gb_reference_fleet(wind_available, wind_efr_fraction,
                             wind_gfm_fraction, h_gfm, k_rec, *,
                             c_st=10_000.0, demand=GB_DEMAND,
                             initial_commitment="all_offline",
                             alpha=0.0) -> FleetSpec:
    """Deterministic construction of the reference Great Britain system.

    One must-run 1800 MW nuclear unit (no usable inertia: it defines the
    largest loss, so its own inertia cannot be counted), 50 identical gas
    units, and a 30 GW wind fleet split into energy-only / GFL-with-EFR /
    GFM sub-fleets by the two fractions.  `wind_available` is the fleet-wide
    available wind power and is shared pro rata by the sub-fleets.
    """
    if not (0 <= wind_efr_fraction <= 1 and 0 <= wind_gfm_fraction <= 1):
        raise ValueError("sub-fleet fractions must lie in [0, 1]")
    if wind_efr_fraction + wind_gfm_fraction > 1 + 1e-12:
        raise ValueError("sub-fleet fractions must sum to at most 1")
    wind_available = min(float(wind_available), GB_WIND_INSTALLED)

    gens = [GeneratorSpec(
        id="nuclear-1", p_max=1800.0, p_msg=1800.0, c_nl=0.0, c_m=10.0,
        c_st=0.0, h=0.0, r_max=0.0, provides_inertia=False,
        response_kind=RESPONSE_NONE, must_run=True, initially_on=True)]
    online = initial_commitment == "all_online"
    for i in range(GB_N_GAS):
        gens.append(GeneratorSpec(
            id=f"gas-{i + 1:02d}", p_max=GB_GAS_P_MAX, p_msg=GB_GAS_P_MSG,
            c_nl=GB_GAS_C_NL, c_m=GB_GAS_C_M, c_st=c_st, h=GB_GAS_H,
            r_max=GB_GAS_RESP_FRACTION * GB_GAS_P_MAX,
            t_st=4, t_mut=4, t_mdt=1,
            provides_inertia=True, response_kind=RESPONSE_PFR,
            initially_on=online))

    eo_share = 1.0 - wind_efr_fraction - wind_gfm_fraction
    shares = (("wind-energy", eo_share, ENERGY_ONLY),
              ("wind-efr", wind_efr_fraction, GFL),
              ("wind-gfm", wind_gfm_fraction, GFM))
    resources = []
    for rid, share, control in shares:
        p_max = share * GB_WIND_INSTALLED
        p_avail = share * wind_available
        r_max = (GB_WIND_EFR_FRACTION_OF_AVAIL * p_avail
                 if control == GFL else 0.0)
        resources.append(InverterResourceSpec(
            id=rid, p_max=p_max, p_avail=p_avail, control=control,
            h=h_gfm if control == GFM else 0.0,
            r_max=r_max, alpha=alpha))

    params = make_system_params(
        f0=50.0, delta_f_max=0.8, rocof_max=1.0, t_efr=1.0, t_pfr=10.0,
        k_rec=k_rec, p_loss=GB_P_LOSS, demand=demand,
        initial_commitment=initial_commitment)
    return make_fleet(gens, resources, params)


# ---------------------------------------------------------------------------
# Scenario file ingestion (format = 1, TOML-subset: [system], [[generator]],
# [[inverter_resource]]).  See docs/formats.md.
# ---------------------------------------------------------------------------

_GEN_FIELDS = {f.name for f in fields(GeneratorSpec)}
_RES_FIELDS = {f.name for f in fields(InverterResourceSpec)}
_SYS_FIELDS = {f.name for f in fields(SystemParams)}


def load_scenario(path) -> FleetSpec:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}")
    try:
        doc = _toml.loads(raw.decode("utf-8"))
    except _toml.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ScenarioParseError(f"scenario parse failure: {exc}", line=line)
    return fleet_from_mapping(doc)


def fleet_from_mapping(doc) -> FleetSpec:
    if doc.get("format") != SCENARIO_FORMAT_VERSION:
        raise ScenarioParseError(
            f"missing or unsupported 'format' header (expected "
            f"{SCENARIO_FORMAT_VERSION}, got {doc.get('format')!r})",
            field_name="format")
    sys_tbl = doc.get("system")
    if not isinstance(sys_tbl, dict):
        raise ScenarioParseError("missing [system] section", field_name="system")
    unknown = set(sys_tbl) - _SYS_FIELDS
    if unknown:
        raise ScenarioParseError(f"unknown [system] fields: {sorted(unknown)}",
                                 field_name=sorted(unknown)[0])
    try:
        params = make_system_params(**sys_tbl)
    except TypeError as exc:
        raise ScenarioParseError(f"[system] section incomplete: {exc}",
                                 field_name="system")

    def coerce(cls, tbl, allowed, section):
        unknown = set(tbl) - allowed
        if unknown:
            raise ScenarioParseError(
                f"unknown field(s) {sorted(unknown)} in [[{section}]]",
                field_name=f"{section}.{sorted(unknown)[0]}")
        try:
            return cls(**tbl)
        except TypeError as exc:
            raise ScenarioParseError(f"bad [[{section}]] entry: {exc}",
                                     field_name=section)

    gens = [coerce(GeneratorSpec, t, _GEN_FIELDS, "generator")
            for t in doc.get("generator", [])]
    if params.initial_commitment == "all_online":
        gens = [replace(g, initially_on=True) for g in gens]
    res = [coerce(InverterResourceSpec, t, _RES_FIELDS, "inverter_resource")
           for t in doc.get("inverter_resource", [])]
    return make_fleet(gens, res, params)


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_fmt_value(x) for x in v) + "]"
    if isinstance(v, float) and v == int(v) and abs(v) < 1e15:
        return f"{v:.1f}"
    return repr(v)


def serialize(fleet: FleetSpec) -> str:
    """Scenario text that round-trips through `load_scenario` field-for-field."""
    out = [f"format = {SCENARIO_FORMAT_VERSION}", "", "[system]"]
    p = fleet.params
    for f in fields(SystemParams):
        v = getattr(p, f.name)
        if f.name == "demand" and len(v) == 1:
            v = v[0]
        out.append(f"{f.name} = {_fmt_value(v)}")
    for g in fleet.generators:
        out += ["", "[[generator]]"]
        out += [f"{f.name} = {_fmt_value(getattr(g, f.name))}"
                for f in fields(GeneratorSpec)]
    for r in fleet.inverter_resources:
        out += ["", "[[inverter_resource]]"]
        out += [f"{f.name} = {_fmt_value(getattr(r, f.name))}"
                for f in fields(InverterResourceSpec)]
    return "\n".join(out) + "\n"


def save_scenario(fleet: FleetSpec, path) -> None:
    Path(path).write_text(serialize(fleet), encoding="utf-8")
