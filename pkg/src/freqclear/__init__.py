"""freqclear: frequency-secured unit commitment with ancillary-service
shadow pricing for low-inertia power systems."""

from .conic_program import (BuildOptions, ConicProgram, ProgramBuilder,
                            build_multi_period, build_single_period, relax,
                            soc_standard_form_check)
from .frequency_dynamics import (DispatchPoint, FrequencyTrace, SecurityReport,
                                 analytic_nadir, check_security,
                                 recovery_profile, response_profile,
                                 simulate_post_fault)
from .pricing import (PriceReport, Settlement, canonical_schedule,
                      chp_equivalence_check, dispatchable_prices,
                      restricted_prices, settle)
from .runner import (PRESETS, SweepSpec, SweepResult, emit_outputs,
                     run_multi_period, run_sweep)
from .solver.bnb import solve_misocp
from .solver.kkt import verify_kkt
from .solver.standard_form import Solution, solve_socp
from .system_model import (FleetSpec, GeneratorSpec, InverterResourceSpec,
                           SystemParams, build_gb_reference_fleet,
                           load_scenario, save_scenario, serialize, validate)

__version__ = "0.1.0"

__all__ = [
    "BuildOptions", "ConicProgram", "ProgramBuilder", "build_multi_period",
    "build_single_period", "relax", "soc_standard_form_check",
    "DispatchPoint", "FrequencyTrace", "SecurityReport", "analytic_nadir",
    "check_security", "recovery_profile", "response_profile",
    "simulate_post_fault",
    "PriceReport", "Settlement", "canonical_schedule",
    "chp_equivalence_check", "dispatchable_prices", "restricted_prices",
    "settle",
    "PRESETS", "SweepSpec", "SweepResult", "emit_outputs",
    "run_multi_period", "run_sweep",
    "solve_misocp", "verify_kkt", "Solution", "solve_socp",
    "FleetSpec", "GeneratorSpec", "InverterResourceSpec", "SystemParams",
    "build_gb_reference_fleet", "load_scenario", "save_scenario",
    "serialize", "validate",
]
