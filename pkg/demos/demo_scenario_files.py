"""Scenario files: writing, loading, validation, and rejection.

Serializes the reference fleet to the versioned scenario format, reads it
back field-for-field, then shows the two failure classes: an invariant
violation (a grid-following resource claiming synthetic inertia) and the
frequency-regime precondition (an EFR delivery window too slow for the
closed-form nadir constraint to be exhaustive).
"""

from pathlib import Path

from freqclear import build_gb_reference_fleet, load_scenario, save_scenario
from freqclear.system_model import (RegimeConditionError,
                                    ScenarioInvariantError, fleet_from_mapping)

OUT = Path(__file__).parent / "output" / "scenario_files"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    fleet = build_gb_reference_fleet(17_500.0, 0.15, 0.30, 5.0, 0.05)
    path = OUT / "gb_reference.scenario"
    save_scenario(fleet, path)
    again = load_scenario(path)
    print(f"wrote {path} ({path.stat().st_size} bytes)")
    print(f"round-trip identical: {again == fleet}")

    base = dict(f0=50.0, delta_f_max=0.8, rocof_max=1.0, t_efr=1.0,
                t_pfr=10.0, k_rec=0.05, p_loss=1800.0, demand=1000.0)
    try:
        fleet_from_mapping({
            "format": 1, "system": base,
            "generator": [dict(id="g1", p_max=2000.0, p_msg=100.0,
                               c_nl=0.0, c_m=10.0)],
            "inverter_resource": [dict(id="w1", p_max=100.0, p_avail=50.0,
                                       control="GFL", h=3.0)],
        })
    except ScenarioInvariantError as exc:
        print(f"invariant violation rejected: {exc}")

    try:
        fleet_from_mapping({"format": 1,
                            "system": {**base, "t_efr": 1.7}})
    except RegimeConditionError as exc:
        print(f"regime precondition rejected: {exc}")


if __name__ == "__main__":
    main()
