"""Wind-availability sweep with 15% EFR-capable wind.

Sweeps available wind from 0 to 30 GW and prints the EFR price curve with
its four regimes: cheap while synchronous plant covers the nadir anyway,
pegged to the energy price once curtailing EFR wind becomes the marginal
energy action, scarce and expensive while all EFR capability is used, and
zero once the nadir constraint goes slack.
"""

from pathlib import Path

from freqclear import SweepSpec, emit_outputs, run_sweep

OUT = Path(__file__).parent / "output" / "efr_value_sweep"


def main():
    spec = SweepSpec(preset="efr15",
                     wind_grid=tuple(1000.0 * g for g in range(0, 31)))
    result = run_sweep(spec)
    emit_outputs(result, OUT)
    print("wind_GW  energy   EFR      PFR      inertia  binding")
    for pt in result.points:
        rep = pt.reports["dispatchable"]
        flags = ",".join(sorted(rep.binding[0])) or "-"
        print(f"{pt.wind_mw / 1e3:6.1f}  {rep.energy[0]:7.2f}  "
              f"{rep.efr[0]:7.2f}  {rep.pfr[0]:7.2f}  "
              f"{rep.sync_inertia[0]:7.3f}  {flags}")
    fails = result.failures
    print(f"\n{len(result.points) - len(fails)}/{len(result.points)} points "
          f"solved; CSVs and plot data in {OUT}")


if __name__ == "__main__":
    main()
