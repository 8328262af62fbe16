"""The four Great Britain operating conditions, end to end.

Builds each fleet, solves the mixed-integer program, prices it with the
dispatchable method, settles every participant, and prints the operating
condition in the familiar table layout: zero wind, 20 GW wind without
services, 20 GW with 15% EFR-capable wind, and 20 GW with 30% grid-forming
wind.
"""

from freqclear import (build_gb_reference_fleet, canonical_schedule,
                       dispatchable_prices, settle)

CASES = [
    ("0 GW wind, no wind services", 0.0, 0.0, 0.0),
    ("20 GW wind, no wind services", 20_000.0, 0.0, 0.0),
    ("20 GW wind, 15% EFR-capable", 20_000.0, 0.15, 0.0),
    ("20 GW wind, 30% grid-forming", 20_000.0, 0.0, 0.30),
]

GAS = [f"gas-{i + 1:02d}" for i in range(50)]


def main():
    for label, wind, efr, gfm in CASES:
        fleet = build_gb_reference_fleet(wind, efr, gfm, 5.0, 0.05)
        mip, relaxed, prices = dispatchable_prices(fleet)
        sched = canonical_schedule(fleet, None, mip)
        st = settle(sched, prices, fleet)

        gas_on = sum(1 for u in GAS if mip.value("y_g", u, 0) > 0.5)
        gas_p = sum(sched.value("P_g", u, 0) for u in GAS)
        gas_r = sum(sched.value("R_g", u, 0) for u in GAS)
        print(f"\n=== {label} ===")
        print(f"gas units committed:   {gas_on}")
        print(f"gas power / response:  {gas_p / 1e3:.2f} GW / {gas_r / 1e3:.2f} GW")
        for rid in ("wind-energy", "wind-efr", "wind-gfm"):
            res = fleet.resource(rid)
            if res.p_max == 0:
                continue
            curt = sched.value("P_curt_i", rid, 0)
            r_i = sched.value("R_i", rid, 0)
            print(f"{rid:13s} delivered {(res.p_avail - curt) / 1e3:5.2f} GW, "
                  f"EFR {r_i / 1e3:.2f} GW")
        print(f"energy price:          {prices.energy[0]:8.2f} GBP/MWh")
        print(f"sync inertia price:    {prices.sync_inertia[0]:8.2f} GBP/MW*s")
        print(f"synt inertia price:    {prices.synt_inertia[0]:8.2f} GBP/MW*s")
        print(f"EFR / PFR price:       {prices.efr[0]:8.2f} / "
              f"{prices.pfr[0]:.2f} GBP/MW")
        gas_cost = sum(st[u].operating_cost for u in GAS)
        gas_rev = {k: sum(getattr(st[u], k) for u in GAS)
                   for k in ("energy_revenue", "response_revenue",
                             "inertia_revenue", "make_whole")}
        print(f"gas operating cost:    {gas_cost / 1e3:8.2f} kGBP")
        print(f"gas revenue (E/R/H):   {gas_rev['energy_revenue'] / 1e3:.2f} / "
              f"{gas_rev['response_revenue'] / 1e3:.2f} / "
              f"{gas_rev['inertia_revenue'] / 1e3:.2f} kGBP, "
              f"make-whole {gas_rev['make_whole'] / 1e3:.2f} kGBP")
        for rid in ("wind-efr", "wind-gfm"):
            if fleet.resource(rid).p_max > 0:
                print(f"{rid} revenue:      response "
                      f"{st[rid].response_revenue / 1e3:.2f} kGBP, inertia "
                      f"{st[rid].inertia_revenue / 1e3:.2f} kGBP")


if __name__ == "__main__":
    main()
