"""Schedule, emulate and compare the cv-demo preset, then check how
robust the four qualitative outcomes are to the sub-step count."""

import argparse

from lvdc_ems.analysis import compare, report_table
from lvdc_ems.emulator import ElectricalBatteryModel, emulate
from lvdc_ems.model import solve_day_ahead
from lvdc_ems.presets import cv_demo


def outcomes(rep) -> dict:
    return {
        "cv_limited": rep.cv_limited_hours > 0,
        "charge_short": rep.realized_charge_kwh < rep.planned_charge_kwh,
        "cost_up": rep.realized_cost > rep.planned_cost,
        "soe_below_plan": rep.soe_est_final < rep.soe_plan_final,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--substeps", type=int, nargs="+", default=[20, 60, 120, 240])
    ap.add_argument("--bms", action="store_true", help="enable the BMS cut-off")
    args = ap.parse_args()

    scn = cv_demo()
    sched = solve_day_ahead(scn)
    model = ElectricalBatteryModel(bms=args.bms)
    for k in args.substeps:
        rep = compare(scn, sched, emulate(scn, sched, model, substeps_per_step=k))
        flags = " ".join(f"{n}={'y' if v else 'n'}" for n, v in outcomes(rep).items())
        print(f"substeps {k:4d}: cost error {rep.cost_error_pct:+.3f} %, "
              f"SoE {rep.soe_plan_final:.4f} -> {rep.soe_est_final:.4f}, {flags}")
    print()
    print(report_table(compare(scn, sched, emulate(scn, sched, model))), end="")


if __name__ == "__main__":
    main()
