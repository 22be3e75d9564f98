"""Desk-scale default scenario built from the parameter file ``data/desk.yaml``.

Thirteen activities: agriculture, three forestry types, CO2, CH4, N2O and six
fluorinated gases. Gas kernels come from pulse extraction on the box-model
stub; forestry kernels convolve an uptake schedule with the CO2 kernel; the
agriculture kernel is the negated CO2 kernel (uptake in the bid period only).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .auction import Activity, AuctionConfig, CapSchedule, Kind
from .bids import (
    agriculture_bids,
    forestry_bids,
    ingest_mac_stack,
    linear_mac_stack,
    replicate_bids_over_periods,
)
from .kernels import SequestrationSchedule, load_climate_stub, pulse_difference_kernel, vintage_kernel
from .scenario import Scenario

FORESTRY_SCHEDULE_YEARS = 155
HA_TO_KHA = 1e-3
USD_PER_HA_TO_MUSD_PER_KHA = 1e-3
T_PER_HA_TO_MT_PER_KHA = 1e-3

GAS_NAMES = {
    "co2": "CO2",
    "ch4": "CH4",
    "n2o": "N2O",
    "c2f6": "C2F6",
    "cf4": "CF4",
    "hfc125": "HFC125",
    "hfc134a": "HFC134a",
    "hfc143a": "HFC143a",
    "sf6": "SF6",
}


def default_params_path() -> Path:
    return Path(str(resources.files("warming_market") / "data" / "desk.yaml"))


def forestry_schedule(lifetime_t: float, peak_age: float, years: int = FORESTRY_SCHEDULE_YEARS) -> SequestrationSchedule:
    """Uptake per hectare, ``N[j] ~ j exp(-j / peak_age)``, summing to ``lifetime_t`` over ``years``."""
    j = np.arange(years, dtype=float)
    shape = j * np.exp(-j / peak_age)
    return SequestrationSchedule(tuple(lifetime_t * shape / shape.sum()))


def desk_scenario(params_path: str | Path | None = None, first_constrained_year: float | None = None) -> Scenario:
    path = Path(params_path) if params_path else default_params_path()
    with open(path) as fh:
        p = yaml.safe_load(fh)
    cal = p["calendar"]
    start, ppy = float(cal["start_year"]), int(cal["periods_per_year"])

    def period_of(year):
        return int(round((year - start) * ppy)) + 1

    T_B, T = period_of(cal["bid_through_year"]), period_of(cal["cap_through_year"])
    horizon = T + 1

    stub = load_climate_stub(path)
    kernels, activities = {}, []
    for gas, name in GAS_NAMES.items():
        k = pulse_difference_kernel(stub, gas, 0.5, horizon, kernel_id=f"w_{gas}")
        kernels[k.id] = k
        activities.append(Activity(gas, name, Kind.EMISSION, k.unit, k.id))

    co2 = kernels["w_co2"]
    kernels["w_agriculture"] = co2.negated("w_agriculture")
    activities.insert(0, Activity("agriculture", "Agriculture", Kind.SEQUESTRATION, "Mt", "w_agriculture"))
    forest = p["forestry"]
    for i, (tree, shape) in enumerate(forest["types"].items()):
        sched = forestry_schedule(shape["lifetime_t"], shape["peak_age"])
        kid = f"w_{tree}"
        kernels[kid] = vintage_kernel(sched, co2, T_PER_HA_TO_MT_PER_KHA, kernel_id=kid, unit="kha")
        activities.insert(1 + i, Activity(tree, tree.replace("_", " ").title(), Kind.SEQUESTRATION, "kha", kid))

    stacks = []
    ag = p["agriculture"]
    stacks.append(agriculture_bids(ag["price_step"], ag["price_max"], ag["cap_qty"]))
    for stack in forestry_bids(
        forest["total_area_ha"],
        forest["ramp_years"],
        len(forest["types"]),
        forest["qty_step_ha"],
        forest["price_low"],
        forest["price_high"],
        types=list(forest["types"]),
    ):
        stacks.append(stack.scaled(HA_TO_KHA, USD_PER_HA_TO_MUSD_PER_KHA))
    cur, mac = p["currency"], p["co2_mac"]
    stacks.append(
        ingest_mac_stack(
            path.parent / mac["file"],
            cur["eur_to_usd"],
            cur["inflation_2005_2020"],
            increment=mac["increment"],
            upper_bound=mac["upper_bound"],
            activity="co2",
        )
    )
    for gas, ladder in p["emission_ladders"].items():
        stacks.append(linear_mac_stack(gas, stub.gases[gas].baseline, ladder["price_max"], ladder["levels"]))

    bids = []
    for stack in stacks:
        bids.extend(replicate_bids_over_periods(stack, 1, T_B, ppy))

    year = first_constrained_year if first_constrained_year is not None else p["first_constrained_year"]
    config = AuctionConfig(
        start_period=start,
        periods_per_year=ppy,
        T_B=T_B,
        T=T,
        cap_schedule=CapSchedule.net_zero(period_of(year), T),
        initial_burdens={k: float(v) for k, v in p["burdens"].items()},
    )
    bids.sort(key=lambda b: b.key)
    return Scenario(config, tuple(activities), kernels, tuple(bids), p.get("label", "desk"))
