#!/usr/bin/env python3
"""Builds the 39-bus-shaped fixture: a synthetic meshed transmission system
with the published study's resource mix (3 coal, 3 gas, 2 wind, 2 solar,
3 storage units, 21 loads, T=12 two-hour periods). The topology and parameters
are plausible stand-ins, not a reproduction of any published dataset."""

import json

T = 12
BASE = 100.0

load_shape = [0.72, 0.70, 0.74, 0.85, 0.95, 1.00, 0.98, 0.92, 0.96, 1.00, 0.93, 0.80]
wind_shape = [1.00, 0.95, 0.90, 0.80, 0.70, 0.60, 0.55, 0.60, 0.70, 0.80, 0.90, 0.95]
solar_shape = [0.0, 0.0, 0.05, 0.35, 0.75, 1.00, 0.95, 0.70, 0.35, 0.05, 0.0, 0.0]

buses = []
for i in range(1, 40):
    b = {"id": i, "v_limits_pu": [0.94, 1.06], "theta_limits_rad": [-1.2, 1.2]}
    if i == 31:
        b["slack"] = True
    if i >= 30:
        b["v_setpoint_pu"] = 1.02
    buses.append(b)

branches = []
def line(a, b, x, s):
    branches.append({"from": a, "to": b, "r_pu": round(x / 15.0, 6), "x_pu": x,
                     "s_max_pu": s})

# core ring
ring_x = [0.020, 0.024, 0.022, 0.026, 0.021, 0.023, 0.025, 0.020, 0.022,
          0.027, 0.021, 0.024, 0.023, 0.020, 0.026, 0.022, 0.025, 0.021,
          0.023, 0.027, 0.020, 0.024, 0.022, 0.026, 0.021, 0.023, 0.025,
          0.020, 0.022]
for i in range(1, 29):
    line(i, i + 1, ring_x[i - 1], 4.0)
line(29, 1, ring_x[28], 4.0)

# chords
for a, b, x in [(1, 12, 0.035), (4, 17, 0.032), (8, 22, 0.030), (12, 26, 0.034),
                (16, 29, 0.031), (3, 20, 0.036), (7, 24, 0.033), (10, 27, 0.035)]:
    line(a, b, x, 3.5)

# generator step-ups
gen_links = {30: 2, 31: 6, 32: 10, 33: 13, 34: 19, 35: 23, 36: 25, 37: 28,
             38: 16, 39: 4}
for g, core in gen_links.items():
    line(g, core, 0.015, 8.0)

def series(vals):
    return [round(v, 3) for v in vals]

generators = []
def gen(bus, pmin, pmax, c2, c1, c0, w, fuel, profile=None):
    if profile is None:
        plims = [[pmin] * T, [pmax] * T]
    else:
        plims = [[0.0] * T, series(pmax * s for s in profile)]
    generators.append({
        "bus": bus,
        "p_limits_mw": plims,
        "q_limits_mvar": [round(-0.6 * pmax, 1), round(0.6 * pmax, 1)],
        "ramp_mw": [-0.5 * pmax, 0.5 * pmax],
        "cost": [c2, c1, c0],
        "emission_factor": w,
        "fuel": fuel,
    })

gen(30, 100, 660, 0.0032, 16.5, 120, 2.26, "coal")
gen(31, 100, 700, 0.0030, 17.2, 130, 2.26, "coal")
gen(32, 80, 620, 0.0035, 18.4, 110, 2.26, "coal")
gen(33, 40, 480, 0.0080, 31.0, 60, 0.97, "gas")
gen(34, 40, 440, 0.0085, 32.5, 55, 0.97, "gas")
gen(35, 40, 400, 0.0090, 34.0, 50, 0.97, "gas")
gen(36, 0, 320, 0.0, 1.5, 0, 0.0, "wind", wind_shape)
gen(37, 0, 280, 0.0, 1.5, 0, 0.0, "wind", wind_shape)
gen(38, 0, 300, 0.0, 1.2, 0, 0.0, "solar", solar_shape)
gen(39, 0, 260, 0.0, 1.2, 0, 0.0, "solar", solar_shape)

load_buses = [1, 2, 3, 4, 5, 7, 8, 9, 11, 12, 14, 15, 16, 18, 20, 21, 23, 24,
              25, 27, 28]
base_load = {1: 95, 2: 130, 3: 160, 4: 180, 5: 110, 7: 140, 8: 170, 9: 90,
             11: 120, 12: 105, 14: 150, 15: 135, 16: 190, 18: 100, 20: 175,
             21: 115, 23: 145, 24: 125, 25: 155, 27: 110, 28: 95}
loads = []
for b in load_buses:
    p = [base_load[b] * s for s in load_shape]
    loads.append({"bus": b, "p_mw": series(p), "q_mvar": series(0.22 * v for v in p)})

storage = [
    {"bus": 5, "p_ch_max_mw": 80, "p_dc_max_mw": 80, "eta_ch": 0.98, "eta_dc": 0.98,
     "kappa": 0.99, "e_limits_mwh": [30, 400], "e_init_mwh": 200,
     "degradation_cost": 0.5, "w_es_init": 0},
    {"bus": 16, "p_ch_max_mw": 80, "p_dc_max_mw": 80, "eta_ch": 0.98, "eta_dc": 0.98,
     "kappa": 0.99, "e_limits_mwh": [30, 400], "e_init_mwh": 200,
     "degradation_cost": 0.5, "w_es_init": 0},
    {"bus": 38, "p_ch_max_mw": 80, "p_dc_max_mw": 80, "eta_ch": 0.98, "eta_dc": 0.98,
     "kappa": 0.99, "e_limits_mwh": [30, 400], "e_init_mwh": 200,
     "degradation_cost": 0.5, "w_es_init": 0},
]

# explicit dispatch for the power-flow commands: renewables at their limits,
# thermal units sharing the residual by capacity, slack absorbing losses
total_load = [sum(base_load[b] * s for b in load_buses) for s in load_shape]
thermal = generators[:6]
thermal_cap = sum(g["p_limits_mw"][1][0] for g in thermal)
dispatch = []
for g in generators:
    if g["fuel"] in ("wind", "solar"):
        dispatch.append(list(g["p_limits_mw"][1]))
    else:
        cap = g["p_limits_mw"][1][0]
        row = []
        for t in range(T):
            renew = sum(gen_["p_limits_mw"][1][t] for gen_ in generators[6:])
            residual = max(0.0, total_load[t] * 1.012 - renew)
            row.append(round(cap / thermal_cap * residual, 3))
        dispatch.append(row)

case = {
    "schema_version": 1,
    "network": {
        "base_mva": BASE,
        "emission_unit": "lbs_per_kWh",
        "buses": buses,
        "branches": branches,
        "generators": generators,
        "loads": loads,
        "storage": storage,
    },
    "time": {"periods": T, "delta_hours": 2.0},
    "policy": {"nci_cap": 1.2},
    "solver": {"pf_model": "ac", "es_model": "water_tank"},
    "dispatch": {"gen_p_mw": dispatch},
}

with open("case39_shaped.json", "w") as f:
    json.dump(case, f, indent=1)
print("wrote case39_shaped.json:",
      len(buses), "buses,", len(branches), "branches,", len(generators),
      "generators,", len(loads), "loads,", len(storage), "storage units")
