"""Freeze an independent power-flow reference for the shipped 39-bus case.

Reads the CSV fixture directly (not through the package), runs pypower's
Newton solver and writes tests/fixtures/case39_reference_flows.csv.
"""

import csv
from pathlib import Path

import numpy as np
from pypower.api import ppoption, runpf

ROOT = Path(__file__).resolve().parents[1]
CASE = ROOT / "src" / "islanding" / "data" / "case39"
OUT = ROOT / "tests" / "fixtures" / "case39_reference_flows.csv"


def rows(name):
    with open(CASE / name, newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    base = 100.0
    kinds = {"PQ": 1, "PV": 2, "slack": 3}
    bus = []
    for r in rows("bus.csv"):
        bus.append([int(r["id"]), kinds[r["kind"]], float(r["p_load_mw"]), float(r["q_load_mvar"]),
                    float(r["g_sh"]) * base, float(r["b_sh"]) * base, 1, float(r["v_mag"]), 0.0,
                    345.0, 1, 1.1, 0.9])
    gen = []
    for r in rows("gen.csv"):
        gen.append([int(r["bus"]), float(r["p_mw"]), 0.0, 9999, -9999, float(r["v_set"]), base, 1,
                    9999, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0])
    branch = []
    for r in rows("branch.csv"):
        branch.append([int(r["from"]), int(r["to"]), float(r["r_pu"]), float(r["x_pu"]),
                       float(r["b_ch_pu"]), 0, 0, 0, 0, 0, int(r["status"]), -360, 360])
    ppc = {"version": "2", "baseMVA": base, "bus": np.array(bus, float),
           "gen": np.array(gen, float), "branch": np.array(branch, float)}
    res, ok = runpf(ppc, ppoption(VERBOSE=0, OUT_ALL=0, PF_TOL=1e-10))
    assert ok
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch_id", "from", "to", "p_from_mw", "q_from_mvar", "p_to_mw", "q_to_mvar"])
        for i, br in enumerate(res["branch"], start=1):
            w.writerow([i, int(br[0]), int(br[1])] + [f"{x:.6f}" for x in br[13:17]])


if __name__ == "__main__":
    main()
