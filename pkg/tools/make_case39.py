"""Regenerate src/islanding/data/case39 from the MATPOWER/pypower case39 tables.

Transformer off-nominal ratios are dropped (ratio 1). Machine constants are the
classical New England values on the 100 MVA system base. Requires ``pypower``,
which is only needed here, not by the package.
"""

import csv
from pathlib import Path

from pypower.case39 import case39

OUT = Path(__file__).resolve().parents[1] / "src" / "islanding" / "data" / "case39"

# bus -> (label, H [s], x'd [pu]) on 100 MVA
MACHINES = {
    39: ("G1", 500.0, 0.006),
    31: ("G2", 30.3, 0.0697),
    32: ("G3", 35.8, 0.0531),
    33: ("G4", 28.6, 0.0436),
    34: ("G5", 26.0, 0.132),
    35: ("G6", 34.8, 0.05),
    36: ("G7", 26.4, 0.049),
    37: ("G8", 24.3, 0.057),
    38: ("G9", 34.5, 0.057),
    30: ("G10", 42.0, 0.031),
}
DAMPING = 0.0


def main():
    c = case39()
    OUT.mkdir(parents=True, exist_ok=True)
    vset = {int(g[0]): g[5] for g in c["gen"]}
    kinds = {1: "PQ", 2: "PV", 3: "slack"}
    with open(OUT / "meta.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerow(["base_mva", c["baseMVA"]])
        w.writerow(["f_hz", 60.0])
    with open(OUT / "bus.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "kind", "v_mag", "v_ang_deg", "p_load_mw", "q_load_mvar", "g_sh", "b_sh"])
        for b in c["bus"]:
            bid = int(b[0])
            w.writerow([bid, kinds[int(b[1])], vset.get(bid, 1.0), 0.0, b[2], b[3],
                        b[4] / c["baseMVA"], b[5] / c["baseMVA"]])
    with open(OUT / "branch.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "from", "to", "r_pu", "x_pu", "b_ch_pu", "status"])
        for i, br in enumerate(c["branch"], start=1):
            w.writerow([i, int(br[0]), int(br[1]), br[2], br[3], br[4], int(br[10])])
    with open(OUT / "gen.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "bus", "p_mw", "v_set", "h_s", "d_pu", "xdp_pu", "mva"])
        rows = []
        for g in c["gen"]:
            bus = int(g[0])
            label, h, xdp = MACHINES[bus]
            rows.append((int(label[1:]), [label, bus, g[1], g[5], h, DAMPING, xdp, 100.0]))
        for _, row in sorted(rows):
            w.writerow(row)


if __name__ == "__main__":
    main()
