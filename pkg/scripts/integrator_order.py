"""Observed convergence order of the fixed-step integrator on the GC scenario."""

import argparse
import math
from dataclasses import replace

from exosim.sim import ControllerMode, Scenario, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dts", default="4e-3,2e-3,1e-3", help="three steps, each half the previous")
    args = ap.parse_args()
    dts = [float(v) for v in args.dts.split(",")]
    sc = Scenario().with_mode(ControllerMode.GC)
    finals = [run(replace(sc, dt=dt)).theta[-1] for dt in dts]
    for dt, q in zip(dts, finals):
        print(f"dt = {dt:.1e}  theta(T) = {q:.15f}")
    order = math.log2(abs(finals[0] - finals[1]) / abs(finals[1] - finals[2]))
    print(f"observed order = {order:.3f}")


if __name__ == "__main__":
    main()
