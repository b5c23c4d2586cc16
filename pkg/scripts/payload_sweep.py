"""Run the payload x mode grid and print the torque-reduction table.

    python3 scripts/payload_sweep.py --out sweep_out --payloads 0,3,5,10
"""

import argparse

from exosim.config import load_config
from exosim.experiment import sweep
from exosim.metrics import format_report
from exosim.sim import Scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--out", default="sweep_out")
    ap.add_argument("--payloads", default="0,3,5,10")
    args = ap.parse_args()
    base = load_config(args.config) if args.config else Scenario()
    payloads = [float(v) for v in args.payloads.split(",")]
    res = sweep(base, payloads, output_dir=args.out)
    print(format_report(res.rows))
    for (M, mode), msg in res.failures.items():
        print(f"failed: M={M:g} {mode.value}: {msg}")


if __name__ == "__main__":
    main()
