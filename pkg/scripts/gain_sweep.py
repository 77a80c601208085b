#!/usr/bin/env python3
"""Sweep the current-loop gains on the one-phase fault and report the criterion margins.

    python3 scripts/gain_sweep.py --kp 8 12 16 --ki 1000 2000
"""
import argparse
import itertools
from dataclasses import replace

from svocsim import acceptance as A
from svocsim.runner import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kp", type=float, nargs="+", default=[8.0, 12.0, 16.0])
    ap.add_argument("--ki", type=float, nargs="+", default=[1000.0, 2000.0, 4000.0])
    ap.add_argument("--scenario", default="fault_a_010")
    args = ap.parse_args()
    for kp, ki in itertools.product(args.kp, args.ki):
        s = A.canonical_scenario(args.scenario)
        s.gains = replace(s.gains, kp_c=kp, ki_c=ki)
        r = run_scenario(s)
        line = A.criterion_one_fault(r).line() if r.ok else f"error {r.error}"
        print(f"kp_c={kp:g} ki_c={ki:g}  {line}")


if __name__ == "__main__":
    main()
