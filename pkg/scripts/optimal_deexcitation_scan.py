#!/usr/bin/env python3
"""Scan the optimal deexcitation amplitude against the excitation amplitude.

For each excitation Rabi frequency the 3*pi restoring amplitude is
optimized at the reference velocity; the CSV reports the optimum, its
ratio to the excitation amplitude, and the residual restore error.
"""

import argparse

import numpy as np

from dualrail.core import (
    SimulationParams,
    get_config,
    mhz_to_rad_per_us,
    rad_per_us_to_mhz,
)
from dualrail.protocols import optimize_deexcitation, run_excite_restore


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega-min-mhz", type=float, default=1.0)
    ap.add_argument("--omega-max-mhz", type=float, default=5.0)
    ap.add_argument("--num", type=int, default=9)
    ap.add_argument("--sign", type=int, choices=(1, -1), default=1)
    ap.add_argument("--v-ref", type=float, default=0.05)
    ap.add_argument("--output", default="deexcitation_scan.csv")
    args = ap.parse_args()

    k = get_config().wavevectors.k_excite
    with open(args.output, "w", newline="") as fh:
        fh.write("omega_mhz,omega_dp_mhz,ratio,residual_error\n")
        for om_mhz in np.linspace(args.omega_min_mhz, args.omega_max_mhz,
                                  args.num):
            omega = mhz_to_rad_per_us(om_mhz)
            omega_dp = optimize_deexcitation(
                omega, k, v_ref=args.v_ref, sign=args.sign
            )
            params = SimulationParams(
                omega=omega, omega_dp=omega_dp, v_mps=args.v_ref
            )
            err = run_excite_restore(params, k).error
            dp_mhz = rad_per_us_to_mhz(omega_dp)
            fh.write(
                f"{om_mhz:.11e},{dp_mhz:.11e},{dp_mhz / om_mhz:.11e},"
                f"{err:.11e}\n"
            )
            print(f"omega {om_mhz:.3f} MHz -> {dp_mhz:+.4f} MHz, "
                  f"residual {err:.2e}")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
