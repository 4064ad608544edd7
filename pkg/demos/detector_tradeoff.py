"""Walk the false-alarm / missed-detection tradeoff for one subchannel.

The energy detector compares the received energy against a threshold
gamma. Raising gamma suppresses false alarms (more secondary
throughput) but misses the primary user more often (more interference).
The per-band caps alpha and beta pin the admissible window
[gamma_min, gamma_max]; everything the joint optimizer does happens
inside that window. This script prints the window for every subchannel
of the bundled scenario, then tabulates the tradeoff curve for one of
them.
"""
import argparse

import numpy as np

from mbsense import (
    prob_detection,
    prob_false_alarm,
    table1_scenario,
    threshold_bounds,
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channel", type=int, default=0,
                    help="subchannel index to tabulate (default 0)")
    ap.add_argument("--points", type=int, default=11,
                    help="number of thresholds in the table (default 11)")
    args = ap.parse_args(argv)

    spec = table1_scenario().spec
    if not 0 <= args.channel < spec.num_subchannels:
        ap.error(f"--channel must be in [0, {spec.num_subchannels - 1}]")

    noise = spec.noise
    print(f"noise floor sigma_v^2 = {noise.sigma_v2:g}, "
          f"M = {noise.samples_m} samples per decision")
    print()
    print("admissible threshold window per subchannel")
    print(f"{'ch':>3} {'|H|^2':>7} {'alpha':>6} {'beta':>6} "
          f"{'gamma_min':>10} {'gamma_max':>10} {'width':>8}")
    for k, sub in enumerate(spec.subchannels):
        b = threshold_bounds(sub, noise)
        print(f"{k:>3} {sub.gain_power:>7.3f} {sub.alpha:>6.2f} "
              f"{sub.beta:>6.2f} {b.gamma_min:>10.4f} {b.gamma_max:>10.4f} "
              f"{b.gamma_max - b.gamma_min:>8.4f}")
    print()

    sub = spec.subchannels[args.channel]
    b = threshold_bounds(sub, noise)
    print(f"tradeoff along the window of subchannel {args.channel} "
          f"(gain {sub.gain_power:g}):")
    print(f"{'gamma':>10} {'P_fa':>10} {'P_md':>10} {'r(1-P_fa)':>10}")
    for g in np.linspace(b.gamma_min, b.gamma_max, args.points):
        pf = prob_false_alarm(g, noise)
        pm = 1.0 - prob_detection(g, sub, noise)
        print(f"{g:>10.4f} {pf:>10.6f} {pm:>10.6f} {sub.rate * (1 - pf):>10.2f}")
    print()
    print(f"at gamma_min the false-alarm rate equals beta = {sub.beta:g}; "
          f"at gamma_max the miss rate equals alpha = {sub.alpha:g}.")
    print("the optimizer trades these off jointly across all subchannels "
          "against the aggregate budgets.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
