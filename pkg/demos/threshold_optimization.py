"""Optimize per-subchannel thresholds and compare against one shared one.

Solves the bundled scenario in both forms: maximize secondary
throughput subject to the aggregate interference budget (epsilon), and
minimize aggregate interference subject to a throughput floor (delta).
A uniform baseline forces every subchannel to the same threshold; the
joint optimum is never worse and usually strictly better, because a
shared threshold cannot shift false alarms toward low-rate bands and
misses toward low-cost ones.
"""
import argparse
import dataclasses

from mbsense import (
    PrimaryUserGroup,
    kkt_residual,
    solve_p2,
    solve_p3,
    solve_uniform_baseline,
    table1_scenario,
)


def _show(label, sol):
    print(f"{label}: status={sol.status}")
    if sol.gamma is None:
        print(f"  {sol.message}")
        return
    print(f"  objective  {sol.objective:.6f}")
    print("  gamma     " + " ".join(f"{g:8.3f}" for g in sol.gamma))
    print("  P_fa      " + " ".join(f"{p:8.5f}" for p in sol.pf))
    print("  P_md      " + " ".join(f"{p:8.5f}" for p in sol.pm))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=None,
                    help="override the aggregate interference budget")
    ap.add_argument("--delta", type=float, default=None,
                    help="override the aggregate throughput floor")
    args = ap.parse_args(argv)

    spec = table1_scenario().spec
    if args.epsilon is not None:
        groups = tuple(PrimaryUserGroup(g.members, args.epsilon)
                       for g in spec.groups)
        spec = dataclasses.replace(spec, groups=groups)
    if args.delta is not None:
        spec = dataclasses.replace(spec, delta=args.delta)

    eps = ", ".join(f"{g.epsilon:g}" for g in spec.groups)
    print(f"throughput form: maximize R(gamma) with interference budget "
          f"epsilon = {eps}")
    joint = solve_p2(spec)
    _show("joint", joint)
    uniform = solve_uniform_baseline(spec, "p2")
    _show("uniform", uniform)
    if joint.status == "optimal" and uniform.status == "optimal":
        gain = joint.objective - uniform.objective
        print(f"  joint gains {gain:.2f} throughput units "
              f"({100 * gain / uniform.objective:.2f}%) over the shared "
              f"threshold")
        res = kkt_residual(spec, joint.gamma, joint.multipliers, "p2")
        print(f"  optimality certificate: kkt residual {res:.2e}, "
              f"multiplier {joint.multipliers.aggregate[0]:.4f}")
    print()

    print(f"interference form: minimize aggregate miss with throughput "
          f"floor delta = {spec.delta:g}")
    joint3 = solve_p3(spec)
    _show("joint", joint3)
    uniform3 = solve_uniform_baseline(spec, "p3")
    _show("uniform", uniform3)
    if joint3.status == "optimal" and uniform3.status == "optimal":
        drop = uniform3.objective - joint3.objective
        print(f"  joint sheds {drop:.6f} interference units "
              f"({100 * drop / uniform3.objective:.2f}%) versus the shared "
              f"threshold")
    elif joint3.status == "optimal":
        print("  the shared threshold cannot reach this throughput floor "
              "at all; only the joint design can (try --delta 2300 for a "
              "comparable pair)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
