import numpy as np
import pytest

from mbsense import (
    InfeasibleSubchannelError,
    NoiseModel,
    PrimaryUserGroup,
    ProblemSpec,
    SubchannelParams,
    prob_miss,
    table1_scenario,
    threshold_bounds,
)


@pytest.fixture(scope="session")
def table1():
    return table1_scenario()


@pytest.fixture(scope="session")
def table1_spec(table1):
    return table1.spec


def _throughput(spec, gamma):
    from mbsense import prob_false_alarm

    return sum(
        sub.rate * (1.0 - prob_false_alarm(float(g), spec.noise))
        for sub, g in zip(spec.subchannels, gamma)
    )


@pytest.fixture(scope="session")
def spec_factory():
    """Random feasible single-group specs for solver cross-checks.

    Budgets are drawn between the interference floor at gamma_min and a
    point past the ceiling sum(c_k alpha_k), so a fraction of the draws
    have slack constraints. delta is placed strictly inside
    [R(gamma_min), R(gamma_max)].
    """

    def make(rng: np.random.Generator, k: int | None = None) -> ProblemSpec:
        k = int(rng.integers(1, 9)) if k is None else k
        noise = NoiseModel(float(rng.uniform(0.5, 2.0)), int(rng.integers(50, 201)))
        subs = []
        while len(subs) < k:
            sub = SubchannelParams(
                gain_power=float(rng.uniform(0.1, 1.0)),
                rate=float(rng.uniform(10.0, 1000.0)),
                cost=float(rng.uniform(0.1, 10.0)),
                alpha=float(rng.uniform(0.05, 0.5)),
                beta=float(rng.uniform(0.05, 0.5)),
            )
            try:
                threshold_bounds(sub, noise)
            except InfeasibleSubchannelError:
                continue  # redraw: the cap pair is unreachable at this SNR
            subs.append(sub)
        if k > 1 and rng.uniform() < 0.2:
            # exercise the flat-coordinate tie-break path
            idx = int(rng.integers(0, k))
            subs[idx] = SubchannelParams(
                subs[idx].gain_power, 0.0, subs[idx].cost,
                subs[idx].alpha, subs[idx].beta,
            )
        bounds = [threshold_bounds(s, noise) for s in subs]
        floor = sum(
            s.cost * prob_miss(b.gamma_min, s, noise) for s, b in zip(subs, bounds)
        )
        ceiling = sum(s.cost * s.alpha for s in subs)
        u = float(rng.uniform(0.05, 1.25))
        epsilon = floor + u * (ceiling - floor)
        spec = ProblemSpec(
            tuple(subs), noise, (PrimaryUserGroup(tuple(range(k)), epsilon),)
        )
        r_lo = _throughput(spec, [b.gamma_min for b in bounds])
        r_hi = _throughput(spec, [b.gamma_max for b in bounds])
        delta = r_lo + float(rng.uniform(0.05, 0.95)) * (r_hi - r_lo)
        return ProblemSpec(spec.subchannels, noise, spec.groups, delta=delta)

    return make
