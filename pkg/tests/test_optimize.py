import numpy as np
import pytest

from mbsense import (
    KKTMultipliers,
    NoiseModel,
    PrimaryUserGroup,
    ProblemSpec,
    SubchannelParams,
    check_feasibility,
    coordinate_descent_solve,
    kkt_residual,
    oracle_solve,
    prob_false_alarm,
    prob_miss,
    solve_p2,
    solve_p3,
    solve_uniform_baseline,
    threshold_bounds,
)

# reference instance used throughout: 8 subchannels, one primary user
GAMMA_MAX = [
    124.36896868910799, 107.07490866216796, 120.01796089673762,
    137.51378107180042, 102.80287575957314, 133.11794757341025,
    115.68426868354697, 141.92261195780645,
]
P2_OBJECTIVE = 2993.3156526761187
P2_LAMBDA = 1378.3349901354886
P3_OBJECTIVE = 1.5345498932659235
P3_LAMBDA = 0.002098002763432305
INTERFERENCE_FLOOR = 1.0041896743528813
UNIFORM_P2_GAMMA = 101.95239671313254
UNIFORM_P2_OBJECTIVE = 2257.3398789108544


def _rates_total(spec):
    return sum(s.rate for s in spec.subchannels)


def _interference(spec, gamma):
    return sum(
        s.cost * prob_miss(float(g), s, spec.noise)
        for s, g in zip(spec.subchannels, gamma)
    )


def _throughput(spec, gamma):
    return sum(
        s.rate * (1.0 - prob_false_alarm(float(g), spec.noise))
        for s, g in zip(spec.subchannels, gamma)
    )


def test_spec_validation():
    sub = SubchannelParams(0.5)
    noise = NoiseModel(1.0, 100)
    grp = PrimaryUserGroup((0,), 0.5)
    with pytest.raises(ValueError):
        ProblemSpec((), noise, (grp,))
    with pytest.raises(ValueError):
        ProblemSpec((sub,), noise, ())
    with pytest.raises(ValueError):
        ProblemSpec((sub,), noise, (PrimaryUserGroup((1,), 0.5),))
    with pytest.raises(ValueError):
        PrimaryUserGroup((0, 0), 0.5)
    with pytest.raises(ValueError):
        PrimaryUserGroup((), 0.5)
    with pytest.raises(ValueError):
        PrimaryUserGroup((-1,), 0.5)
    with pytest.raises(ValueError):
        PrimaryUserGroup((0,), -0.1)
    with pytest.raises(ValueError):
        ProblemSpec((sub,), noise, (grp,), delta=-1.0)
    spec = ProblemSpec((sub,), noise, (grp,))
    assert spec.num_subchannels == 1


def test_check_feasibility_interference_floor(table1_spec):
    rep = check_feasibility(table1_spec, "p2")
    assert rep.feasible
    assert rep.margins[0] == pytest.approx(1.25 - INTERFERENCE_FLOOR, abs=1e-9)

    def with_eps(eps):
        return ProblemSpec(
            table1_spec.subchannels, table1_spec.noise,
            (PrimaryUserGroup(table1_spec.groups[0].members, eps),),
            delta=table1_spec.delta,
        )

    assert check_feasibility(with_eps(INTERFERENCE_FLOOR + 1e-6), "p2").feasible
    tight = check_feasibility(with_eps(INTERFERENCE_FLOOR - 1e-6), "p2")
    assert not tight.feasible
    assert tight.group == 0
    assert "budget" in tight.reason
    zero = check_feasibility(with_eps(0.0), "p2")
    assert not zero.feasible


def test_check_feasibility_throughput_floor(table1_spec):
    assert check_feasibility(table1_spec, "p3").feasible

    def with_delta(d):
        return ProblemSpec(table1_spec.subchannels, table1_spec.noise,
                           table1_spec.groups, delta=d)

    assert check_feasibility(with_delta(0.0), "p3").feasible
    r_hi = _throughput(table1_spec, GAMMA_MAX)
    assert check_feasibility(with_delta(r_hi - 1e-6), "p3").feasible
    rep = check_feasibility(with_delta(r_hi + 1e-3), "p3")
    assert not rep.feasible
    assert "delta" in rep.reason
    with pytest.raises(ValueError):
        check_feasibility(table1_spec, "p4")


def test_check_feasibility_empty_box():
    spec = ProblemSpec(
        (SubchannelParams(0.5), SubchannelParams(0.0, alpha=0.1)),
        NoiseModel(1.0, 100),
        (PrimaryUserGroup((0, 1), 1.0),),
    )
    rep = check_feasibility(spec, "p2")
    assert not rep.feasible
    assert rep.subchannel == 1
    sol = solve_p2(spec)
    assert sol.status == "infeasible"
    assert sol.gamma is None


def test_throughput_form_reference_instance(table1_spec):
    sol = solve_p2(table1_spec)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(P2_OBJECTIVE, rel=1e-9)
    assert sol.throughput == sol.objective
    assert sol.weighted_false_alarm == pytest.approx(
        _rates_total(table1_spec) - P2_OBJECTIVE, rel=1e-9
    )
    # budget is active at the optimum
    assert _interference(table1_spec, sol.gamma) == pytest.approx(1.25, abs=1e-8)
    assert sol.slacks[0] == pytest.approx(0.0, abs=1e-8)
    assert sol.kkt_residual <= 1e-7
    assert sol.multipliers.aggregate[0] == pytest.approx(P2_LAMBDA, rel=1e-6)
    expected = [114.10972543, 100.0, 105.96949915, 108.86686028,
                100.0, 109.81738571, GAMMA_MAX[6], 122.61971397]
    np.testing.assert_allclose(sol.gamma, expected, atol=2e-6)
    # subchannels pinned at their box edges
    assert sol.gamma[1] == pytest.approx(100.0, abs=1e-9)
    assert sol.gamma[4] == pytest.approx(100.0, abs=1e-9)
    assert sol.gamma[6] == pytest.approx(GAMMA_MAX[6], abs=1e-6)
    # probabilities reported match the analytic curves
    for k, sub in enumerate(table1_spec.subchannels):
        assert sol.pf[k] == pytest.approx(
            prob_false_alarm(float(sol.gamma[k]), table1_spec.noise), abs=1e-12
        )
        assert sol.pm[k] == pytest.approx(
            prob_miss(float(sol.gamma[k]), sub, table1_spec.noise), abs=1e-12
        )


def test_interference_form_reference_instance(table1_spec):
    sol = solve_p3(table1_spec)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(P3_OBJECTIVE, rel=1e-9)
    # throughput floor is active
    assert sol.throughput == pytest.approx(3224.0, abs=1e-6)
    assert sol.kkt_residual <= 1e-7
    assert sol.multipliers.aggregate[0] == pytest.approx(P3_LAMBDA, rel=1e-5)


def test_oracle_agrees_on_reference_instance(table1_spec):
    sol2, orc2 = solve_p2(table1_spec), oracle_solve(table1_spec, "p2")
    assert orc2.status == "optimal"
    assert sol2.objective == pytest.approx(orc2.objective, rel=1e-9)
    np.testing.assert_allclose(sol2.gamma, orc2.gamma, atol=1e-6)
    # complementary slackness at the oracle point
    assert _interference(table1_spec, orc2.gamma) == pytest.approx(1.25, abs=1e-6)

    sol3, orc3 = solve_p3(table1_spec), oracle_solve(table1_spec, "p3")
    assert sol3.objective == pytest.approx(orc3.objective, rel=1e-9)
    np.testing.assert_allclose(sol3.gamma, orc3.gamma, atol=1e-6)
    assert _throughput(table1_spec, orc3.gamma) == pytest.approx(3224.0, abs=1e-6)


def test_coordinate_descent_agrees(table1_spec):
    gamma2, obj2 = coordinate_descent_solve(table1_spec, "p2")
    # the descent minimizes the weighted false-alarm sum
    r2 = _rates_total(table1_spec) - obj2
    assert r2 == pytest.approx(P2_OBJECTIVE, rel=1e-5)
    assert _interference(table1_spec, gamma2) <= 1.25 + 1e-6

    gamma3, obj3 = coordinate_descent_solve(table1_spec, "p3")
    assert obj3 == pytest.approx(P3_OBJECTIVE, rel=1e-5)
    assert _throughput(table1_spec, gamma3) >= 3224.0 - 1e-4


def test_slack_budget_returns_upper_corner(table1_spec):
    # budget equal to the value at gamma_max: constraint holds everywhere
    ceiling = sum(s.cost * s.alpha for s in table1_spec.subchannels)
    spec = ProblemSpec(
        table1_spec.subchannels, table1_spec.noise,
        (PrimaryUserGroup(tuple(range(8)), ceiling),),
    )
    sol = solve_p2(spec)
    assert sol.status == "optimal"
    expected = np.array([
        threshold_bounds(s, spec.noise).gamma_max for s in spec.subchannels
    ])
    np.testing.assert_array_equal(sol.gamma, expected)
    assert sol.kkt_residual <= 1e-9
    # with the constraint inactive the objective is the unconstrained best
    assert sol.objective == pytest.approx(_throughput(spec, sol.gamma), rel=1e-12)


def test_zero_delta_returns_lower_corner(table1_spec):
    spec = ProblemSpec(table1_spec.subchannels, table1_spec.noise,
                       table1_spec.groups, delta=0.0)
    sol = solve_p3(spec)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.gamma, 100.0, atol=1e-12)
    assert sol.objective == pytest.approx(INTERFERENCE_FLOOR, rel=1e-12)
    assert sol.kkt_residual <= 1e-9


def test_delta_at_maximum_throughput_pins_upper_corner(table1_spec):
    r_hi = _throughput(table1_spec, GAMMA_MAX)
    spec = ProblemSpec(table1_spec.subchannels, table1_spec.noise,
                       table1_spec.groups, delta=r_hi)
    sol = solve_p3(spec)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.gamma, GAMMA_MAX, atol=1e-6)


def test_uniform_baseline_reference_instance(table1_spec):
    uni = solve_uniform_baseline(table1_spec, "p2")
    assert uni.status == "optimal"
    assert np.ptp(uni.gamma) == 0.0
    assert uni.gamma[0] == pytest.approx(UNIFORM_P2_GAMMA, abs=1e-6)
    assert uni.objective == pytest.approx(UNIFORM_P2_OBJECTIVE, rel=1e-8)
    joint = solve_p2(table1_spec)
    assert joint.objective >= uni.objective + 100.0  # strictly dominated here

    # the single threshold cannot reach the throughput floor 3224
    uni3 = solve_uniform_baseline(table1_spec, "p3")
    assert uni3.status == "infeasible"


def test_uniform_baseline_equals_joint_for_single_subchannel():
    noise = NoiseModel(1.0, 100)
    sub = SubchannelParams(0.5, rate=612.0, cost=1.91, alpha=0.1, beta=0.5)
    spec = ProblemSpec((sub,), noise, (PrimaryUserGroup((0,), 0.12),), delta=450.0)
    for problem, solver in (("p2", solve_p2), ("p3", solve_p3)):
        uni = solve_uniform_baseline(spec, problem)
        joint = solver(spec)
        assert uni.status == joint.status == "optimal"
        assert uni.objective == pytest.approx(joint.objective, rel=1e-9)
        assert uni.gamma[0] == pytest.approx(joint.gamma[0], abs=1e-5)


def test_uniform_baseline_equals_joint_for_identical_subchannels():
    noise = NoiseModel(1.0, 100)
    subs = tuple(SubchannelParams(0.5, rate=100.0, cost=2.0) for _ in range(4))
    spec = ProblemSpec(subs, noise, (PrimaryUserGroup((0, 1, 2, 3), 0.5),))
    uni = solve_uniform_baseline(spec, "p2")
    joint = solve_p2(spec)
    assert uni.objective == pytest.approx(joint.objective, rel=1e-6)
    np.testing.assert_allclose(joint.gamma, joint.gamma[0], atol=1e-5)


def test_kkt_residual_certifies_and_rejects(table1_spec):
    sol = solve_p2(table1_spec)
    assert kkt_residual(table1_spec, sol.gamma, sol.multipliers, "p2") <= 1e-6
    bumped = KKTMultipliers(sol.multipliers.aggregate + 0.1,
                            sol.multipliers.lower, sol.multipliers.upper)
    assert kkt_residual(table1_spec, sol.gamma, bumped, "p2") > 1e-3

    # slack constraint with zero multiplier at the upper corner
    ceiling = sum(s.cost * s.alpha for s in table1_spec.subchannels)
    spec = ProblemSpec(table1_spec.subchannels, table1_spec.noise,
                       (PrimaryUserGroup(tuple(range(8)), ceiling + 1.0),))
    corner = solve_p2(spec)
    assert np.all(corner.multipliers.aggregate == 0.0)
    assert kkt_residual(spec, corner.gamma, corner.multipliers, "p2") <= 1e-9


def test_scale_equivariance(table1_spec):
    scale = 1000.0
    subs = tuple(
        SubchannelParams(s.gain_power, s.rate * scale, s.cost, s.alpha, s.beta)
        for s in table1_spec.subchannels
    )
    spec = ProblemSpec(subs, table1_spec.noise, table1_spec.groups,
                       delta=table1_spec.delta * scale)
    base2, scaled2 = solve_p2(table1_spec), solve_p2(spec)
    assert scaled2.status == "optimal"
    np.testing.assert_allclose(scaled2.gamma, base2.gamma, rtol=0, atol=1e-8)
    assert scaled2.objective == pytest.approx(base2.objective * scale, rel=1e-12)
    base3, scaled3 = solve_p3(table1_spec), solve_p3(spec)
    assert scaled3.status == "optimal"
    np.testing.assert_allclose(scaled3.gamma, base3.gamma, rtol=0, atol=1e-8)
    assert scaled3.objective == pytest.approx(base3.objective, rel=1e-9)


def test_zero_rate_subchannel_tie_breaks():
    noise = NoiseModel(1.0, 100)
    subs = (SubchannelParams(0.5, rate=600.0, cost=1.0),
            SubchannelParams(0.6, rate=0.0, cost=1.0))
    # group covers only the first subchannel: the second is unconstrained
    # and flat in the throughput objective, so it is pushed to gamma_max
    spec = ProblemSpec(subs, noise, (PrimaryUserGroup((0,), 0.05),))
    sol = solve_p2(spec)
    hi1 = threshold_bounds(subs[1], noise).gamma_max
    assert sol.status == "optimal"
    assert sol.gamma[1] == pytest.approx(hi1, abs=1e-9)

    # in the interference form the same subchannel carries objective weight
    # and no throughput, so it drops to gamma_min
    spec3 = ProblemSpec(subs, noise, (PrimaryUserGroup((0, 1), 1.0),), delta=500.0)
    sol3 = solve_p3(spec3)
    assert sol3.status == "optimal"
    assert sol3.gamma[1] == pytest.approx(100.0, abs=1e-9)


def test_two_group_instance_matches_grid_oracle():
    noise = NoiseModel(1.0, 100)
    subs = (SubchannelParams(0.5, rate=600.0, cost=2.0),
            SubchannelParams(0.3, rate=500.0, cost=8.0),
            SubchannelParams(0.65, rate=140.0, cost=4.0))
    groups = (PrimaryUserGroup((0, 1), 0.8), PrimaryUserGroup((2,), 0.15))
    spec = ProblemSpec(subs, noise, groups)
    sol = solve_p2(spec)
    orc = oracle_solve(spec, "p2")
    assert sol.status == "optimal"
    assert sol.kkt_residual <= 1e-6
    assert sol.objective == pytest.approx(orc.objective, rel=1e-5)
    # both budgets bind at this epsilon
    assert sol.slacks[0] == pytest.approx(0.0, abs=1e-7)
    assert sol.slacks[1] == pytest.approx(0.0, abs=1e-7)


def test_random_instances_agree_with_oracle(spec_factory):
    rng = np.random.default_rng(2024)
    for trial in range(15):
        spec = spec_factory(rng)
        sol = solve_p2(spec)
        orc = oracle_solve(spec, "p2")
        assert sol.status == "optimal", f"trial {trial}: {sol.message}"
        rel = abs(sol.objective - orc.objective) / max(1.0, abs(orc.objective))
        assert rel <= 1e-5, f"trial {trial}"
        assert np.all(sol.slacks >= -1e-8 * np.maximum(1.0, np.abs(sol.slacks)))
        if trial < 5:
            sol3 = solve_p3(spec)
            orc3 = oracle_solve(spec, "p3")
            assert sol3.status == "optimal", f"trial {trial}: {sol3.message}"
            rel3 = abs(sol3.objective - orc3.objective) / max(1.0, abs(orc3.objective))
            assert rel3 <= 1e-5, f"trial {trial}"
