import math

import numpy as np
import pytest
from scipy import integrate

from mbsense import (
    InfeasibleSubchannelError,
    NoiseModel,
    SubchannelParams,
    pf_derivatives,
    pm_derivatives,
    prob_detection,
    prob_false_alarm,
    prob_miss,
    statistic_moments,
    threshold_bounds,
)

NOISE = NoiseModel(sigma_v2=1.0, samples_m=100)
SUB = SubchannelParams(gain_power=0.5, rate=612.0, cost=1.91, alpha=0.1, beta=0.5)


def test_moments_reference_subchannel():
    mom = statistic_moments(SUB, NOISE)
    assert mom.mean_h0 == pytest.approx(100.0, abs=0)
    assert mom.var_h0 == pytest.approx(200.0, rel=1e-15)
    assert mom.mean_h1 == pytest.approx(150.0, abs=0)
    assert mom.var_h1 == pytest.approx(400.0, rel=1e-15)


def _normal_tail(gamma, mean, var):
    std = math.sqrt(var)
    val, _ = integrate.quad(
        lambda t: math.exp(-0.5 * ((t - mean) / std) ** 2) / (std * math.sqrt(2 * math.pi)),
        gamma, mean + 40.0 * std,
    )
    return val


def test_probabilities_match_quadrature_oracle():
    mom = statistic_moments(SUB, NOISE)
    for gamma in [95.0, 100.0, 105.0, 112.0, 124.0]:
        assert prob_false_alarm(gamma, NOISE) == pytest.approx(
            _normal_tail(gamma, mom.mean_h0, mom.var_h0), rel=1e-9, abs=1e-13
        )
        assert prob_detection(gamma, SUB, NOISE) == pytest.approx(
            _normal_tail(gamma, mom.mean_h1, mom.var_h1), rel=1e-9, abs=1e-13
        )
    assert prob_miss(110.0, SUB, NOISE) == pytest.approx(
        1.0 - prob_detection(110.0, SUB, NOISE), abs=1e-15
    )


def test_threshold_bounds_reference_values():
    b = threshold_bounds(SUB, NOISE)
    # beta = 1/2 puts gamma_min exactly at the vacant mean
    assert b.gamma_min == 100.0
    assert b.gamma_max == pytest.approx(124.36896868910799, rel=1e-12)
    assert b.gamma_min < b.gamma_max


def test_bounds_hit_their_probability_caps():
    # gain 1.0 keeps the box non-empty for every cap pair on this grid
    for alpha in np.linspace(0.05, 0.5, 4):
        for beta in np.linspace(0.05, 0.5, 4):
            sub = SubchannelParams(1.0, alpha=float(alpha), beta=float(beta))
            b = threshold_bounds(sub, NOISE)
            assert prob_false_alarm(b.gamma_min, NOISE) == pytest.approx(beta, abs=1e-9)
            assert prob_miss(b.gamma_max, sub, NOISE) == pytest.approx(alpha, abs=1e-9)


def test_empty_box_raises_with_index():
    # weak gain with a tight miss cap and a tight false-alarm cap
    sub = SubchannelParams(gain_power=0.01, alpha=0.5, beta=0.01)
    with pytest.raises(InfeasibleSubchannelError) as exc:
        threshold_bounds(sub, NOISE, index=3)
    assert exc.value.index == 3
    with pytest.raises(InfeasibleSubchannelError):
        # zero gain never detects: box empty for alpha < 1/2
        threshold_bounds(SubchannelParams(gain_power=0.0, alpha=0.1), NOISE)


def test_first_derivative_frozen_value():
    d1, _ = pf_derivatives(100.0, NOISE)
    # at the vacant mean: -phi(0)/std0 = -1/sqrt(2 pi * 200)
    assert d1 == pytest.approx(-1.0 / math.sqrt(400.0 * math.pi), rel=1e-13)
    assert d1 == pytest.approx(-0.028209479177387815, rel=1e-13)


def _central_diffs(fn, x, h):
    f0, fp, fm = fn(x), fn(x + h), fn(x - h)
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def test_derivatives_match_finite_differences():
    for gamma in [100.0, 104.0, 110.0, 118.0, 124.0]:
        d1, d2 = pf_derivatives(gamma, NOISE)
        fd1, fd2 = _central_diffs(lambda g: prob_false_alarm(g, NOISE), gamma, 1e-4)
        assert d1 == pytest.approx(fd1, rel=1e-6)
        fd1b, fd2b = _central_diffs(lambda g: prob_false_alarm(g, NOISE), gamma, 1e-2)
        assert d2 == pytest.approx(fd2b, rel=1e-4, abs=1e-10)

        m1, m2 = pm_derivatives(gamma, SUB, NOISE)
        fm1, _ = _central_diffs(lambda g: prob_miss(g, SUB, NOISE), gamma, 1e-4)
        assert m1 == pytest.approx(fm1, rel=1e-6)
        _, fm2 = _central_diffs(lambda g: prob_miss(g, SUB, NOISE), gamma, 1e-2)
        assert m2 == pytest.approx(fm2, rel=1e-4, abs=1e-10)


def test_derivative_signs_and_convex_regions():
    gammas = np.linspace(100.0, 124.36896868910799, 200)
    d1, d2 = pf_derivatives(gammas, NOISE)
    assert np.all(d1 < 0)
    assert np.all(d2 >= 0)  # convex where Pf <= 1/2
    m1, m2 = pm_derivatives(np.linspace(80.0, 150.0, 200), SUB, NOISE)
    assert np.all(m1 > 0)
    mask = np.linspace(80.0, 150.0, 200) <= 150.0  # mean under H1
    assert np.all(m2[mask] >= -1e-18)


def test_array_evaluation_matches_scalar():
    gam = np.array([100.0, 110.0, 120.0])
    pf_vec = prob_false_alarm(gam, NOISE)
    assert pf_vec.shape == (3,)
    for g, v in zip(gam, pf_vec):
        assert prob_false_alarm(float(g), NOISE) == v
    assert isinstance(prob_detection(110.0, SUB, NOISE), float)


def test_parameter_validation():
    with pytest.raises(ValueError):
        NoiseModel(sigma_v2=0.0, samples_m=100)
    with pytest.raises(ValueError):
        NoiseModel(sigma_v2=-1.0, samples_m=100)
    with pytest.raises(ValueError):
        NoiseModel(sigma_v2=1.0, samples_m=0)
    with pytest.raises(ValueError):
        NoiseModel(sigma_v2=1.0, samples_m=2.5)
    with pytest.raises(ValueError):
        SubchannelParams(gain_power=-0.1)
    with pytest.raises(ValueError):
        SubchannelParams(0.5, rate=-1.0)
    with pytest.raises(ValueError):
        SubchannelParams(0.5, cost=-1.0)
    for bad in [0.0, 0.51, 1.0]:
        with pytest.raises(ValueError):
            SubchannelParams(0.5, alpha=bad)
        with pytest.raises(ValueError):
            SubchannelParams(0.5, beta=bad)
    with pytest.raises(ValueError):
        prob_false_alarm(float("nan"), NOISE)
