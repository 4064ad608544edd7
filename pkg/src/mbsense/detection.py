"""Analytic energy-detector statistics for one subchannel.

The detector sums M statistic samples per subchannel and compares the
energy Y against a threshold gamma. Under the Gaussian (CLT) model:

    H0:  Y ~ N(M s2, 2 M s2^2)
    H1:  Y ~ N(M (s2 + g), 2 M (s2 + 2 g) s2)        g = |H_k|^2, s2 = sigma_v^2

which gives

    Pf(gamma) = Q((gamma - M s2) / (s2 sqrt(2M)))
    Pd(gamma) = Q((gamma - M (s2+g)) / sqrt(2 M (s2 + 2 g) s2))
    Pm(gamma) = 1 - Pd(gamma)

Pf is decreasing and convex for gamma >= M s2; Pm is increasing and convex
for gamma <= M (s2+g). Requiring alpha, beta in (0, 1/2] keeps the whole
admissible threshold box inside both convex regions, which is what the
threshold optimizer relies on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import qfunc, qfunc_inv

__all__ = [
    "NoiseModel",
    "SubchannelParams",
    "StatisticMoments",
    "ThresholdBounds",
    "InfeasibleSubchannelError",
    "statistic_moments",
    "prob_false_alarm",
    "prob_detection",
    "prob_miss",
    "threshold_bounds",
    "pf_derivatives",
    "pm_derivatives",
]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class InfeasibleSubchannelError(ValueError):
    """Raised when a subchannel's threshold box is empty (gamma_min > gamma_max)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _check_finite_scalar(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class NoiseModel:
    """Noise floor sigma_v2 (> 0) and statistic sample count samples_m (>= 1)."""

    sigma_v2: float
    samples_m: int

    def __post_init__(self):
        object.__setattr__(self, "sigma_v2", _check_finite_scalar(self.sigma_v2, "sigma_v2"))
        if self.sigma_v2 <= 0.0:
            raise ValueError("sigma_v2 must be > 0")
        if int(self.samples_m) != self.samples_m or self.samples_m < 1:
            raise ValueError("samples_m must be an integer >= 1")
        object.__setattr__(self, "samples_m", int(self.samples_m))


@dataclass(frozen=True)
class SubchannelParams:
    """One subchannel: gain power |H_k|^2, throughput weight, interference
    cost weight, and the per-band cap pair (alpha on miss at gamma_max,
    beta on false alarm at gamma_min). alpha and beta must lie in (0, 1/2]
    so the admissible box stays inside the convex regions."""

    gain_power: float
    rate: float = 1.0
    cost: float = 1.0
    alpha: float = 0.1
    beta: float = 0.5

    def __post_init__(self):
        for name in ("gain_power", "rate", "cost", "alpha", "beta"):
            object.__setattr__(self, name, _check_finite_scalar(getattr(self, name), name))
        if self.gain_power < 0.0:
            raise ValueError("gain_power must be >= 0")
        if self.rate < 0.0:
            raise ValueError("rate must be >= 0")
        if self.cost < 0.0:
            raise ValueError("cost must be >= 0")
        if not 0.0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 0.5]")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError("beta must lie in (0, 0.5]")


@dataclass(frozen=True)
class StatisticMoments:
    mean_h0: float
    var_h0: float
    mean_h1: float
    var_h1: float


@dataclass(frozen=True)
class ThresholdBounds:
    gamma_min: float
    gamma_max: float


def _h0_stats(noise: NoiseModel) -> tuple[float, float]:
    # (mean, std) of Y under H0
    m, s2 = noise.samples_m, noise.sigma_v2
    return m * s2, s2 * np.sqrt(2.0 * m)


def _h1_stats(gain_power, noise: NoiseModel):
    # (mean, std) of Y under H1; gain_power may be an array
    m, s2 = noise.samples_m, noise.sigma_v2
    g = np.asarray(gain_power, dtype=float)
    mean = m * (s2 + g)
    std = np.sqrt(2.0 * m * (s2 + 2.0 * g) * s2)
    return mean, std


def statistic_moments(sub: SubchannelParams, noise: NoiseModel) -> StatisticMoments:
    """Mean and variance of the energy statistic under both hypotheses."""
    mean0, std0 = _h0_stats(noise)
    mean1, std1 = _h1_stats(sub.gain_power, noise)
    return StatisticMoments(float(mean0), float(std0) ** 2, float(mean1), float(std1) ** 2)


def _as_gamma(gamma):
    return float(gamma) if np.ndim(gamma) == 0 else np.asarray(gamma, dtype=float)


def prob_false_alarm(gamma, noise: NoiseModel):
    """P(Y > gamma | H0) under the Gaussian model. gamma may be an array."""
    mean0, std0 = _h0_stats(noise)
    return qfunc((_as_gamma(gamma) - mean0) / std0)


def prob_detection(gamma, sub: SubchannelParams, noise: NoiseModel):
    """P(Y > gamma | H1) under the Gaussian model. gamma may be an array."""
    mean1, std1 = _h1_stats(sub.gain_power, noise)
    return qfunc((_as_gamma(gamma) - mean1) / std1)


def prob_miss(gamma, sub: SubchannelParams, noise: NoiseModel):
    """P(Y <= gamma | H1) = 1 - prob_detection."""
    return 1.0 - prob_detection(gamma, sub, noise)


def threshold_bounds(sub: SubchannelParams, noise: NoiseModel, index: int | None = None) -> ThresholdBounds:
    """Admissible threshold box for one subchannel.

    gamma_min enforces Pf(gamma) <= beta (false-alarm cap at the low end),
    gamma_max enforces Pm(gamma) <= alpha (miss cap at the high end).
    Raises InfeasibleSubchannelError when the box is empty, which happens
    e.g. for gain_power = 0 with alpha < 1/2.
    """
    mean0, std0 = _h0_stats(noise)
    mean1, std1 = _h1_stats(sub.gain_power, noise)
    gamma_min = mean0 + std0 * qfunc_inv(sub.beta)
    gamma_max = float(mean1 + std1 * qfunc_inv(1.0 - sub.alpha))
    if gamma_min > gamma_max:
        label = "subchannel" if index is None else f"subchannel {index}"
        raise InfeasibleSubchannelError(
            f"{label}: empty threshold box, gamma_min {gamma_min:.6g} > gamma_max {gamma_max:.6g}",
            index=index,
        )
    return ThresholdBounds(float(gamma_min), gamma_max)


def _pf_derivs(gamma, noise: NoiseModel):
    mean0, std0 = _h0_stats(noise)
    u = (np.asarray(gamma, dtype=float) - mean0) / std0
    phi = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return -phi / std0, u * phi / (std0 * std0)


def _pm_derivs(gamma, gain_power, noise: NoiseModel):
    mean1, std1 = _h1_stats(gain_power, noise)
    w = (np.asarray(gamma, dtype=float) - mean1) / std1
    phi = _INV_SQRT_2PI * np.exp(-0.5 * w * w)
    return phi / std1, -w * phi / (std1 * std1)


def pf_derivatives(gamma, noise: NoiseModel):
    """First and second derivative of Pf with respect to gamma.

    The first derivative is negative everywhere; the second has the sign
    of (gamma - M sigma_v2), so Pf is convex where Pf <= 1/2.
    """
    d1, d2 = _pf_derivs(gamma, noise)
    if np.ndim(gamma) == 0:
        return float(d1), float(d2)
    return d1, d2


def pm_derivatives(gamma, sub: SubchannelParams, noise: NoiseModel):
    """First and second derivative of Pm with respect to gamma.

    The first derivative is positive everywhere; the second has the sign
    of (M (sigma_v2 + gain_power) - gamma), so Pm is convex where Pm <= 1/2.
    """
    d1, d2 = _pm_derivs(gamma, sub.gain_power, noise)
    if np.ndim(gamma) == 0:
        return float(d1), float(d2)
    return d1, d2
