"""Closed-form average SNR of the RIS-aided link and the inverse (required data power).

All functions return linear SNR. ``p_pilot`` and ``K`` accept ``math.inf``,
which is handled as the analytic limit, never as a large surrogate.
"""
from __future__ import annotations

import math

from .channel import ChannelScenario
from .quantization import sinc_factor

INF = math.inf


class SignalImpossibleError(ValueError):
    """No received signal power at all, so no data power reaches the SNR target."""


def _check_N(N):
    if not N > 0:
        raise ValueError(f"number of subarrays must be positive, got {N}")


def avg_snr_lower_bound(scenario: ChannelScenario, N, p_data: float) -> float:
    """Jensen lower bound (pi P / 4 sigma^2) (sqrt(rho) + sqrt(alpha beta M N))^2."""
    _check_N(N)
    root = math.sqrt(scenario.rho) + math.sqrt(scenario.cascade_gain * N)
    return math.pi * p_data / (4 * scenario.sigma2) * root**2


def avg_snr_exact_perfect(scenario: ChannelScenario, N, p_data: float) -> float:
    """Exact mean of the maximal SNR with perfect CSI and continuous phases."""
    extra = (1 - math.pi / 4) * (scenario.rho + scenario.cascade_gain)
    return avg_snr_lower_bound(scenario, N, p_data) + p_data / scenario.sigma2 * extra


def avg_snr_baseline_elements_off(scenario: ChannelScenario, N, p_data: float) -> float:
    """Only N individually phased elements, the other M - N switched off."""
    return avg_snr_exact_perfect(scenario.with_elements(N), N, p_data)


def _pilot_terms(scenario: ChannelScenario, N, p_pilot: float):
    # Dividing numerator and denominator by P/sigma^2 keeps P = inf exact: 1/((N+1) q) -> 0.
    q = p_pilot / scenario.sigma2
    inv = 1.0 / ((N + 1) * q)
    return q, inv


def cross_term(scenario: ChannelScenario, N, p_pilot: float, K=INF) -> float:
    """E{p Z_n^* exp(j c_n)}: correlation of the direct path with one steered subarray."""
    _check_N(N)
    rho, a = scenario.rho, scenario.cascade_gain
    if p_pilot == 0 or rho == 0:
        return 0.0
    _, inv = _pilot_terms(scenario, N, p_pilot)
    den = math.sqrt((rho + inv) * (a + N * inv))
    return math.pi / (4 * math.sqrt(N)) * rho * a * sinc_factor(K) / den


def pair_term(scenario: ChannelScenario, N, p_pilot: float, K=INF) -> float:
    """E{Z_n Z_m^* exp(-j (c_n - c_m))} for two distinct subarrays n != m."""
    _check_N(N)
    a = scenario.cascade_gain
    if p_pilot == 0:
        return 0.0
    _, inv = _pilot_terms(scenario, N, p_pilot)
    return math.pi / (4 * N) * a**2 * sinc_factor(K) ** 2 / (a + N * inv)


def snr_gain_general(scenario: ChannelScenario, N, p_pilot: float = INF, K=INF) -> float:
    """Average SNR per unit transmit SNR, i.e. E{SNR} * sigma^2 / P_data."""
    _check_N(N)
    rho, a = scenario.rho, scenario.cascade_gain
    total = rho + a
    if p_pilot == 0 or a == 0:
        return total
    _, inv = _pilot_terms(scenario, N, p_pilot)
    s = sinc_factor(K)
    if rho > 0:
        total += math.pi / 2 * rho * a * s / math.sqrt((rho + inv) * (a / N + inv))
    total += math.pi / 4 * (1 - 1 / N) * a**2 * s**2 / (a / N + inv)
    return total


def avg_snr_general(scenario: ChannelScenario, N, p_data: float, p_pilot: float = INF, K=INF) -> float:
    """Average SNR with MMSE-estimated CSI and K-state phase quantization."""
    if p_pilot < 0:
        raise ValueError(f"pilot power must be >= 0, got {p_pilot}")
    return p_data / scenario.sigma2 * snr_gain_general(scenario, N, p_pilot, K)


def avg_snr_from_terms(scenario: ChannelScenario, N, p_data: float, p_pilot: float = INF, K=INF) -> float:
    """Same quantity assembled as rho + 2N Re{A} + alpha beta M + N(N-1) B."""
    A = cross_term(scenario, N, p_pilot, K)
    B = pair_term(scenario, N, p_pilot, K)
    inner = scenario.rho + 2 * N * A + scenario.cascade_gain + N * (N - 1) * B
    return p_data / scenario.sigma2 * inner


def avg_snr_quantized_perfect_csi(scenario: ChannelScenario, N, p_data: float, K=INF) -> float:
    """No direct path, perfect CSI, K phase states."""
    _check_N(N)
    s2 = sinc_factor(K) ** 2
    return p_data / scenario.sigma2 * scenario.cascade_gain * (1 + math.pi / 4 * (N - 1) * s2)


def quantization_loss_bound(K) -> float:
    """Worst-case relative SNR loss of K-state quantization, sinc^2(1/K)."""
    return sinc_factor(K) ** 2


def required_data_power(scenario: ChannelScenario, N, p_pilot: float, K, gamma_d: float) -> float:
    """Data power that makes :func:`avg_snr_general` equal ``gamma_d``."""
    if not gamma_d > 0:
        raise ValueError(f"target SNR must be > 0, got {gamma_d}")
    gain = snr_gain_general(scenario, N, p_pilot, K)
    if not gain > 0:
        raise SignalImpossibleError("rho and alpha*beta*M are both zero")
    return scenario.sigma2 * gamma_d / gain
