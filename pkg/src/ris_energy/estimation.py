"""Pilot transmission over N+1 RIS phase patterns and per-coefficient MMSE estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, ChannelScenario, complex_normal


@dataclass
class ChannelEstimate:
    p_hat: complex | np.ndarray
    Z_hat: np.ndarray
    est_var_p: float
    est_var_Z: float


def build_pilot_matrix(N: int) -> np.ndarray:
    """(N+1)-point DFT matrix, Psi[t, k] = exp(-j 2 pi t k / (N+1)).

    Column 0 (the direct-path slot) and row 0 are all ones, entries are unit
    modulus and Psi^H Psi = (N+1) I.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    n = N + 1
    t = np.arange(n)
    # reduce t*k mod n in integers before scaling, keeps entries accurate for large N
    return np.exp(-2j * np.pi * (np.outer(t, t) % n) / n)


def simulate_pilot_reception(
    realization: ChannelRealization,
    psi: np.ndarray,
    p_pilot: float,
    sigma2: float,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """Send sqrt(P) * [1..1] through the patterns in ``psi`` and decorrelate.

    Returns ``ybar = Psi^H y / sqrt(N+1) = sqrt((N+1) P) h + wbar``. Passing
    ``rng=None`` gives the noiseless observation.
    """
    h = realization.h
    n = h.shape[-1]
    if psi.shape != (n, n):
        raise ValueError(f"pilot matrix shape {psi.shape} does not match {n} coefficients")
    y = math.sqrt(p_pilot) * h @ psi.T
    if rng is not None:
        y = y + complex_normal(rng, sigma2, y.shape)
    return y @ psi.conj() / math.sqrt(n)


def decorrelated_observations(
    realization: ChannelRealization,
    p_pilot: float,
    sigma2: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Same law as :func:`simulate_pilot_reception`, drawing the white noise
    directly in the decorrelated domain (Psi / sqrt(N+1) is unitary)."""
    h = realization.h
    n = h.shape[-1]
    return math.sqrt(n * p_pilot) * h + complex_normal(rng, sigma2, h.shape)


def _wiener_gain(n: int, p_pilot: float, prior: float, sigma2: float) -> float:
    return math.sqrt(n * p_pilot) * prior / (n * p_pilot * prior + sigma2)


def estimate_variances(scenario: ChannelScenario, N: int, p_pilot: float) -> tuple[float, float]:
    """E|p_hat|^2 and E|Z_hat_n|^2. Infinite pilot power returns the priors."""
    n = N + 1
    var_z = scenario.subarray_variance(N)
    if math.isinf(p_pilot):
        return scenario.rho, var_z
    est_p = n * p_pilot * scenario.rho**2 / (n * p_pilot * scenario.rho + scenario.sigma2)
    est_z = n * p_pilot * var_z**2 / (n * p_pilot * var_z + scenario.sigma2)
    return est_p, est_z


def mmse_estimate(ybar, scenario: ChannelScenario, N: int, p_pilot: float) -> ChannelEstimate:
    """Scalar Wiener filter on each decorrelated observation.

    ``ybar`` has N+1 entries along its last axis: index 0 is the direct path.
    """
    ybar = np.asarray(ybar)
    if ybar.shape[-1] != N + 1:
        raise ValueError(f"expected {N + 1} observations, got {ybar.shape[-1]}")
    if not math.isfinite(p_pilot) or p_pilot < 0:
        raise ValueError(f"pilot power must be finite and >= 0, got {p_pilot}")
    n = N + 1
    gain_p = _wiener_gain(n, p_pilot, scenario.rho, scenario.sigma2)
    gain_z = _wiener_gain(n, p_pilot, scenario.subarray_variance(N), scenario.sigma2)
    var_p, var_z = estimate_variances(scenario, N, p_pilot)
    p_hat = gain_p * ybar[..., 0]
    return ChannelEstimate(
        p_hat=complex(p_hat) if np.ndim(p_hat) == 0 else p_hat,
        Z_hat=gain_z * ybar[..., 1:],
        est_var_p=var_p,
        est_var_Z=var_z,
    )


def pilot_snr(scenario: ChannelScenario, N: int, p_pilot: float) -> tuple[float, float]:
    """Pilot SNR of the direct channel and of each cascaded subarray channel."""
    if p_pilot < 0:
        raise ValueError(f"pilot power must be >= 0, got {p_pilot}")
    n = N + 1
    return (
        n * p_pilot * scenario.rho / scenario.sigma2,
        n * p_pilot * scenario.cascade_gain / (N * scenario.sigma2),
    )
