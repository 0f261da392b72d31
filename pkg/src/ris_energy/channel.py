"""Channel model for a single-antenna uplink aided by an RIS split into subarrays.

The end-to-end channel is ``g = p + sum_n Z_n exp(-j c_n)`` where ``p`` is the
Rayleigh-fading direct path and ``Z_n`` the aggregate channel through the
``M/N`` elements of subarray ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import db_to_linear


@dataclass(frozen=True)
class ChannelScenario:
    """Static propagation and radio constants, all in linear scale.

    Attributes:
        rho: average gain of the direct BS-UE path.
        alpha: per-element RIS-BS gain (LoS).
        beta: per-element UE-RIS gain (Rayleigh).
        M: number of RIS elements.
        sigma2: receiver noise power [W].
        B: symbol rate [symbols/s].
    """

    rho: float
    alpha: float
    beta: float
    M: int
    sigma2: float
    B: float

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if not self.B > 0:
            raise ValueError(f"B must be > 0, got {self.B}")
        object.__setattr__(self, "M", int(self.M))

    @classmethod
    def from_db(cls, rho_db, alpha_db, beta_db, M, sigma2_db, B):
        return cls(
            rho=db_to_linear(rho_db),
            alpha=db_to_linear(alpha_db),
            beta=db_to_linear(beta_db),
            M=M,
            sigma2=db_to_linear(sigma2_db),
            B=B,
        )

    @property
    def cascade_gain(self) -> float:
        """alpha * beta * M, the total average gain through the surface."""
        return self.alpha * self.beta * self.M

    def subarray_variance(self, N) -> float:
        return self.cascade_gain / N

    def with_elements(self, M: int) -> "ChannelScenario":
        return ChannelScenario(self.rho, self.alpha, self.beta, M, self.sigma2, self.B)


@dataclass
class ChannelRealization:
    """Direct path ``p`` and subarray channels ``Z``.

    Holds either one draw (``p`` scalar, ``Z`` of shape ``(N,)``) or a batch
    (``p`` of shape ``(T,)``, ``Z`` of shape ``(T, N)``).
    """

    p: complex | np.ndarray
    Z: np.ndarray

    @property
    def N(self) -> int:
        return np.shape(self.Z)[-1]

    @property
    def h(self) -> np.ndarray:
        """Stacked coefficient vector ``[p, Z_1, ..., Z_N]`` along the last axis."""
        p = np.asarray(self.p)[..., None]
        return np.concatenate([p, np.asarray(self.Z)], axis=-1)


def check_subarrays(M: int, N) -> int:
    if int(N) != N or N < 1:
        raise ValueError(f"number of subarrays must be a positive integer, got {N}")
    N = int(N)
    if M % N:
        raise ValueError(f"N={N} does not divide M={M}")
    return N


def complex_normal(rng: np.random.Generator, variance, size=None) -> np.ndarray:
    """CN(0, variance) samples: independent real/imag parts of variance/2 each."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * rng.standard_normal(size) + 1j * scale * rng.standard_normal(size)


def wrap_phase(x):
    """Map angles to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    out = x - 2.0 * np.pi * np.ceil((x - np.pi) / (2.0 * np.pi))
    return out if out.ndim else float(out)


def safe_angle(z):
    """np.angle with arg(0) := 0 (signed zeros would otherwise give +-pi)."""
    z = np.asarray(z)
    out = np.where(z == 0, 0.0, np.angle(z))
    return out if out.ndim else float(out)


def sample_channels(
    scenario: ChannelScenario,
    N: int,
    trials: int,
    rng: np.random.Generator,
    per_element: bool = False,
) -> ChannelRealization:
    """Draw ``trials`` independent realizations as one batch.

    With ``per_element`` the subarray channels are built from the M/N element
    paths ``sqrt(alpha) exp(-j phi) b`` with uniform LoS phases ``phi`` and
    ``b ~ CN(0, beta)``; otherwise ``Z_n ~ CN(0, alpha beta M / N)`` directly.
    Both give the same law.
    """
    N = check_subarrays(scenario.M, N)
    p = complex_normal(rng, scenario.rho, trials)
    if not per_element:
        Z = complex_normal(rng, scenario.subarray_variance(N), (trials, N))
    else:
        per = scenario.M // N
        phi = rng.uniform(-np.pi, np.pi, (trials, N, per))
        b = complex_normal(rng, scenario.beta, (trials, N, per))
        Z = (math.sqrt(scenario.alpha) * np.exp(-1j * phi) * b).sum(axis=-1)
    return ChannelRealization(p=p, Z=Z)


def sample_realization(
    scenario: ChannelScenario, N: int, rng: np.random.Generator, per_element: bool = False
) -> ChannelRealization:
    batch = sample_channels(scenario, N, 1, rng, per_element=per_element)
    return ChannelRealization(p=complex(batch.p[0]), Z=batch.Z[0])


def end_to_end_channel(realization: ChannelRealization, phases) -> complex | np.ndarray:
    """g = p + sum_n Z_n exp(-j c_n); broadcasts over a leading batch axis."""
    Z = np.asarray(realization.Z)
    phases = np.asarray(phases, dtype=float)
    if phases.shape[-1] != Z.shape[-1]:
        raise ValueError(f"expected {Z.shape[-1]} phases, got {phases.shape[-1]}")
    g = realization.p + np.sum(Z * np.exp(-1j * phases), axis=-1)
    return complex(g) if np.ndim(g) == 0 else g


def instantaneous_snr(g, p_data: float, sigma2: float):
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    snr = (p_data / sigma2) * np.abs(g) ** 2
    return float(snr) if np.ndim(snr) == 0 else snr


def optimal_phases(realization: ChannelRealization) -> np.ndarray:
    """c_n = arg(Z_n) - arg(p), which co-phases every subarray with the direct path.

    arg(0) is taken as 0, so with no direct path all subarrays align to angle 0.
    """
    ref = np.asarray(safe_angle(realization.p))[..., None]
    return wrap_phase(safe_angle(realization.Z) - ref)
