"""Link-level Monte Carlo: pilots -> MMSE estimates -> quantized phases -> data SNR.

Trials are split into fixed-size blocks. Block ``i`` draws from its own stream
``SeedSequence(seed, spawn_key=(i,))``, so the result does not depend on how
many worker threads process the blocks or in which order they finish.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    ChannelScenario,
    check_subarrays,
    end_to_end_channel,
    instantaneous_snr,
    safe_angle,
    sample_channels,
)
from .estimation import (
    build_pilot_matrix,
    decorrelated_observations,
    mmse_estimate,
    simulate_pilot_reception,
)
from .quantization import RisCodebook, quantize_phase

MODES = ("perfect_csi", "estimated_csi")


@dataclass
class McConfig:
    trials: int = 10_000
    seed: int = 0
    mode: str = "perfect_csi"
    codebook: RisCodebook = field(default_factory=lambda: RisCodebook(None))
    workers: int = 1
    block_size: int = 256
    explicit_pilots: bool = False  # materialize the DFT pilot matrix instead of sampling decorrelated noise
    per_element: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


@dataclass
class McEstimate:
    mean: float
    std_error: float
    trials: int

    def z_score(self, value: float) -> float:
        if self.std_error == 0:
            return 0.0 if value == self.mean else math.inf
        return (self.mean - value) / self.std_error


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _run_blocks(simulate, config: McConfig) -> McEstimate:
    sizes = [config.block_size] * (config.trials // config.block_size)
    if config.trials % config.block_size:
        sizes.append(config.trials % config.block_size)

    def job(i):
        return simulate(sizes[i], block_rng(config.seed, i))

    if config.workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    return summarize(np.concatenate(parts))


def summarize(samples) -> McEstimate:
    """Mean and standard error with exactly rounded sums (order-independent)."""
    x = np.asarray(samples, dtype=float)
    T = x.size
    mean = math.fsum(x) / T
    if T < 2:
        return McEstimate(mean, 0.0, T)
    var = math.fsum((x - mean) ** 2) / (T - 1)
    return McEstimate(mean, math.sqrt(var / T), T)


def simulate_snr_block(
    scenario: ChannelScenario,
    N: int,
    p_pilot: float,
    p_data: float,
    trials: int,
    rng: np.random.Generator,
    mode: str = "estimated_csi",
    codebook: RisCodebook | None = None,
    explicit_pilots: bool = False,
    per_element: bool = False,
) -> np.ndarray:
    """Data-phase SNR of ``trials`` independent channel draws."""
    codebook = codebook or RisCodebook(None)
    real = sample_channels(scenario, N, trials, rng, per_element=per_element)
    if mode == "perfect_csi" or math.isinf(p_pilot):
        p_ref, Z_ref = real.p, real.Z
    else:
        if explicit_pilots:
            ybar = simulate_pilot_reception(real, build_pilot_matrix(N), p_pilot, scenario.sigma2, rng)
        else:
            ybar = decorrelated_observations(real, p_pilot, scenario.sigma2, rng)
        est = mmse_estimate(ybar, scenario, N, p_pilot)
        p_ref, Z_ref = est.p_hat, est.Z_hat
    targets = safe_angle(Z_ref) - safe_angle(p_ref)[:, None]
    phases = quantize_phase(codebook, targets)
    g = end_to_end_channel(real, phases)
    return instantaneous_snr(g, p_data, scenario.sigma2)


def mc_average_snr(
    scenario: ChannelScenario, N: int, p_pilot: float, p_data: float, config: McConfig
) -> McEstimate:
    """Empirical average SNR of the full estimate-then-configure pipeline."""
    N = check_subarrays(scenario.M, N)

    def simulate(size, rng):
        return simulate_snr_block(
            scenario, N, p_pilot, p_data, size, rng,
            mode=config.mode,
            codebook=config.codebook,
            explicit_pilots=config.explicit_pilots,
            per_element=config.per_element,
        )

    return _run_blocks(simulate, config)


def mc_baseline_elements_off(scenario: ChannelScenario, N: int, p_data: float, config: McConfig) -> McEstimate:
    """N individually phased elements (gain alpha*beta each), the rest switched off.

    Channels are perfectly known; ``config.codebook`` still applies.
    """
    if not 1 <= N <= scenario.M:
        raise ValueError(f"need 1 <= N <= M, got N={N}")
    reduced = scenario.with_elements(int(N))

    def simulate(size, rng):
        return simulate_snr_block(reduced, int(N), math.inf, p_data, size, rng,
                                  mode="perfect_csi", codebook=config.codebook)

    return _run_blocks(simulate, config)
