"""b-bit RIS phase codebooks and the nearest-point phase quantizer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import wrap_phase


@dataclass(frozen=True)
class RisCodebook:
    """K = 2**bits equally spaced phases on the unit circle.

    ``bits=None`` stands for infinite resolution (any phase is realizable).
    The 1- and 2-bit sets are offset by pi/4, i.e. {pi/4, -3pi/4} and
    {+-pi/4, +-3pi/4}; from 3 bits on the set contains 0.
    """

    bits: int | None
    phases: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.bits is not None and (int(self.bits) != self.bits or self.bits < 1):
            raise ValueError(f"bits must be a positive integer or None, got {self.bits}")
        if self.bits is None:
            phases = np.empty(0)
        else:
            K = 2 ** int(self.bits)
            step = 2 * math.pi / K
            phases = np.sort(wrap_phase(self.offset + step * np.arange(K)))
        object.__setattr__(self, "phases", phases)

    @classmethod
    def parse(cls, value) -> "RisCodebook":
        """Accepts 1, 2, 3, ... or 'inf' / None / math.inf."""
        if value is None or (isinstance(value, str) and value.strip().lower() in ("inf", "infinite")):
            return cls(None)
        if isinstance(value, float) and math.isinf(value):
            return cls(None)
        if isinstance(value, str):
            try:
                value = int(value.strip())
            except ValueError:
                raise ValueError(f"invalid codebook resolution {value!r}") from None
        if isinstance(value, bool) or int(value) != value:
            raise ValueError(f"invalid codebook resolution {value!r}")
        return cls(int(value))

    @property
    def infinite(self) -> bool:
        return self.bits is None

    @property
    def K(self) -> float:
        return math.inf if self.bits is None else 2 ** self.bits

    @property
    def step(self) -> float:
        return 0.0 if self.bits is None else 2 * math.pi / self.K

    @property
    def offset(self) -> float:
        if self.bits is None:
            return 0.0
        return math.pi / 4 if self.bits <= 2 else 0.0

    def __str__(self):
        return "inf" if self.bits is None else str(self.bits)


def _cell_index(codebook: RisCodebook, target):
    # nearest grid index; ties go to the lower neighbour so the error stays in [-pi/K, pi/K)
    u = (np.asarray(target, dtype=float) - codebook.offset) / codebook.step
    j = np.ceil(u - 0.5)
    return j, u


def quantize_phase(codebook: RisCodebook, target):
    """Nearest codebook phase to ``target`` (radians), in (-pi, pi].

    On an exact tie between two codewords the one reached by rotating
    clockwise from the target is chosen.
    """
    if codebook.infinite:
        return wrap_phase(target)
    j, _ = _cell_index(codebook, target)
    K = int(codebook.K)
    # look the angle up in the table so repeated quantization is bit-stable
    k = np.mod(j, K).astype(int)
    out = wrap_phase(codebook.offset + codebook.step * np.arange(K))[k]
    return out if np.ndim(out) else float(out)


def quantization_error(codebook: RisCodebook, target):
    """wrap(quantize_phase(target) - target), always in [-pi/K, pi/K)."""
    if codebook.infinite:
        return np.zeros_like(np.asarray(target, dtype=float)) if np.ndim(target) else 0.0
    j, u = _cell_index(codebook, target)
    err = (j - u) * codebook.step
    half = codebook.step / 2
    err = np.where(err >= half, np.nextafter(half, -np.inf), err)
    return err if np.ndim(err) else float(err)


def sinc_factor(K) -> float:
    """sinc(1/K) = sin(pi/K) / (pi/K); 1 for infinite resolution."""
    if K is None or math.isinf(K):
        return 1.0
    if K < 2:
        raise ValueError(f"need at least 2 quantization states, got K={K}")
    x = math.pi / K
    return math.sin(x) / x
