"""Degraded AWGN broadcast channel: configuration, noise samplers and transmission."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# spawn-key stream tags; every random draw in the package is keyed by
# (master seed, tag, *indices) so results do not depend on call order
STREAM_NOISE = 1
STREAM_MESSAGES = 2
STREAM_CODEBOOK = 3
STREAM_DECISION = 4


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for the stream identified by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def capacity_c(snr: float) -> float:
    """Gaussian capacity 0.5*log2(1+snr) in bits per channel use."""
    if snr < 0 or math.isnan(snr):
        raise ValueError(f"snr must be non-negative, got {snr}")
    return 0.5 * math.log2(1.0 + snr)


@dataclass(frozen=True)
class ChannelConfig:
    """Power budget and per-receiver noise variances, strongest receiver first."""

    power: float
    noise: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "noise", tuple(float(v) for v in self.noise))
        object.__setattr__(self, "power", float(self.power))
        if not math.isfinite(self.power) or self.power < 0:
            raise ValueError(f"power must be finite and >= 0, got {self.power}")
        if not self.noise:
            raise ValueError("at least one receiver is required")
        if any(not math.isfinite(v) or v <= 0 for v in self.noise):
            raise ValueError(f"noise variances must be finite and > 0, got {self.noise}")
        if any(b < a for a, b in zip(self.noise, self.noise[1:])):
            raise ValueError(f"noise variances must be non-decreasing, got {self.noise}")

    @property
    def receivers(self) -> int:
        return len(self.noise)


@dataclass(frozen=True)
class NoiseRealization:
    """Noise sequences, one row per receiver (row 0 is receiver 1)."""

    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.ndim != 2:
            raise ValueError("noise must be a (receivers, n) array")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.shape[1]

    def __getitem__(self, receiver: int) -> np.ndarray:
        if not 1 <= receiver <= self.z.shape[0]:
            raise IndexError(f"receiver {receiver} out of range")
        return self.z[receiver - 1]


def _check_n(n: int) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"blocklength must be a positive integer, got {n}")
    return int(n)


def sample_noise_independent(cfg: ChannelConfig, n: int, seed: int, trial: int = 0) -> NoiseRealization:
    """Mutually independent i.i.d. N(0, N_i) sequences for every receiver."""
    n = _check_n(n)
    rows = [
        math.sqrt(var) * rng_for(seed, STREAM_NOISE, trial, i).standard_normal(n)
        for i, var in enumerate(cfg.noise, start=1)
    ]
    return NoiseRealization(np.vstack(rows))


def sample_noise_degraded_chain(cfg: ChannelConfig, n: int, seed: int, trial: int = 0) -> NoiseRealization:
    """Physically degraded version: z_i = z_{i-1} + increment of variance N_i - N_{i-1}.

    Marginals coincide with :func:`sample_noise_independent`; receivers are
    no longer independent.
    """
    n = _check_n(n)
    prev_var = 0.0
    acc = np.zeros(n)
    rows = []
    for i, var in enumerate(cfg.noise, start=1):
        step = var - prev_var
        if step < 0:
            raise ValueError("degraded chain needs non-decreasing noise variances")
        if step > 0:
            acc = acc + math.sqrt(step) * rng_for(seed, STREAM_NOISE, trial, i).standard_normal(n)
        rows.append(acc.copy())
        prev_var = var
    return NoiseRealization(np.vstack(rows))


SAMPLERS = {
    "independent": sample_noise_independent,
    "chain": sample_noise_degraded_chain,
}


def transmit(x: Sequence[float], noise: NoiseRealization, receiver: int) -> np.ndarray:
    """Channel output y_i = x + z_i at ``receiver`` (1-based)."""
    x = np.asarray(x, dtype=float)
    z = noise[receiver]
    if x.shape != z.shape:
        raise ValueError(f"codeword length {x.shape} does not match noise length {z.shape}")
    return x + z
