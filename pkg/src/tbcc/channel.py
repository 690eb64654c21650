"""BPSK over AWGN and LLR computation.

SNR convention used throughout: SNR(dB) = -10*log10(sigma^2) on the
unit-energy BPSK symbol, i.e. snr = 1/sigma^2 (Es/N0-style with Es = 1).
Training and evaluation both use this definition, so all comparisons are
internally consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    seed: int = 0

    @property
    def sigma2(self) -> float:
        return noise_variance(self.snr_db)


def noise_variance(snr_db: float) -> float:
    """sigma^2 = 10^(-snr_db/10)."""
    return float(10.0 ** (-snr_db / 10.0))


def modulate(c: np.ndarray) -> np.ndarray:
    """BPSK map 0 -> +1, 1 -> -1."""
    c = np.asarray(c)
    return 1.0 - 2.0 * c.astype(np.float64)


def llr_from_received(y: np.ndarray, sigma2: float) -> np.ndarray:
    """Gaussian-channel LLR: l = 2*y / sigma^2."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    return (2.0 / sigma2) * np.asarray(y, dtype=np.float64)


def awgn_llr(
    x: np.ndarray,
    sigma2: float,
    rng: np.random.Generator,
    noiseless: bool = False,
) -> np.ndarray:
    """Add N(0, sigma2) noise to modulated symbols and return LLRs."""
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = x if noiseless else x + np.sqrt(sigma2) * rng.standard_normal(x.shape)
    return llr_from_received(y, sigma2)


def transmit(x: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """One seeded channel use; deterministic given (x, cfg)."""
    rng = np.random.default_rng(cfg.seed)
    return awgn_llr(x, cfg.sigma2, rng)


def random_message_bits(rng: np.random.Generator, count: int, n_bits: int) -> np.ndarray:
    """(count, n_bits) uniform random bits."""
    return rng.integers(0, 2, size=(count, n_bits), dtype=np.uint8)
