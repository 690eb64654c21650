"""Systematic CRC-16 encoding and syndrome checking.

Bit conventions (fixed by the golden vectors in tests/golden):
message bits enter the division register MSB-first, i.e. bit 0 of the
message is the highest-degree coefficient.  Parity bits are appended
MSB-first as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# x^16 + x^12 + x^5 + 1 (LTE gCRC16), stored without the leading x^16 term.
LTE_CRC16_POLY = (1 << 12) | (1 << 5) | 1


@dataclass(frozen=True)
class CrcSpec:
    """A degree-16 CRC polynomial. `poly` omits the leading x^16 term."""

    poly: int = LTE_CRC16_POLY
    crc_len: int = 16

    def __post_init__(self):
        if self.poly >> self.crc_len:
            raise ValueError("polynomial degree exceeds crc_len")
        if not self.poly & 1:
            raise ValueError("polynomial must have a nonzero constant term")


LTE_CRC16 = CrcSpec()

# popcount table for 16-bit registers
_POPCOUNT16 = np.array(
    [bin(v).count("1") for v in range(1 << 16)], dtype=np.uint8
)


def _divide(bits: np.ndarray, spec: CrcSpec, zero_pad: bool) -> np.ndarray:
    """Shift-register polynomial division; returns the remainder registers.

    `bits` is (M, n): M words of n bits each.  The register holds the plain
    remainder rem(prefix(x), g): bits enter at the bottom and the
    coefficient falling off the top triggers the reduction.  With
    `zero_pad` the word is flushed with crc_len zeros, computing
    rem(word(x) * x^crc_len) as the encoder needs; without it the direct
    remainder rem(word(x)) comes out, which for a systematic code equals
    the parity-check syndrome.
    """
    L = spec.crc_len
    mask = (1 << L) - 1
    top = L - 1
    reg = np.zeros(bits.shape[0], dtype=np.int64)
    cols = bits.shape[1] + (L if zero_pad else 0)
    for j in range(cols):
        b = bits[:, j].astype(np.int64) if j < bits.shape[1] else 0
        off = (reg >> top) & 1
        reg = (((reg << 1) & mask) | b) ^ (off * spec.poly)
    return reg


def crc_encode(m: np.ndarray, spec: CrcSpec = LTE_CRC16) -> np.ndarray:
    """Append the 16 parity bits of `m` (systematic encoding).

    Accepts a single message (N_m,) or a batch (M, N_m).
    """
    m = np.asarray(m, dtype=np.uint8)
    single = m.ndim == 1
    m2 = m[None, :] if single else m
    if m2.shape[1] < 1:
        raise ValueError("degenerate message length")
    reg = _divide(m2, spec, zero_pad=True)
    shifts = np.arange(spec.crc_len - 1, -1, -1)
    parity = ((reg[:, None] >> shifts) & 1).astype(np.uint8)
    u = np.concatenate([m2, parity], axis=1)
    return u[0] if single else u


def crc_syndrome(u: np.ndarray, spec: CrcSpec = LTE_CRC16) -> int:
    """Hamming weight of the 16-bit parity-check syndrome of `u`.

    Zero exactly when `u` is a CRC codeword.  For a systematic code the
    syndrome equals the polynomial remainder of the received word, so a
    single register division suffices.
    """
    u = np.asarray(u, dtype=np.uint8)
    if u.ndim != 1:
        raise ValueError("crc_syndrome expects a single word")
    if u.shape[0] <= spec.crc_len:
        raise ValueError(f"word of length {u.shape[0]} is too short for CRC-{spec.crc_len}")
    reg = _divide(u[None, :], spec, zero_pad=False)
    return int(_POPCOUNT16[reg[0]])


def crc_syndrome_batch(u: np.ndarray, spec: CrcSpec = LTE_CRC16) -> np.ndarray:
    """Syndrome weights for a (M, N_u) batch of words."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[1] <= spec.crc_len:
        raise ValueError(f"words of length {u.shape[1]} are too short for CRC-{spec.crc_len}")
    reg = _divide(u, spec, zero_pad=False)
    return _POPCOUNT16[reg].astype(np.int64)
