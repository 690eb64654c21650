"""Slow, independent reference implementations and golden fixture generation.

Everything here works on plain Python bit lists with textbook algorithms
(long division, explicit shift registers) and deliberately shares no code
with the production modules it cross-checks.  The `golden` CLI subcommand
calls `generate_golden` to (re)write the fixture files used by the tests.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

# x^16 + x^12 + x^5 + 1, coefficients degree 16 .. 0
CRC16_DIVISOR = [1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]


def gf2_remainder(dividend: list[int], divisor: list[int]) -> list[int]:
    """Remainder of MSB-first polynomial long division over GF(2)."""
    work = list(dividend)
    n = len(divisor)
    for i in range(len(work) - n + 1):
        if work[i]:
            for j in range(n):
                work[i + j] ^= divisor[j]
    return work[-(n - 1):]


def reference_crc_encode(m: list[int]) -> list[int]:
    """Systematic CRC-16: append rem(m(x) * x^16 mod g)."""
    return list(m) + gf2_remainder(list(m) + [0] * 16, CRC16_DIVISOR)


def reference_crc_syndrome_weight(u: list[int]) -> int:
    return sum(gf2_remainder(list(u), CRC16_DIVISOR))


def _taps_bits(tap_octal, memory: int) -> list[int]:
    """Octal digit sequence -> MSB-first coefficient list of length memory+1."""
    mask = int(str(tap_octal), 8)
    return [(mask >> (memory - i)) & 1 for i in range(memory + 1)]


def reference_state_of(u: list[int], memory: int) -> int:
    """Pack the last `memory` bits, newest at the MSB."""
    reg = [u[-1 - k] for k in range(memory)]  # r_1 .. r_nu
    return sum(r << (memory - 1 - k) for k, r in enumerate(reg))


def reference_tb_encode(u: list[int], memory: int, taps_octal) -> list[int]:
    """Explicit-register tail-biting encoder."""
    taps = [_taps_bits(t, memory) for t in taps_octal]
    reg = [u[-1 - k] for k in range(memory)]
    out = []
    for b in u:
        window = [b] + reg
        for t in taps:
            out.append(sum(w & c for w, c in zip(window, t)) & 1)
        reg = [b] + reg[:-1]
    return out


def reference_trellis_table(memory: int, taps_octal) -> list[dict]:
    """Every (state, bit) -> (next state, output bits), via the register sim."""
    taps = [_taps_bits(t, memory) for t in taps_octal]
    rows = []
    for s in range(1 << memory):
        reg = [(s >> (memory - 1 - k)) & 1 for k in range(memory)]
        for b in (0, 1):
            window = [b] + reg
            out = [sum(w & c for w, c in zip(window, t)) & 1 for t in taps]
            nreg = [b] + reg[:-1]
            ns = sum(r << (memory - 1 - k) for k, r in enumerate(nreg))
            rows.append({"state": s, "bit": b, "next_state": ns, "out": out})
    return rows


# ---------------------------------------------------------------------------
# fixture files
# ---------------------------------------------------------------------------

def _bits(rng: np.random.Generator, n: int) -> list[int]:
    return rng.integers(0, 2, size=n).tolist()


def generate_golden(out_dir: str | Path, seed: int = 20240913) -> list[Path]:
    """Write the golden fixture JSONs; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    written = []

    # CRC-16 vectors
    cases = []
    cases.append({"message": [0] * 13, "codeword": reference_crc_encode([0] * 13)})
    m = [1] + [0] * 12
    cases.append({"message": m, "codeword": reference_crc_encode(m)})
    for n_m in (13, 15, 30, 50):
        for _ in range(5):
            m = _bits(rng, n_m)
            cases.append({"message": m, "codeword": reference_crc_encode(m)})
    non_codewords = []
    for _ in range(5):
        u = _bits(rng, 29)
        while reference_crc_syndrome_weight(u) == 0:
            u = _bits(rng, 29)
        non_codewords.append({"word": u, "syndrome_weight": reference_crc_syndrome_weight(u)})
    p = out / "crc16.json"
    p.write_text(json.dumps({"encode": cases, "syndrome": non_codewords}, indent=1))
    written.append(p)

    # tail-biting encode vectors, LTE code and a 4-state toy code
    def encode_cases(memory, taps, lengths, count):
        rows = []
        for n_u in lengths:
            for _ in range(count):
                u = _bits(rng, n_u)
                rows.append(
                    {
                        "u": u,
                        "start_state": reference_state_of(u, memory),
                        "codeword": reference_tb_encode(u, memory, taps),
                    }
                )
        return rows

    u_fixed = _bits(rng, 23) + [1, 0, 1, 1, 0, 0]
    lte = {
        "memory": 6,
        "polynomials": [133, 171, 165],
        "fixed_tail_case": {
            "u": u_fixed,
            "start_state": reference_state_of(u_fixed, 6),
            "codeword": reference_tb_encode(u_fixed, 6, [133, 171, 165]),
        },
        "cases": encode_cases(6, [133, 171, 165], (29, 46), 5),
    }
    toy = {
        "memory": 2,
        "polynomials": [7, 5],
        "cases": encode_cases(2, [7, 5], (6, 10), 5),
    }
    p = out / "tb_encode.json"
    p.write_text(json.dumps({"lte": lte, "toy": toy}, indent=1))
    written.append(p)

    # small trellis transition tables
    p = out / "trellis_tables.json"
    p.write_text(
        json.dumps(
            {
                "two_state": {
                    "memory": 1,
                    "polynomials": [3],
                    "table": reference_trellis_table(1, [3]),
                },
                "toy": {
                    "memory": 2,
                    "polynomials": [7, 5],
                    "table": reference_trellis_table(2, [7, 5]),
                },
            },
            indent=1,
        )
    )
    written.append(p)
    return written
