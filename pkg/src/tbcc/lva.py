"""Parallel list Viterbi decoding with CRC-gated candidate selection.

The list forward pass keeps the L best (metric, provenance) entries per
state per stage; candidates therefore come out of the final stage already
sorted by metric.  Selection returns the best-metric candidate whose CRC
syndrome is zero, falling back to the overall best candidate when none
passes.
"""

from __future__ import annotations

import numpy as np

from .crc import CrcSpec, crc_syndrome_batch
from .trellis import Trellis
from .viterbi import DEFAULT_LLR_CLIP, biased_init, middle_replication


def list_forward_kernel(
    llr: np.ndarray,
    trellis: Trellis,
    init: np.ndarray,
    num_stages: int,
    list_size: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (lam (B, S, L) final metrics, prov (B, T, S, L)).

    prov entries index the merged candidate array [even-pred ranks 0..L-1 |
    odd-pred ranks 0..L-1]; stable sorting keeps ties deterministic (even,
    i.e. lower-numbered, predecessor first, then lower rank).
    """
    llr = np.asarray(llr, dtype=np.float64)
    if list_size < 1:
        raise ValueError("list size must be >= 1")
    B = llr.shape[0]
    S = trellis.num_states
    V = trellis.n_out
    half = S >> 1
    L = list_size
    T = num_stages
    C = trellis.edge_out_f

    lam = np.full((B, S, L), np.inf)
    lam[:, :, 0] = np.asarray(init, dtype=np.float64)
    prov = np.empty((B, T, S, L), dtype=np.uint8)
    for t in range(T):
        beta = llr[:, t * V:(t + 1) * V] @ C.T
        pe = lam[:, 0::2, :]
        po = lam[:, 1::2, :]
        new = np.empty_like(lam)
        for b in (0, 1):
            cand = np.concatenate(
                [pe + beta[:, b::4, None], po + beta[:, (2 + b)::4, None]], axis=2
            )  # (B, half, 2L)
            order = np.argsort(cand, axis=2, kind="stable")[:, :, :L]
            sl = slice(b * half, (b + 1) * half)
            new[:, sl, :] = np.take_along_axis(cand, order, axis=2)
            prov[:, t, sl, :] = order
        lam = new
    return lam, prov


def list_traceback(
    prov: np.ndarray,
    end_states: np.ndarray,
    rank: int,
    trellis: Trellis,
) -> np.ndarray:
    """Bits (B, T) of the rank-th best path into each word's end state."""
    B, T, S, L = prov.shape
    msb = trellis.memory - 1
    qmask = (S >> 1) - 1
    s = np.array(end_states, dtype=np.int64, copy=True).reshape(B)
    k = np.full(B, rank, dtype=np.int64)
    bits = np.empty((B, T), dtype=np.uint8)
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        bits[:, t] = s >> msb
        j = prov[rows, t, s, k].astype(np.int64)
        parity = (j >= L).astype(np.int64)
        s = 2 * (s & qmask) + parity
        k = j - parity * L
    return bits


def list_candidates(
    llr: np.ndarray,
    trellis: Trellis,
    init: np.ndarray,
    num_stages: int,
    list_size: int,
    end_states: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """All L candidates per word: (bits (B, L, T), metrics (B, L))."""
    lam, prov = list_forward_kernel(llr, trellis, init, num_stages, list_size)
    B = llr.shape[0]
    ends = np.asarray(end_states).reshape(B)
    metrics = lam[np.arange(B), ends, :]
    bits = np.stack(
        [list_traceback(prov, ends, r, trellis) for r in range(list_size)], axis=1
    )
    return bits, metrics


def select_by_syndrome(syndromes: np.ndarray, metrics: np.ndarray) -> np.ndarray:
    """Index of the best candidate: first zero-syndrome rank, else rank 0.

    Ranks are metric-ordered, so "first zero" is the minimal-metric codeword
    passing the CRC.  Candidates with infinite metric (padding) never win.
    """
    ok = (syndromes == 0) & np.isfinite(metrics)
    return np.where(ok.any(axis=1), ok.argmax(axis=1), 0)


def lcva_decode_batch(
    llr: np.ndarray,
    trellis: Trellis,
    I: int,
    list_size: int,
    crc: CrcSpec,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> np.ndarray:
    """List circular Viterbi: list VA over the I-replicated word, middle bits out."""
    if I < 1 or I % 2 == 0:
        raise ValueError("replication count must be odd and >= 1")
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    n_u = llr.shape[1] // trellis.n_out
    rep = np.tile(llr, (1, I))
    init = biased_init(trellis, 0, llr_clip)
    ends = np.zeros(B, dtype=np.int64)
    bits, metrics = list_candidates(rep, trellis, init, I * n_u, list_size, ends)
    lo, hi = middle_replication(I, n_u)
    words = bits[:, :, lo:hi]
    syn = crc_syndrome_batch(words.reshape(B * list_size, n_u), crc).reshape(B, list_size)
    pick = select_by_syndrome(syn, metrics)
    return words[np.arange(B), pick]


def lgva_decode_batch(
    llr: np.ndarray,
    trellis: Trellis,
    true_states: np.ndarray,
    list_size: int,
    crc: CrcSpec,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> np.ndarray:
    """Genie-aided list VA: start-state bias and trace-back at the true state."""
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    n_u = llr.shape[1] // trellis.n_out
    states = np.asarray(true_states, dtype=np.int64).reshape(B)
    init = np.zeros((B, trellis.num_states))
    init[np.arange(B), states] = -llr_clip
    bits, metrics = list_candidates(llr, trellis, init, n_u, list_size, states)
    syn = crc_syndrome_batch(bits.reshape(B * list_size, n_u), crc).reshape(B, list_size)
    pick = select_by_syndrome(syn, metrics)
    return bits[np.arange(B), pick]


def list_viterbi_decode(
    llr: np.ndarray,
    trellis: Trellis,
    init: np.ndarray,
    list_size: int,
    crc: CrcSpec,
    end_state: int = 0,
) -> np.ndarray:
    """Single-word list VA over the whole block with CRC candidate selection."""
    llr = np.asarray(llr, dtype=np.float64)
    n_u = llr.size // trellis.n_out
    bits, metrics = list_candidates(
        llr[None, :], trellis, init, n_u, list_size, np.array([end_state])
    )
    syn = crc_syndrome_batch(bits[0], crc)[None, :]
    pick = select_by_syndrome(syn, metrics)
    return bits[0, pick[0]]


def lcva_decode(
    llr: np.ndarray,
    trellis: Trellis,
    I: int,
    list_size: int,
    crc: CrcSpec,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> np.ndarray:
    return lcva_decode_batch(np.asarray(llr)[None, :], trellis, I, list_size, crc, llr_clip)[0]


def lgva_decode(
    llr: np.ndarray,
    trellis: Trellis,
    true_state: int,
    list_size: int,
    crc: CrcSpec,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> np.ndarray:
    if not 0 <= true_state < trellis.num_states:
        raise ValueError(f"state {true_state} outside the state space")
    return lgva_decode_batch(
        np.asarray(llr)[None, :], trellis, np.array([true_state]), list_size, crc, llr_clip
    )[0]
