"""Trellis forward pass, trace-back, circular Viterbi, and the per-state MLD.

Stage/row conventions: a forward pass over T stages fills path-metric rows
lam[0..T]; row 0 is the initialization and transition t (0-based) consumes
the V LLRs llr[t*V:(t+1)*V], moving row t to row t+1.  The input bit of a
transition equals the MSB of the destination state, so trace-back reads the
decoded bits directly off the surviving state sequence.

Branch metric: for an edge with output bits c_1..c_V,

    beta = sum_v llr_v * c_v.

This is the AWGN negative log-likelihood up to an edge-independent constant:
-log P(y|x) = ||y - x||^2 / (2 sigma^2) + const, and with x_v = 1 - 2 c_v,
||y - x||^2 = ||y||^2 + V - 2 y.x = const + 2 sum_v (2 y_v / sigma^2) c_v
(up to the common sigma^2 scale), i.e. beta differs from the true metric by
terms identical for all edges of a stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .trellis import Trellis

DEFAULT_LLR_CLIP = 20.0


def branch_metrics(llr: np.ndarray, trellis: Trellis) -> np.ndarray:
    """Per-stage, per-edge metrics, shape (num_stages, num_edges)."""
    llr = np.asarray(llr, dtype=np.float64)
    V = trellis.n_out
    if llr.ndim != 1 or llr.size % V:
        raise ValueError("LLR length must be a multiple of the code's output arity")
    return llr.reshape(-1, V) @ trellis.edge_out_f.T


def biased_init(trellis: Trellis, state: int, bias: float = DEFAULT_LLR_CLIP) -> np.ndarray:
    """Initialization favouring `state`: -bias there, 0 elsewhere."""
    if not 0 <= state < trellis.num_states:
        raise ValueError(f"state {state} outside the state space")
    init = np.zeros(trellis.num_states)
    init[state] = -bias
    return init


def uniform_init(trellis: Trellis) -> np.ndarray:
    """All-zero initialization (every start state equally likely)."""
    return np.zeros(trellis.num_states)


class ForwardResult(NamedTuple):
    lam_last: np.ndarray        # (B, S) final row (normalized if requested)
    choice: np.ndarray          # (B, T, S) uint8, 0 = even predecessor, 1 = odd
    offset_total: np.ndarray    # (B,) sum of per-row subtractions
    lam_full: np.ndarray | None      # (B, T+1, S) when keep_full
    offsets: np.ndarray | None       # (B, T+1) per-row subtractions when keep_full


def forward_kernel(
    llr: np.ndarray,
    trellis: Trellis,
    init: np.ndarray,
    num_stages: int,
    *,
    normalize: bool = False,
    path_w: np.ndarray | None = None,
    branch_w: np.ndarray | None = None,
    weight_start: int = 0,
    keep_full: bool = False,
) -> ForwardResult:
    """Batched add-compare-select sweep.

    `llr` is (B, >= num_stages*V); `init` is (S,) or (B, S).  Optional
    per-edge weights (W, num_edges) multiply the path metric and branch
    metric of transitions weight_start .. weight_start+W-1; weighted stages
    must not be normalized (a common row shift no longer cancels once each
    edge carries its own multiplier).
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.ndim != 2:
        raise ValueError("forward_kernel expects a (B, N) LLR batch")
    S = trellis.num_states
    V = trellis.n_out
    half = S >> 1
    T = num_stages
    if llr.shape[1] < T * V:
        raise ValueError("LLR stream shorter than the requested number of stages")
    B = llr.shape[0]
    weighted = path_w is not None
    if weighted:
        if branch_w is None or path_w.shape != branch_w.shape:
            raise ValueError("path and branch weights must come as an equal-shape pair")
        if path_w.shape[1] != trellis.num_edges:
            raise ValueError("weight tables must have one column per trellis edge")
        if normalize:
            raise ValueError("weighted stages cannot be row-normalized")

    C = trellis.edge_out_f
    if _kernels.AVAILABLE and _kernels.ENABLED:
        init_b = np.ascontiguousarray(
            np.broadcast_to(np.asarray(init, dtype=np.float64), (B, S))
        )
        E = trellis.num_edges
        pw = path_w if weighted else np.zeros((0, E))
        bw = branch_w if weighted else np.zeros((0, E))
        lam_last, choice, offtot, lam_full, offsets = _kernels.forward_nb(
            np.ascontiguousarray(llr),
            C,
            init_b,
            T,
            np.ascontiguousarray(pw),
            np.ascontiguousarray(bw),
            weight_start,
            normalize,
            keep_full,
        )
        return ForwardResult(
            lam_last,
            choice,
            offtot,
            lam_full if keep_full else None,
            offsets if keep_full else None,
        )

    lam = np.broadcast_to(np.asarray(init, dtype=np.float64), (B, S)).copy()
    choice = np.empty((B, T, S), dtype=np.uint8)
    offset_total = np.zeros(B)
    lam_full = np.empty((B, T + 1, S)) if keep_full else None
    offsets = np.zeros((B, T + 1)) if keep_full else None

    if normalize:
        m = lam.min(axis=1)
        lam -= m[:, None]
        offset_total += m
        if keep_full:
            offsets[:, 0] = m
    if keep_full:
        lam_full[:, 0] = lam

    nxt = np.empty((B, S))
    for t in range(T):
        beta = llr[:, t * V:(t + 1) * V] @ C.T  # (B, num_edges)
        pe = lam[:, 0::2]
        po = lam[:, 1::2]
        w_idx = t - weight_start
        use_w = weighted and 0 <= w_idx < path_w.shape[0]
        for b in (0, 1):
            be = beta[:, b::4]
            bo = beta[:, (2 + b)::4]
            if use_w:
                cand_e = path_w[w_idx, b::4] * pe + branch_w[w_idx, b::4] * be
                cand_o = path_w[w_idx, (2 + b)::4] * po + branch_w[w_idx, (2 + b)::4] * bo
            else:
                cand_e = pe + be
                cand_o = po + bo
            take_o = cand_o < cand_e  # ties go to the even (lower-numbered) predecessor
            sl = slice(b * half, (b + 1) * half)
            nxt[:, sl] = np.where(take_o, cand_o, cand_e)
            choice[:, t, sl] = take_o
        lam, nxt = nxt, lam
        if normalize:
            m = lam.min(axis=1)
            lam -= m[:, None]
            offset_total += m
            if keep_full:
                offsets[:, t + 1] = m
        if keep_full:
            lam_full[:, t + 1] = lam

    return ForwardResult(lam, choice, offset_total, lam_full, offsets)


def traceback_batch(choice: np.ndarray, end_states: np.ndarray, trellis: Trellis) -> tuple[np.ndarray, np.ndarray]:
    """Walk the stored decisions backwards; returns (bits (B, T), start states)."""
    B, T, S = choice.shape
    msb = trellis.memory - 1
    qmask = (S >> 1) - 1
    s = np.array(end_states, dtype=np.int64, copy=True).reshape(B)
    bits = np.empty((B, T), dtype=np.uint8)
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        bits[:, t] = s >> msb
        s = 2 * (s & qmask) + choice[rows, t, s]
    return bits, s


@dataclass
class PathMetrics:
    """Full forward-pass record for a single word."""

    lam: np.ndarray        # (T+1, S)
    choice: np.ndarray     # (T, S)
    offsets: np.ndarray    # (T+1,) per-row subtracted amounts (0 without normalization)
    trellis: Trellis

    @property
    def num_stages(self) -> int:
        return self.choice.shape[0]

    def absolute(self) -> np.ndarray:
        """Path metrics with the normalization subtractions re-added."""
        return self.lam + np.cumsum(self.offsets)[:, None]

    def predecessor(self, row: int, state: int) -> tuple[int, int]:
        """(previous state, input bit) selected for `state` at `row` >= 1."""
        q = state & ((self.trellis.num_states >> 1) - 1)
        prev = 2 * q + int(self.choice[row - 1, state])
        return prev, state >> (self.trellis.memory - 1)


def viterbi_forward(
    llr: np.ndarray,
    trellis: Trellis,
    init: np.ndarray,
    num_stages: int | None = None,
    normalize: bool = True,
) -> PathMetrics:
    """Single-word forward pass; ties break toward the lower-numbered predecessor."""
    llr = np.asarray(llr, dtype=np.float64)
    if num_stages is None:
        num_stages = llr.size // trellis.n_out
    res = forward_kernel(
        llr[None, :], trellis, init, num_stages, normalize=normalize, keep_full=True
    )
    return PathMetrics(res.lam_full[0], res.choice[0], res.offsets[0], trellis)


def traceback(pm: PathMetrics, trellis: Trellis, end_state: int) -> np.ndarray:
    """Input-bit sequence of the surviving path into `end_state`."""
    if not 0 <= end_state < trellis.num_states:
        raise ValueError(f"state {end_state} outside the state space")
    bits, _ = traceback_batch(pm.choice[None], np.array([end_state]), trellis)
    return bits[0]


def encode_from_state(bits: np.ndarray, start_state: int, trellis: Trellis) -> np.ndarray:
    """Coded bits of the trellis path `start_state` --bits-->."""
    s = start_state
    out = np.empty(len(bits) * trellis.n_out, dtype=np.uint8)
    V = trellis.n_out
    for j, b in enumerate(np.asarray(bits, dtype=np.int64)):
        out[j * V:(j + 1) * V] = trellis.edge_out[2 * s + b]
        s = int(trellis.next_state[s, b])
    return out


def path_cost(bits: np.ndarray, start_state: int, llr: np.ndarray, trellis: Trellis) -> float:
    """Sum of branch metrics along the path `start_state` --bits-->."""
    coded = encode_from_state(bits, start_state, trellis)
    return float(np.asarray(llr, dtype=np.float64) @ coded)


# ---------------------------------------------------------------------------
# circular Viterbi
# ---------------------------------------------------------------------------

def middle_replication(I: int, block_len: int) -> tuple[int, int]:
    """Transition range [lo, hi) of the middle replication for odd I."""
    lo = (I // 2) * block_len
    return lo, lo + block_len


def cva_decode_batch(
    llr: np.ndarray,
    trellis: Trellis,
    I: int,
    llr_clip: float = DEFAULT_LLR_CLIP,
    traceback_state: int = 0,
) -> np.ndarray:
    """Circular Viterbi over a (B, N_c) batch; returns (B, N_u) bits."""
    if I < 1 or I % 2 == 0:
        raise ValueError("replication count must be odd and >= 1")
    llr = np.asarray(llr, dtype=np.float64)
    V = trellis.n_out
    n_u = llr.shape[1] // V
    rep = np.tile(llr, (1, I))
    init = biased_init(trellis, traceback_state, llr_clip)
    res = forward_kernel(rep, trellis, init, I * n_u, normalize=True)
    ends = np.full(llr.shape[0], traceback_state)
    bits, _ = traceback_batch(res.choice, ends, trellis)
    lo, hi = middle_replication(I, n_u)
    return bits[:, lo:hi]


def cva_decode(
    llr: np.ndarray,
    trellis: Trellis,
    I: int,
    llr_clip: float = DEFAULT_LLR_CLIP,
) -> np.ndarray:
    """Circular Viterbi: I-fold replication, zero-state start, middle bits out."""
    return cva_decode_batch(np.asarray(llr)[None, :], trellis, I, llr_clip)[0]


def va_decode_batch(llr: np.ndarray, trellis: Trellis) -> np.ndarray:
    """Single-sweep VA with uniform start and best-end-state trace-back."""
    llr = np.asarray(llr, dtype=np.float64)
    n_u = llr.shape[1] // trellis.n_out
    res = forward_kernel(llr, trellis, uniform_init(trellis), n_u, normalize=True)
    ends = res.lam_last.argmin(axis=1)
    bits, _ = traceback_batch(res.choice, ends, trellis)
    return bits


def va_decode(llr: np.ndarray, trellis: Trellis) -> np.ndarray:
    return va_decode_batch(np.asarray(llr)[None, :], trellis)[0]


# ---------------------------------------------------------------------------
# per-start-state maximum-likelihood decoding
# ---------------------------------------------------------------------------

def mld_decode_batch(llr: np.ndarray, trellis: Trellis) -> tuple[np.ndarray, np.ndarray]:
    """One constrained VA per start state, minimum end metric wins.

    The start-state constraint is enforced with a data-adaptive bias larger
    than any achievable path-cost spread, so no path can leak across start
    states and the result matches exhaustive codebook search exactly.
    Returns (bits (B, N_u), metrics (B,)).
    """
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    S = trellis.num_states
    chunk = max(1, 16384 // S)
    if B > chunk:
        parts = [mld_decode_batch(llr[i:i + chunk], trellis) for i in range(0, B, chunk)]
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
    n_u = llr.shape[1] // trellis.n_out
    big = 1.0 + 2.0 * np.abs(llr).sum(axis=1)  # exceeds any cost difference
    init = np.where(np.eye(S, dtype=bool), 0.0, big[:, None, None])  # (B, S, S)
    rep = np.repeat(llr, S, axis=0)
    res = forward_kernel(rep, trellis, init.reshape(B * S, S), n_u)
    end_metrics = res.lam_last.reshape(B, S, S)[:, np.arange(S), np.arange(S)]
    best = end_metrics.argmin(axis=1)  # (B,)
    metrics = end_metrics[np.arange(B), best]
    ch = res.choice.reshape(B, S, n_u, S)[np.arange(B), best]
    bits, _ = traceback_batch(ch, best, trellis)
    return bits, metrics


def mld_decode(llr: np.ndarray, trellis: Trellis, return_metric: bool = False):
    """Maximum-likelihood tail-biting decode (intended for test scale)."""
    bits, metrics = mld_decode_batch(np.asarray(llr)[None, :], trellis)
    if return_metric:
        return bits[0], float(metrics[0])
    return bits[0]
