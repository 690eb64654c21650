"""Weighted circular Viterbi: trainable per-edge metric weights.

The middle replication of the circular sweep is unfolded as a network: each
of its transitions t carries per-edge multipliers, so the add-compare-select
becomes

    lam[t+1][s] = min over preds p of  pw[t][e] * lam[t][p] + bw[t][e] * beta[t][e]

with e = 2p + input_bit.  All weights start at 1.0, which reproduces the
classical sweep exactly.  Gradients route through the min like max-pooling:
only the selected edge of each (stage, state) cell receives or passes
gradient.

The weighted sweep is never row-normalized: a common row shift no longer
cancels once each edge carries its own multiplier, and float64 has ample
range for the metric magnitudes at these block lengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .trellis import Trellis
from .viterbi import (
    DEFAULT_LLR_CLIP,
    ForwardResult,
    PathMetrics,
    forward_kernel,
    middle_replication,
    uniform_init,
)

WEIGHT_FORMAT_VERSION = 1


@dataclass
class WeightSet:
    """Learnable weights of one expert, covering the middle replication."""

    path_w: np.ndarray     # (block_len, num_edges)
    branch_w: np.ndarray   # (block_len, num_edges)
    block_len: int
    replications: int

    def __post_init__(self):
        expected = (self.block_len, None)
        if self.path_w.shape != self.branch_w.shape or self.path_w.shape[0] != self.block_len:
            raise ValueError("weight tables must be (block_len, num_edges) pairs")
        if self.replications % 2 == 0:
            raise ValueError("replication count must be odd")

    @property
    def weight_start(self) -> int:
        return (self.replications // 2) * self.block_len

    @property
    def stage_range(self) -> tuple[int, int]:
        return middle_replication(self.replications, self.block_len)

    @classmethod
    def identity(cls, trellis: Trellis, block_len: int, replications: int) -> "WeightSet":
        shape = (block_len, trellis.num_edges)
        return cls(np.ones(shape), np.ones(shape), block_len, replications)

    def copy(self) -> "WeightSet":
        return replace(self, path_w=self.path_w.copy(), branch_w=self.branch_w.copy())


def save_weights(ws: WeightSet, path: str | Path) -> None:
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "block_len": ws.block_len,
        "replications": ws.replications,
        "stage_range": list(ws.stage_range),
        "shape": list(ws.path_w.shape),
        "path_weights": ws.path_w.ravel().tolist(),     # row-major
        "branch_weights": ws.branch_w.ravel().tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_weights(path: str | Path) -> WeightSet:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise ValueError(f"unsupported weight file version {doc.get('format_version')!r}")
    shape = tuple(doc["shape"])
    return WeightSet(
        np.array(doc["path_weights"]).reshape(shape),
        np.array(doc["branch_weights"]).reshape(shape),
        doc["block_len"],
        doc["replications"],
    )


# ---------------------------------------------------------------------------
# forward / loss / backward
# ---------------------------------------------------------------------------

def wcva_forward_batch(
    llr: np.ndarray,
    trellis: Trellis,
    weights: WeightSet,
    init: np.ndarray | None = None,
    num_stages: int | None = None,
) -> tuple[ForwardResult, np.ndarray]:
    """Weighted circular sweep over (B, N_c) words; returns (result, llr_rep).

    `num_stages` may stop early (training only needs the rows up to the end
    of the weighted window); default is the full I-fold sweep.
    """
    llr = np.asarray(llr, dtype=np.float64)
    n_u = llr.shape[1] // trellis.n_out
    if n_u != weights.block_len:
        raise ValueError(
            f"weights cover blocks of {weights.block_len} stages, got {n_u}"
        )
    if weights.path_w.shape[1] != trellis.num_edges:
        raise ValueError("weight tables do not match the trellis edge count")
    I = weights.replications
    T = I * n_u if num_stages is None else num_stages
    rep = np.tile(llr, (1, I))
    if init is None:
        init = uniform_init(trellis)
    res = forward_kernel(
        rep,
        trellis,
        init,
        T,
        normalize=False,
        path_w=weights.path_w,
        branch_w=weights.branch_w,
        weight_start=weights.weight_start,
        keep_full=True,
    )
    return res, rep


def wcva_forward(
    llr: np.ndarray,
    trellis: Trellis,
    weights: WeightSet,
    init: np.ndarray | None = None,
) -> tuple[PathMetrics, "WcvaTrace"]:
    """Single-word weighted sweep; the trace carries what backward needs."""
    res, rep = wcva_forward_batch(np.asarray(llr)[None, :], trellis, weights, init)
    pm = PathMetrics(res.lam_full[0], res.choice[0], res.offsets[0], trellis)
    return pm, WcvaTrace(res.lam_full, res.choice, rep, weights, trellis)


@dataclass
class WcvaTrace:
    lam_full: np.ndarray   # (B, T+1, S), unnormalized
    choice: np.ndarray     # (B, T, S)
    llr_rep: np.ndarray    # (B, I*N_c)
    weights: WeightSet
    trellis: Trellis


def surrogate_loss(lam_row: np.ndarray, target_state: int | np.ndarray) -> float | np.ndarray:
    """Cross entropy of softmax(-lam) against the target state.

    Negating the metrics makes the loss reward a *minimal* target metric,
    matching the min-selection decoder.
    """
    lam_row = np.asarray(lam_row, dtype=np.float64)
    single = lam_row.ndim == 1
    lam2 = lam_row[None, :] if single else lam_row
    targets = np.atleast_1d(np.asarray(target_state, dtype=np.int64))
    z = -lam2
    m = z.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(z - m).sum(axis=1))
    losses = lam2[np.arange(lam2.shape[0]), targets] + lse
    return float(losses[0]) if single else losses


def loss_gradient(lam_row: np.ndarray, target_state: int | np.ndarray) -> np.ndarray:
    """d loss / d lam_row = onehot(target) - softmax(-lam_row)."""
    lam_row = np.asarray(lam_row, dtype=np.float64)
    single = lam_row.ndim == 1
    lam2 = lam_row[None, :] if single else lam_row
    targets = np.atleast_1d(np.asarray(target_state, dtype=np.int64))
    z = -lam2
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    g = -p
    g[np.arange(lam2.shape[0]), targets] += 1.0
    return g[0] if single else g


def backward_batch(
    lam_full: np.ndarray,
    choice: np.ndarray,
    llr_rep: np.ndarray,
    weights: WeightSet,
    trellis: Trellis,
    g_last: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate weight gradients from d loss / d lam[window end].

    Gradient flows only along the argmin-selected edges; for the selected
    edge e = 2p + b of cell (t, s):
        d lam[t+1][s] / d path_w[t][e]   = lam[t][p]
        d lam[t+1][s] / d branch_w[t][e] = beta[t][e]
        d lam[t+1][s] / d lam[t][p]      = path_w[t][e]
    Returns summed (not averaged) gradients, shapes like the weight tables.
    """
    B, _, S = lam_full.shape
    half = S >> 1
    V = trellis.n_out
    C = trellis.edge_out_f
    E = trellis.num_edges
    lo, hi = weights.stage_range
    s_idx = np.arange(S)
    q_idx = s_idx & (half - 1)
    bit_s = s_idx >> (trellis.memory - 1)

    g = np.array(g_last, dtype=np.float64, copy=True).reshape(B, S)
    gpw = np.zeros_like(weights.path_w)
    gbw = np.zeros_like(weights.branch_w)
    for t in range(hi - 1, lo - 1, -1):
        ch = choice[:, t, :].astype(np.int64)
        prev = 2 * q_idx + ch
        e_sel = 4 * q_idx + 2 * ch + bit_s
        lam_prev = np.take_along_axis(lam_full[:, t], prev, axis=1)
        beta = llr_rep[:, t * V:(t + 1) * V] @ C.T
        beta_sel = np.take_along_axis(beta, e_sel, axis=1)
        w_row = t - lo
        gpw[w_row] += np.bincount(e_sel.ravel(), weights=(g * lam_prev).ravel(), minlength=E)
        gbw[w_row] += np.bincount(e_sel.ravel(), weights=(g * beta_sel).ravel(), minlength=E)
        contrib = g * weights.path_w[w_row][e_sel]
        ge = contrib[:, :half] * (1 - ch[:, :half]) + contrib[:, half:] * (1 - ch[:, half:])
        go = contrib[:, :half] * ch[:, :half] + contrib[:, half:] * ch[:, half:]
        g = np.empty_like(contrib)
        g[:, 0::2] = ge
        g[:, 1::2] = go
    return gpw, gbw


def backward(trace: WcvaTrace, g_last: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-word weight gradients given d loss / d lam[window end]."""
    if trace.lam_full is None:
        raise ValueError("forward trace required")
    return backward_batch(
        trace.lam_full, trace.choice, trace.llr_rep, trace.weights, trace.trellis, g_last[None, :]
    )


def loss_and_gradients(
    llr: np.ndarray,
    targets: np.ndarray,
    trellis: Trellis,
    weights: WeightSet,
    init: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean surrogate loss over a batch and the matching weight gradients."""
    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    _, hi = weights.stage_range
    res, rep = wcva_forward_batch(llr, trellis, weights, init, num_stages=hi)
    lam_hi = res.lam_full[:, hi]
    losses = surrogate_loss(lam_hi, targets)
    g = loss_gradient(lam_hi, targets)
    gpw, gbw = backward_batch(res.lam_full, res.choice, rep, weights, trellis, g)
    return float(np.mean(losses)), gpw / B, gbw / B


# ---------------------------------------------------------------------------
# optimizer and training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 450
    num_batches: int = 50
    snr_range_db: tuple[float, float] = (-2.0, 0.0)
    rmsprop_decay: float = 0.99
    rmsprop_eps: float = 1e-8
    llr_clip: float = DEFAULT_LLR_CLIP
    replications: int = 3

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.replications % 2 == 0:
            raise ValueError("replication count must be odd")


class RmsProp:
    """Plain RMSProp: v <- a*v + (1-a)*g^2 ; w <- w - lr * g / (sqrt(v) + eps)."""

    def __init__(self, params: list[np.ndarray], lr: float, decay: float = 0.99, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.sq_avg = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        for p, g, v in zip(self.params, grads, self.sq_avg):
            v *= self.decay
            v += (1.0 - self.decay) * g * g
            p -= self.lr * g / (np.sqrt(v) + self.eps)


def train_expert(
    batches: Iterable[tuple[np.ndarray, np.ndarray]],
    trellis: Trellis,
    cfg: TrainConfig,
    block_len: int,
    init: np.ndarray | None = None,
) -> tuple[WeightSet, list[float]]:
    """Run RMSProp over a stream of (llr (B, N_c), target_state (B,)) batches.

    Returns the trained weights and the per-batch loss history.
    """
    ws = WeightSet.identity(trellis, block_len, cfg.replications)
    opt = RmsProp([ws.path_w, ws.branch_w], cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps)
    history: list[float] = []
    for llr, targets in batches:
        loss, gpw, gbw = loss_and_gradients(llr, targets, trellis, ws, init)
        opt.step([gpw, gbw])
        history.append(loss)
    if not history:
        raise ValueError("empty training stream")
    return ws, history


def wcva_decode_batch(
    llr: np.ndarray,
    trellis: Trellis,
    weights: WeightSet,
    traceback_states: np.ndarray | slice,
) -> np.ndarray:
    """Expert decode: weighted sweep, trace-back from the best final state
    within `traceback_states` (an index array or slice into the state space),
    middle-replication bits out."""
    from .viterbi import traceback_batch  # local import to avoid cycle noise

    llr = np.asarray(llr, dtype=np.float64)
    B = llr.shape[0]
    n_u = llr.shape[1] // trellis.n_out
    res, _ = wcva_forward_batch(llr, trellis, weights)
    owned = np.arange(trellis.num_states)[traceback_states]
    ends = owned[res.lam_last[:, owned].argmin(axis=1)]
    bits, _ = traceback_batch(res.choice, ends, trellis)
    lo, hi = middle_replication(weights.replications, n_u)
    return bits[:, lo:hi]
